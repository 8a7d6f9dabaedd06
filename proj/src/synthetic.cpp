#include "opml/synthetic.hpp"

#include <cmath>

#include "opml/rng.hpp"

namespace opml {

namespace {

double gaussian(Rng& rng) {
    // Box-Muller; one draw per call keeps the stream layout simple
    double u1 = rng.uniform();
    while (u1 == 0.0) u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Dataset synthetic_dataset(int n, int d, int classes, std::uint64_t seed,
                          double spread) {
    Dataset ds;
    ds.dim = d;
    ds.num_classes = classes;
    ds.name = "synthetic";
    Rng rng(seed);

    Eigen::MatrixXd centers(d, classes);
    for (int k = 0; k < classes; ++k)
        for (int i = 0; i < d; ++i) centers(i, k) = gaussian(rng);
    for (int k = 0; k < classes; ++k) centers.col(k).normalize();

    double max_norm = 0.0;
    for (int t = 0; t < n; ++t) {
        Sample s;
        s.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        s.features.resize(d);
        for (int i = 0; i < d; ++i)
            s.features[i] = centers(i, s.label) + spread * gaussian(rng);
        s.stream_index = t;
        max_norm = std::max(max_norm, s.features.norm());
        ds.samples.push_back(std::move(s));
    }
    for (auto& s : ds.samples) s.features /= max_norm;
    return ds;
}

}  // namespace opml
