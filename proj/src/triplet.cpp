#include "opml/triplet.hpp"

namespace opml {

std::optional<Triplet> ClassLatestBuffer::observe(const Sample& s) {
    if (dim_ >= 0 && s.features.size() != dim_)
        throw DataError("observe: sample dimension " +
                        std::to_string(s.features.size()) +
                        " does not match buffer dimension " + std::to_string(dim_));
    dim_ = static_cast<int>(s.features.size());

    auto it = latest_.find(s.label);
    if (it == latest_.end()) {
        // first sample of a new class: extend the buffer, no triplet
        latest_.emplace(s.label, s);
        return std::nullopt;
    }

    std::optional<Triplet> out;
    if (latest_.size() >= 2) {
        // pick a stored class uniformly among those != s.label
        auto k = rng_.below(latest_.size() - 1);
        auto neg = latest_.begin();
        for (;; ++neg) {
            if (neg->first == s.label) continue;
            if (k == 0) break;
            --k;
        }
        out = Triplet{s, it->second, neg->second};
    }
    it->second = s;
    return out;
}

std::vector<Triplet> batch_observe_oracle(const std::vector<Sample>& history,
                                          const Sample& s) {
    std::vector<Triplet> out;
    for (const auto& p : history) {
        if (p.label != s.label) continue;
        for (const auto& q : history) {
            if (q.label == s.label) continue;
            out.push_back(Triplet{s, p, q});
        }
    }
    return out;
}

}  // namespace opml
