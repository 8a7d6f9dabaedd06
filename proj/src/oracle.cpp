#include "opml/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace opml::oracle {

Eigen::MatrixXd direct_inverse(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DataError("direct_inverse: non-square matrix");
    const auto n = m.rows();
    Eigen::MatrixXd a = m;
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);

    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) < 1e-14)
            throw DataError("direct_inverse: singular matrix");
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            inv.row(pivot).swap(inv.row(col));
        }
        const double p = a(col, col);
        a.row(col) /= p;
        inv.row(col) /= p;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            a.row(r) -= f * a.row(col);
            inv.row(r) -= f * inv.row(col);
        }
    }
    return inv;
}

Eigen::MatrixXd form_A(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw DataError("form_A: dimension mismatch");
    return a * a.transpose() - b * b.transpose();
}

int naive_knn(const Eigen::MatrixXd& transform, const std::vector<Sample>& train,
              const Eigen::VectorXd& query, int k) {
    if (train.empty()) throw DataError("naive_knn: empty training set");
    k = std::min<int>(k, static_cast<int>(train.size()));

    struct Entry {
        double dist;
        std::size_t index;
        int label;
    };
    std::vector<Entry> all;
    all.reserve(train.size());
    const Eigen::VectorXd tq = transform * query;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double d = (transform * train[i].features - tq).squaredNorm();
        all.push_back({d, i, train[i].label});
    }
    std::sort(all.begin(), all.end(), [](const Entry& x, const Entry& y) {
        return x.dist != y.dist ? x.dist < y.dist : x.index < y.index;
    });

    std::map<int, int> votes;
    for (int i = 0; i < k; ++i) ++votes[all[static_cast<std::size_t>(i)].label];
    int best = -1, best_count = -1;
    for (const auto& [label, count] : votes) {
        if (count > best_count) {  // map order breaks vote ties by smallest label
            best = label;
            best_count = count;
        }
    }
    return best;
}

}  // namespace opml::oracle
