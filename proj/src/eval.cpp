#include "opml/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

namespace opml {

TrainerKind trainer_kind_from_string(const std::string& s) {
    if (s == "identity" || s == "euclidean") return TrainerKind::Identity;
    if (s == "opml") return TrainerKind::Opml;
    if (s == "copml") return TrainerKind::Copml;
    throw DataError("unknown trainer '" + s + "'");
}

std::string to_string(TrainerKind k) {
    switch (k) {
        case TrainerKind::Identity: return "euclidean";
        case TrainerKind::Opml: return "opml";
        case TrainerKind::Copml: return "copml";
    }
    return "?";
}

namespace {

int knn_vote(const std::vector<std::pair<double, int>>& dist_label, int k) {
    // dist_label is sorted by (distance, train index)
    std::map<int, int> votes;
    for (int i = 0; i < k; ++i) ++votes[dist_label[static_cast<std::size_t>(i)].second];
    int best = -1, best_count = -1;
    for (const auto& [label, count] : votes) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

// Transform the train set once, then classify queries in the mapped space.
class KnnIndex {
public:
    KnnIndex(const MetricMatrix& m, const std::vector<Sample>& train)
        : train_(train), transform_(m.L) {
        if (train.empty()) throw DataError("knn: empty training set");
        mapped_.resize(m.L.rows(), static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i)
            mapped_.col(static_cast<Eigen::Index>(i)) = m.L * train[i].features;
    }

    int classify(const Eigen::VectorXd& query, int k) const {
        k = std::min<int>(k, static_cast<int>(train_.size()));
        const Eigen::VectorXd q = transform_ * query;
        std::vector<std::pair<double, int>> dl(train_.size());
        for (std::size_t i = 0; i < train_.size(); ++i)
            dl[i] = {(mapped_.col(static_cast<Eigen::Index>(i)) - q).squaredNorm(),
                     static_cast<int>(i)};
        std::partial_sort(dl.begin(), dl.begin() + k, dl.end());
        for (auto& e : dl) e.second = train_[static_cast<std::size_t>(e.second)].label;
        return knn_vote(dl, k);
    }

private:
    const std::vector<Sample>& train_;
    Eigen::MatrixXd transform_;
    Eigen::MatrixXd mapped_;
};

}  // namespace

int knn_classify(const MetricMatrix& m, const std::vector<Sample>& train,
                 const Eigen::VectorXd& query, int k) {
    if (k < 1) throw DataError("knn: k must be >= 1");
    return KnnIndex(m, train).classify(query, k);
}

double error_rate(const MetricMatrix& m, const std::vector<Sample>& train,
                  const std::vector<Sample>& test, int k) {
    if (test.empty()) throw DataError("error_rate: empty test set");
    const KnnIndex index(m, train);
    std::size_t wrong = 0;
    for (const auto& s : test)
        if (index.classify(s.features, k) != s.label) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(test.size());
}

RocCurve verification_roc(const MetricMatrix& m,
                          const std::vector<VerificationPair>& pairs) {
    std::size_t n_same = 0;
    for (const auto& p : pairs) n_same += p.same ? 1 : 0;
    if (n_same == 0 || n_same == pairs.size())
        throw DataError("verification_roc: need both same and different pairs");

    std::vector<std::pair<double, bool>> scored;  // (similarity, is_same)
    scored.reserve(pairs.size());
    double max_d = 0.0;
    std::vector<double> dist(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        dist[i] = transformed_distance(m, pairs[i].x, pairs[i].y);
        max_d = std::max(max_d, dist[i]);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i)
        scored.emplace_back(max_d > 0.0 ? 1.0 - dist[i] / max_d : 1.0,
                            pairs[i].same);
    std::sort(scored.begin(), scored.end(),
              [](auto& a, auto& b) { return a.first > b.first; });

    RocCurve roc;
    const double np = static_cast<double>(n_same);
    const double nn = static_cast<double>(pairs.size() - n_same);
    std::size_t tp = 0, fp = 0;
    roc.points.emplace_back(0.0, 0.0);
    for (std::size_t i = 0; i < scored.size();) {
        // advance over a block of tied scores so ties move diagonally
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            if (scored[j].second) ++tp;
            else ++fp;
            ++j;
        }
        i = j;
        roc.points.emplace_back(static_cast<double>(fp) / nn,
                                static_cast<double>(tp) / np);
    }
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        const auto& [x0, y0] = roc.points[i - 1];
        const auto& [x1, y1] = roc.points[i];
        roc.auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    return roc;
}

namespace {

struct SplitSets {
    Dataset train, test;
};

SplitSets split_and_normalize(const Dataset& ds, const SplitSpec& spec) {
    auto [train_samples, test_samples] = make_stream(ds, spec);
    SplitSets out;
    out.train.samples = std::move(train_samples);
    out.test.samples = std::move(test_samples);
    out.train.dim = out.test.dim = ds.dim;
    out.train.num_classes = out.test.num_classes = ds.num_classes;
    NormParams norm = zscore_fit_apply(out.train, out.test);
    unit_ball_rescale(out.train, out.test, norm);
    return out;
}

MetricMatrix train_metric(const std::vector<Sample>& stream, TrainerKind kind,
                          const TrainConfig& cfg, int dim) {
    switch (kind) {
        case TrainerKind::Identity: return MetricMatrix::identity(dim);
        case TrainerKind::Opml: return train_opml(stream, cfg).metric;
        case TrainerKind::Copml: return train_copml(stream, cfg).metric;
    }
    throw DataError("bad trainer kind");
}

}  // namespace

double eval_split(const Dataset& ds, const SplitSpec& spec, TrainerKind kind,
                  const TrainConfig& cfg, int k) {
    const SplitSets sets = split_and_normalize(ds, spec);
    TrainConfig run_cfg = cfg;
    run_cfg.seed = spec.seed;  // triplet sampling follows the split seed
    const MetricMatrix m = train_metric(sets.train.samples, kind, run_cfg, ds.dim);
    return error_rate(m, sets.train.samples, sets.test.samples, k);
}

EvalReport repeated_eval(const Dataset& ds, TrainerKind kind,
                         const TrainConfig& cfg, int runs, int k,
                         double train_fraction) {
    if (runs < 1) throw DataError("repeated_eval: runs must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    EvalReport report;
    report.runs = runs;
    report.knn_k = k;
    report.per_run_errors.reserve(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r) {
        SplitSpec spec;
        spec.train_fraction = train_fraction;
        spec.seed = cfg.seed + static_cast<std::uint64_t>(r);
        report.per_run_errors.push_back(eval_split(ds, spec, kind, cfg, k));
    }

    const double n = static_cast<double>(runs);
    const double mean = std::accumulate(report.per_run_errors.begin(),
                                        report.per_run_errors.end(), 0.0) / n;
    double var = 0.0;
    for (double e : report.per_run_errors) var += (e - mean) * (e - mean);
    report.error_rate_mean = mean;
    report.error_rate_std = runs > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    report.wall_time_total_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double select_gamma_cv(const Dataset& ds, TrainerKind kind, TrainConfig cfg,
                       const std::vector<double>& grid, int cv_runs, int k) {
    if (kind == TrainerKind::Identity || grid.empty())
        return cfg.gamma;

    double best_gamma = grid.front();
    double best_err = std::numeric_limits<double>::infinity();
    for (double gamma : grid) {
        double total = 0.0;
        for (int j = 0; j < cv_runs; ++j) {
            // outer split: take the training half only
            SplitSpec outer;
            outer.seed = cfg.seed + 7919 * static_cast<std::uint64_t>(j + 1);
            const SplitSets outer_sets = [&] {
                auto [tr, te] = make_stream(ds, outer);
                SplitSets s;
                s.train.samples = std::move(tr);
                s.train.dim = ds.dim;
                s.train.num_classes = ds.num_classes;
                (void)te;
                return s;
            }();
            // inner split of the training half: fit vs validate
            SplitSpec inner;
            inner.seed = outer.seed + 1;
            TrainConfig trial = cfg;
            trial.gamma = trial.gamma2 = gamma;
            total += eval_split(outer_sets.train, inner, kind, trial, k);
        }
        const double mean = total / static_cast<double>(cv_runs);
        if (mean < best_err) {
            best_err = mean;
            best_gamma = gamma;
        }
    }
    return best_gamma;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["error_rate_mean"] = error_rate_mean;
    j["error_rate_std"] = error_rate_std;
    j["runs"] = runs;
    j["knn_k"] = knn_k;
    j["per_run_errors"] = per_run_errors;
    return j.dump(2);
}

std::string RocCurve::to_json() const {
    nlohmann::json j;
    j["auc"] = auc;
    auto& pts = j["points"] = nlohmann::json::array();
    for (const auto& [fpr, tpr] : points) pts.push_back({fpr, tpr});
    return j.dump(2);
}

void RocCurve::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : points) out << fpr << ',' << tpr << '\n';
}

}  // namespace opml
