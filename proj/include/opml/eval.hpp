#pragma once

#include <string>
#include <vector>

#include "opml/trainer.hpp"

namespace opml {

enum class TrainerKind { Identity, Opml, Copml };

TrainerKind trainer_kind_from_string(const std::string& s);
std::string to_string(TrainerKind k);

struct EvalReport {
    double error_rate_mean = 0.0;
    double error_rate_std = 0.0;
    int runs = 0;
    std::vector<double> per_run_errors;
    double wall_time_total_s = 0.0;  // kept out of serialized reports
    int knn_k = 5;

    std::string to_json() const;
};

struct RocCurve {
    // (false positive rate, true positive rate), ordered by threshold
    std::vector<std::pair<double, double>> points;
    double auc = 0.0;

    std::string to_json() const;
    void export_csv(const std::string& path) const;
};

struct VerificationPair {
    Eigen::VectorXd x, y;
    bool same = false;
};

// Majority label among the k nearest training samples under ||L(x-q)||^2.
// Equal distances favor the earlier train index; vote ties the smaller label.
// k is clamped to |train|.
int knn_classify(const MetricMatrix& m, const std::vector<Sample>& train,
                 const Eigen::VectorXd& query, int k);

// Fraction of test samples misclassified.
double error_rate(const MetricMatrix& m, const std::vector<Sample>& train,
                  const std::vector<Sample>& test, int k);

// Score pairs as min-max-normalized similarity 1 - D/maxD, sweep all
// thresholds, AUC by trapezoid rule.
RocCurve verification_roc(const MetricMatrix& m,
                          const std::vector<VerificationPair>& pairs);

// One split -> normalize -> train -> test-error cycle.  The triplet
// sampling seed follows the split seed.
double eval_split(const Dataset& ds, const SplitSpec& spec, TrainerKind kind,
                  const TrainConfig& cfg, int k);

// Protocol of the benchmark harness: for each run, reseed the split, fit the
// normalization on the train half, train, and score a k-NN on the test half.
EvalReport repeated_eval(const Dataset& ds, TrainerKind kind,
                         const TrainConfig& cfg, int runs, int k,
                         double train_fraction = 0.5);

// Pick gamma from a grid by splitting each training half again and scoring
// on the held-back part; returns the grid value with the lowest mean error.
double select_gamma_cv(const Dataset& ds, TrainerKind kind, TrainConfig cfg,
                       const std::vector<double>& grid, int cv_runs, int k);

}  // namespace opml
