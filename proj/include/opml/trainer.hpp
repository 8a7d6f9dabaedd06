#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "opml/metric.hpp"

namespace opml {

struct TrainConfig {
    double gamma = 0.1;    // triplet regularizer, in (0, 1/4)
    double gamma1 = 0.1;   // cold-start pair regularizer, > 0
    double gamma2 = 0.1;   // triplet regularizer of the cold-start trainer
    std::uint64_t seed = 0;
    bool record_trace = false;

    void validate() const;
};

struct TraceStep {
    double loss_before = 0.0;  // hinge loss of the emitted triplet, 0 if none
    UpdateOutcome outcome = UpdateOutcome::Passive;
    bool had_triplet = false;
    bool pair_step = false;    // cold-start pre-stage pair update
    double eta = 1.0;
    double beta = 0.0;
    double frob_norm = 0.0;    // ||L_t||_F after the step
    std::optional<Triplet> triplet;  // copy kept only when record_trace
};

struct TrainTrace {
    std::vector<TraceStep> steps;
    std::size_t active_updates = 0;
    std::size_t pair_updates = 0;
    std::size_t skipped_degenerate = 0;
    std::size_t skipped_singular = 0;

    void export_csv(const std::string& path) const;
};

struct TrainResult {
    MetricMatrix metric;
    TrainTrace trace;
};

// Passive-aggressive online loop over the stream: one-pass triplet
// construction, hinge test, rank-2 closed-form update.
TrainResult train_opml(const std::vector<Sample>& stream, const TrainConfig& cfg);

// Cold-start variant: while only one class has been observed, consecutive
// same-class samples drive Sherman-Morrison pair updates (gamma1); once a
// second class appears the triplet loop takes over (gamma2).
TrainResult train_copml(const std::vector<Sample>& stream, const TrainConfig& cfg);

// Sum over recorded triplet steps of G_t(L_t) - G_t(L_star), where G_t is the
// hinge loss of the step-t triplet.  Requires record_trace.
double estimate_regret(const TrainTrace& trace, const MetricMatrix& l_star);

}  // namespace opml
