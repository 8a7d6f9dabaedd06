#pragma once

#include <string>
#include <vector>

#include "opml/trainer.hpp"

namespace opml {

// Empirical verification of the algebraic guarantees behind the update rule
// (eigenvalue sandwich, positive definiteness, closed-form inverse identity,
// scalar ranges, one-pass vs batch divergence and loss gap).

struct BoundCheck {
    std::string name;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;  // most negative slack seen (>= 0 means pass)
    std::vector<std::string> notes;

    bool passed() const { return violations == 0; }
};

struct BoundReport {
    std::vector<BoundCheck> checks;
    std::uint64_t seed = 0;

    bool all_passed() const;
    std::string to_json() const;
    std::string to_table() const;
};

// Eigenvalues of M1 - M2 (M1, M2 PSD) lie in [-lmax(M2), lmax(M1)].
BoundCheck check_lemma1(std::size_t trials, int d, std::uint64_t seed);

// I + gamma*A is PD for normalized samples and gamma in (0, 1/4).
BoundCheck check_lemma2_pd(std::size_t trials, int max_d, std::uint64_t seed,
                           double gamma_lo = 0.01, double gamma_hi = 0.24);

// (I + gamma*A) * closed_form_inverse == I, and the closed-form update
// matches L * direct_inverse(I + gamma*A).
BoundCheck check_theorem1_identity(std::size_t trials, int max_d,
                                   std::uint64_t seed, double gamma_lo = 0.01,
                                   double gamma_hi = 0.24, double tol = 1e-9);

// Recorded eta in (-0.25, 2.25), beta in (-1, 25/32), ||A||_F <= 4*sqrt(2),
// and each explicit ||B||_F within its per-step cap (R = 1).
BoundCheck check_appendix_ranges(const TrainTrace& trace, double gamma);

// One-pass vs batch-oracle trainers on a shared stream: asserts the per-step
// ||B||_F caps of the batch updates; reports the final Frobenius divergence.
BoundCheck check_divergence(const std::vector<Sample>& stream,
                            const TrainConfig& cfg);

// Per-step one-pass loss minus batch mean loss <= 2*(alpha+xi+1)*R^2*U^2
// with alpha = xi = 1, R = 1, U = max(||L||_F, ||L*||_F).
BoundCheck check_loss_gap(const std::vector<Sample>& stream,
                          const TrainConfig& cfg);

// Estimated regret <= 2*T*(alpha+xi+1)*R^2*U^2, alpha = xi = 1, R = 1,
// U = max over recorded ||L_t||_F.
BoundCheck check_regret_envelope(const TrainTrace& trace,
                                 const MetricMatrix& final_metric);

}  // namespace opml
