#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "opml/triplet.hpp"

namespace opml {

// Transformation matrix L (d x d, initialized to identity).  The implied
// Mahalanobis matrix is M = L^T L; L is what the update rules touch.
struct MetricMatrix {
    Eigen::MatrixXd L;

    static MetricMatrix identity(int d) {
        return MetricMatrix{Eigen::MatrixXd::Identity(d, d)};
    }
    int dim() const { return static_cast<int>(L.rows()); }

    void save_binary(const std::string& path) const;
    static MetricMatrix load_binary(const std::string& path);
    std::string to_json() const;
    static MetricMatrix from_json(const std::string& text);
};

// Scalars of the rank-2 closed-form inverse of I + gamma*A,
// A = a a^T - b b^T:  eta = 1 + tr(gamma A),
// beta = ((tr gamma A)^2 - tr((gamma A)^2)) / 2.
struct UpdateScalars {
    double eta = 1.0;
    double beta = 0.0;
    double gamma = 0.0;

    // |eta + beta| below this relative tolerance means the closed form is
    // singular and the update must be skipped.
    bool singular() const {
        return std::abs(eta + beta) < 1e-12 * (1.0 + std::abs(eta) + std::abs(beta));
    }
};

enum class UpdateOutcome { Active, Passive, SkippedDegenerate, SkippedSingular };

// ||L (x - y)||_2^2
double transformed_distance(const MetricMatrix& m, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y);

// max(0, 1 + D_L(anchor, positive) - D_L(anchor, negative))
double hinge_loss(const MetricMatrix& m, const Triplet& t);

// eta/beta from inner products only; O(d) time, A never formed.
UpdateScalars rank2_inverse_factors(const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b, double gamma);

// One passive-aggressive step on a triplet.  Active branch computes
// L (I + gamma A)^-1 via the rank-2 closed form with O(d^2) work.
// scalars_out, when given, receives eta/beta of the attempted update.
UpdateOutcome opml_update(MetricMatrix& m, const Triplet& t, double gamma,
                          UpdateScalars* scalars_out = nullptr);

// Sherman-Morrison pair step for a same-class pair (x, y):
// L <- L - gamma1 * L (x-y)(x-y)^T / (1 + gamma1 ||x-y||^2).
void pair_update(MetricMatrix& m, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& y, double gamma1);

// Diagnostic: is I + gamma (a a^T - b b^T) symmetric positive definite?
// Forms the matrix explicitly and attempts a Cholesky factorization; O(d^3).
bool check_positive_definite(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             double gamma);

}  // namespace opml
