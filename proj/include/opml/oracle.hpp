#pragma once

#include <Eigen/Dense>
#include <vector>

#include "opml/dataset.hpp"

namespace opml::oracle {

// Slow, obviously-correct references.  They live in the library (not in test
// code) so the theory subcommand can use them in release builds; none of
// them is performance-critical.

// Gauss-Jordan elimination with partial pivoting.  Deliberately does not
// share any code path with the closed-form update it is used to verify.
// Throws DataError on a singular matrix.
Eigen::MatrixXd direct_inverse(const Eigen::MatrixXd& m);

// Explicit a a^T - b b^T (symmetric, rank <= 2).
Eigen::MatrixXd form_A(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Full-sort k-NN with the same tie rules as the fast evaluator: equal
// distances favor the earlier train index, vote ties favor the smaller
// class index.  Distances are Euclidean in the space given by transform
// (pass identity for raw Euclidean).
int naive_knn(const Eigen::MatrixXd& transform, const std::vector<Sample>& train,
              const Eigen::VectorXd& query, int k);

}  // namespace opml::oracle
