#include "opml/metric.hpp"

#include <Eigen/Cholesky>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace opml {

static_assert(std::endian::native == std::endian::little,
              "metric binary format is little-endian");

namespace {
constexpr char kMagic[8] = {'O', 'P', 'M', 'L', 'M', 'T', 'X', '1'};
}

double transformed_distance(const MetricMatrix& m, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) {
    if (x.size() != y.size() || x.size() != m.L.cols())
        throw DataError("transformed_distance: dimension mismatch");
    return (m.L * (x - y)).squaredNorm();
}

double hinge_loss(const MetricMatrix& m, const Triplet& t) {
    const double dp = transformed_distance(m, t.anchor.features, t.positive.features);
    const double dq = transformed_distance(m, t.anchor.features, t.negative.features);
    return std::max(0.0, 1.0 + dp - dq);
}

UpdateScalars rank2_inverse_factors(const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& b, double gamma) {
    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    const double ab = a.dot(b);
    // tr(A) = a'a - b'b; tr(A^2) = (a'a)^2 + (b'b)^2 - 2(a'b)^2
    const double tr = aa - bb;
    const double tr2 = aa * aa + bb * bb - 2.0 * ab * ab;
    UpdateScalars s;
    s.gamma = gamma;
    s.eta = 1.0 + gamma * tr;
    s.beta = 0.5 * (gamma * tr * gamma * tr - gamma * gamma * tr2);
    return s;
}

UpdateOutcome opml_update(MetricMatrix& m, const Triplet& t, double gamma,
                          UpdateScalars* scalars_out) {
    if (t.anchor.features.size() != m.L.cols() ||
        t.positive.features.size() != m.L.cols() ||
        t.negative.features.size() != m.L.cols())
        throw DataError("opml_update: dimension mismatch");

    const auto d = m.L.cols();
    const Eigen::VectorXd a = t.anchor.features - t.positive.features;
    const Eigen::VectorXd b = t.anchor.features - t.negative.features;
    // both mapped differences in one sweep over L (column-major axpy); they
    // give the hinge test and are reused by the rank-2 write below
    Eigen::VectorXd La = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd Lb = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto col = m.L.col(j);
        La.noalias() += a[j] * col;
        Lb.noalias() += b[j] * col;
    }
    if (1.0 + La.squaredNorm() - Lb.squaredNorm() <= 0.0)
        return UpdateOutcome::Passive;
    if (a.isZero(0.0) || b.isZero(0.0)) return UpdateOutcome::SkippedDegenerate;

    const UpdateScalars s = rank2_inverse_factors(a, b, gamma);
    if (scalars_out) *scalars_out = s;
    if (s.singular()) return UpdateOutcome::SkippedSingular;

    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    const double dot_ab = a.dot(b);
    const double c1 = s.eta * gamma / (s.eta + s.beta);
    const double c2 = gamma * gamma / (s.eta + s.beta);

    // L(I + gamma A)^-1 = L + (La) p^T + (Lb) q^T, applied column by column
    // in a single read-modify-write sweep over L, no d x d temporaries
    const Eigen::VectorXd p = (c2 * aa - c1) * a - c2 * dot_ab * b;
    const Eigen::VectorXd q = (c1 + c2 * bb) * b - c2 * dot_ab * a;
    for (Eigen::Index j = 0; j < d; ++j)
        m.L.col(j).noalias() += p[j] * La + q[j] * Lb;
    return UpdateOutcome::Active;
}

void pair_update(MetricMatrix& m, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& y, double gamma1) {
    if (x.size() != y.size() || x.size() != m.L.cols())
        throw DataError("pair_update: dimension mismatch");
    const Eigen::VectorXd u = x - y;
    const double denom = 1.0 + gamma1 * u.squaredNorm();  // always >= 1
    const Eigen::VectorXd Lu = m.L * u;
    m.L.noalias() -= (gamma1 / denom) * Lu * u.transpose();
}

bool check_positive_definite(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             double gamma) {
    const auto d = a.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
    M.noalias() += gamma * (a * a.transpose() - b * b.transpose());
    return Eigen::LLT<Eigen::MatrixXd>(M).info() == Eigen::Success;
}

void MetricMatrix::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t d = static_cast<std::uint64_t>(L.rows());
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    // row-major doubles
    for (Eigen::Index i = 0; i < L.rows(); ++i)
        for (Eigen::Index j = 0; j < L.cols(); ++j) {
            const double v = L(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    if (!out) throw DataError("write failure on '" + path + "'");
}

MetricMatrix MetricMatrix::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("'" + path + "' is not a metric file");
    std::uint64_t d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!in || d == 0 || d > (1u << 20))
        throw DataError("'" + path + "': bad dimension");
    MetricMatrix m{Eigen::MatrixXd(d, d)};
    for (std::uint64_t i = 0; i < d; ++i)
        for (std::uint64_t j = 0; j < d; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m.L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    if (!in) throw DataError("'" + path + "': truncated metric file");
    return m;
}

std::string MetricMatrix::to_json() const {
    nlohmann::json j;
    j["dim"] = L.rows();
    auto& rows = j["rows"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < L.cols(); ++c) row.push_back(L(i, c));
        rows.push_back(std::move(row));
    }
    return j.dump(2);
}

MetricMatrix MetricMatrix::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const auto d = j.at("dim").get<Eigen::Index>();
    MetricMatrix m{Eigen::MatrixXd(d, d)};
    const auto& rows = j.at("rows");
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index c = 0; c < d; ++c) m.L(i, c) = rows.at(i).at(c).get<double>();
    return m;
}

}  // namespace opml
