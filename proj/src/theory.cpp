#include "opml/theory.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "opml/oracle.hpp"
#include "opml/rng.hpp"

namespace opml {

namespace {

constexpr double kSlack = 1e-9;

// Uniform entries in [-1, 1].
Eigen::VectorXd random_vector(Rng& rng, int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = 2.0 * rng.uniform() - 1.0;
    return v;
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = 2.0 * rng.uniform() - 1.0;
    return m;
}

// Random vector inside the unit ball.
Eigen::VectorXd random_unit_ball(Rng& rng, int d) {
    Eigen::VectorXd v = random_vector(rng, d);
    const double n = v.norm();
    if (n > 1.0) v /= n / std::pow(rng.uniform(), 1.0 / d);
    return v;
}

Sample make_sample(Eigen::VectorXd x, int label) {
    Sample s;
    s.features = std::move(x);
    s.label = label;
    return s;
}

void note_violation(BoundCheck& c, double margin) {
    if (margin < c.worst_margin) c.worst_margin = margin;
    if (margin < -kSlack) ++c.violations;
}

// B = ((gamma A)^2 - eta * gamma * A) / (eta + beta), formed explicitly,
// and its Frobenius cap for R = 1.
double b_norm_margin(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const UpdateScalars& s) {
    const Eigen::MatrixXd A = oracle::form_A(a, b);
    const Eigen::MatrixXd gA = s.gamma * A;
    const Eigen::MatrixXd B = (gA * gA - s.eta * gA) / (s.eta + s.beta);
    const double cap = 32.0 * std::abs(s.gamma * s.gamma / (s.eta + s.beta)) +
                       4.0 * std::sqrt(2.0) * std::abs(s.eta * s.gamma / (s.eta + s.beta));
    return cap - B.norm();
}

// Lockstep one-pass / batch-oracle training used by the divergence and
// loss-gap checks.  The batch trainer replays the one-pass triplet first,
// then the remaining triplets in enumeration order.
struct LockstepRun {
    MetricMatrix one_pass;
    MetricMatrix batch;
    BoundCheck* check = nullptr;
    double gamma = 0.1;
    bool loss_gap_mode = false;
    double final_divergence = 0.0;

    void run(const std::vector<Sample>& stream, std::uint64_t seed) {
        const int d = stream.empty() ? 0
                                     : static_cast<int>(stream.front().features.size());
        one_pass = MetricMatrix::identity(d);
        batch = MetricMatrix::identity(d);
        ClassLatestBuffer buffer(seed);
        std::vector<Sample> history;

        for (const auto& s : stream) {
            auto one = buffer.observe(s);
            auto all = batch_observe_oracle(history, s);

            if (loss_gap_mode && one && !all.empty()) {
                const double psi1 = hinge_loss(one_pass, *one);
                double psi2 = 0.0;
                for (const auto& t : all) psi2 += hinge_loss(batch, t);
                psi2 /= static_cast<double>(all.size());
                const double u = std::max(one_pass.L.norm(), batch.L.norm());
                // 2*(alpha+xi+1)*R^2*U^2, alpha = xi = 1, R = 1
                note_violation(*check, 6.0 * u * u - (psi1 - psi2));
                ++check->trials;
            }

            if (one) apply(one_pass, *one, false);

            // batch: the one-pass triplet first, then the rest
            if (one) {
                apply(batch, *one, true);
                std::erase_if(all, [&](const Triplet& t) {
                    return t.positive.stream_index == one->positive.stream_index &&
                           t.negative.stream_index == one->negative.stream_index;
                });
            }
            for (const auto& t : all) apply(batch, t, true);
            history.push_back(s);
        }
        final_divergence = (one_pass.L - batch.L).norm();
    }

    void apply(MetricMatrix& m, const Triplet& t, bool is_batch) {
        UpdateScalars s;
        if (opml_update(m, t, gamma, &s) == UpdateOutcome::Active &&
            is_batch && !loss_gap_mode) {
            note_violation(*check,
                           b_norm_margin(t.anchor.features - t.positive.features,
                                         t.anchor.features - t.negative.features, s));
            ++check->trials;
        }
    }
};

}  // namespace

BoundCheck check_lemma1(std::size_t trials, int d, std::uint64_t seed) {
    BoundCheck c;
    c.name = "lemma1_eigenvalue_sandwich";
    c.trials = trials;
    Rng rng(seed);
    for (std::size_t i = 0; i < trials; ++i) {
        const Eigen::MatrixXd g1 = random_matrix(rng, d, d);
        const Eigen::MatrixXd g2 = random_matrix(rng, d, d);
        const Eigen::MatrixXd m1 = g1.transpose() * g1;
        const Eigen::MatrixXd m2 = g2.transpose() * g2;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(m1), es2(m2),
            eso(m1 - m2);
        const double hi = es1.eigenvalues().maxCoeff();
        const double lo = -es2.eigenvalues().maxCoeff();
        for (Eigen::Index j = 0; j < eso.eigenvalues().size(); ++j) {
            const double ev = eso.eigenvalues()[j];
            note_violation(c, std::min(hi - ev, ev - lo));
        }
    }
    return c;
}

BoundCheck check_lemma2_pd(std::size_t trials, int max_d, std::uint64_t seed,
                           double gamma_lo, double gamma_hi) {
    BoundCheck c;
    c.name = "lemma2_positive_definite";
    c.trials = trials;
    Rng rng(seed);
    for (std::size_t i = 0; i < trials; ++i) {
        const int d = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_d - 1)));
        const Eigen::VectorXd xt = random_unit_ball(rng, d);
        const Eigen::VectorXd xp = random_unit_ball(rng, d);
        const Eigen::VectorXd xq = random_unit_ball(rng, d);
        const double gamma = gamma_lo + (gamma_hi - gamma_lo) * rng.uniform();
        if (!check_positive_definite(xt - xp, xt - xq, gamma)) {
            ++c.violations;
            note_violation(c, -1.0);
        }
    }
    return c;
}

BoundCheck check_theorem1_identity(std::size_t trials, int max_d,
                                   std::uint64_t seed, double gamma_lo,
                                   double gamma_hi, double tol) {
    BoundCheck c;
    c.name = "theorem1_closed_form";
    c.trials = trials;
    Rng rng(seed);
    for (std::size_t i = 0; i < trials; ++i) {
        const int d = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_d - 1)));
        Triplet t{make_sample(random_unit_ball(rng, d), 0),
                  make_sample(random_unit_ball(rng, d), 0),
                  make_sample(random_unit_ball(rng, d), 1)};
        const double gamma = gamma_lo + (gamma_hi - gamma_lo) * rng.uniform();
        MetricMatrix m{random_matrix(rng, d, d)};
        // at least one of the two orientations has positive hinge loss
        if (hinge_loss(m, t) <= 0.0) std::swap(t.positive, t.negative);
        if (hinge_loss(m, t) <= 0.0) {
            // identical distances; nudge is not allowed, just skip the trial
            continue;
        }

        const Eigen::VectorXd a = t.anchor.features - t.positive.features;
        const Eigen::VectorXd b = t.anchor.features - t.negative.features;
        const UpdateScalars s = rank2_inverse_factors(a, b, gamma);
        const Eigen::MatrixXd gA = gamma * oracle::form_A(a, b);
        const Eigen::MatrixXd closed =
            Eigen::MatrixXd::Identity(d, d) - (s.eta * gA - gA * gA) / (s.eta + s.beta);

        // inverse identity residual
        const Eigen::MatrixXd iplus = Eigen::MatrixXd::Identity(d, d) + gA;
        note_violation(c, tol - (iplus * closed - Eigen::MatrixXd::Identity(d, d)).norm());

        // fast update vs direct-inverse oracle
        MetricMatrix updated = m;
        if (opml_update(updated, t, gamma) != UpdateOutcome::Active) continue;
        const Eigen::MatrixXd expect = m.L * oracle::direct_inverse(iplus);
        note_violation(c, tol * (1.0 + m.L.norm()) - (updated.L - expect).norm());
    }
    return c;
}

BoundCheck check_appendix_ranges(const TrainTrace& trace, double gamma) {
    BoundCheck c;
    c.name = "appendixA_scalar_ranges";
    for (const auto& step : trace.steps) {
        if (!step.had_triplet || !step.triplet) continue;
        if (step.outcome != UpdateOutcome::Active &&
            step.outcome != UpdateOutcome::SkippedSingular)
            continue;
        ++c.trials;
        // open intervals for R = 1
        note_violation(c, std::min(2.25 - step.eta, step.eta - (-0.25)));
        note_violation(c, std::min(25.0 / 32.0 - step.beta, step.beta - (-1.0)));

        const Eigen::VectorXd a =
            step.triplet->anchor.features - step.triplet->positive.features;
        const Eigen::VectorXd b =
            step.triplet->anchor.features - step.triplet->negative.features;
        note_violation(c, 4.0 * std::sqrt(2.0) - oracle::form_A(a, b).norm());
        note_violation(c, b_norm_margin(a, b, UpdateScalars{step.eta, step.beta, gamma}));
    }
    return c;
}

BoundCheck check_divergence(const std::vector<Sample>& stream,
                            const TrainConfig& cfg) {
    BoundCheck c;
    c.name = "theorem2_batch_divergence";
    LockstepRun run;
    run.check = &c;
    run.gamma = cfg.gamma;
    run.run(stream, cfg.seed);
    std::ostringstream os;
    os << "final ||L - L*||_F = " << run.final_divergence;
    c.notes.push_back(os.str());
    return c;
}

BoundCheck check_loss_gap(const std::vector<Sample>& stream,
                          const TrainConfig& cfg) {
    BoundCheck c;
    c.name = "theorem3_loss_gap";
    LockstepRun run;
    run.check = &c;
    run.gamma = cfg.gamma;
    run.loss_gap_mode = true;
    run.run(stream, cfg.seed);
    return c;
}

BoundCheck check_regret_envelope(const TrainTrace& trace,
                                 const MetricMatrix& final_metric) {
    BoundCheck c;
    c.name = "theorem4_regret_envelope";
    double u = 0.0;
    std::size_t steps = 0;
    for (const auto& s : trace.steps) {
        u = std::max(u, s.frob_norm);
        if (s.had_triplet) ++steps;
    }
    c.trials = 1;
    if (steps == 0) return c;  // vacuous
    const double regret = estimate_regret(trace, final_metric);
    const double bound = 6.0 * static_cast<double>(steps) * u * u;
    note_violation(c, bound - regret);
    std::ostringstream os;
    os << "regret = " << regret << ", bound = " << bound << " (T = " << steps
       << ", U = " << u << ")";
    c.notes.push_back(os.str());
    return c;
}

bool BoundReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const BoundCheck& c) { return c.passed(); });
}

std::string BoundReport::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    auto& arr = j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json e;
        e["name"] = c.name;
        e["trials"] = c.trials;
        e["violations"] = c.violations;
        e["worst_margin"] = c.worst_margin;
        e["notes"] = c.notes;
        arr.push_back(std::move(e));
    }
    return j.dump(2);
}

std::string BoundReport::to_table() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.passed() ? "PASS " : "FAIL ") << c.name << "  trials=" << c.trials
           << " violations=" << c.violations << " worst_margin=" << c.worst_margin;
        for (const auto& n : c.notes) os << "  [" << n << "]";
        os << '\n';
    }
    return os.str();
}

}  // namespace opml
