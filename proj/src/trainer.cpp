#include "opml/trainer.hpp"

#include <fstream>

namespace opml {

void TrainConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 0.25))
        throw DataError("gamma must lie in (0, 0.25)");
    if (!(gamma2 > 0.0 && gamma2 < 0.25))
        throw DataError("gamma2 must lie in (0, 0.25)");
    if (!(gamma1 > 0.0)) throw DataError("gamma1 must be positive");
}

namespace {

const char* outcome_name(UpdateOutcome o) {
    switch (o) {
        case UpdateOutcome::Active: return "active";
        case UpdateOutcome::Passive: return "passive";
        case UpdateOutcome::SkippedDegenerate: return "skip_degenerate";
        case UpdateOutcome::SkippedSingular: return "skip_singular";
    }
    return "?";
}

struct OnlineLoop {
    explicit OnlineLoop(const TrainConfig& cfg, int dim)
        : cfg(cfg), buffer(cfg.seed), result{MetricMatrix::identity(dim), {}} {}

    void triplet_step(const Sample& s, double gamma) {
        TraceStep step;
        auto triplet = buffer.observe(s);
        if (triplet) {
            step.had_triplet = true;
            step.loss_before = hinge_loss(result.metric, *triplet);
            UpdateScalars scalars;
            step.outcome = opml_update(result.metric, *triplet, gamma, &scalars);
            step.eta = scalars.eta;
            step.beta = scalars.beta;
            switch (step.outcome) {
                case UpdateOutcome::Active: ++result.trace.active_updates; break;
                case UpdateOutcome::SkippedDegenerate:
                    ++result.trace.skipped_degenerate;
                    break;
                case UpdateOutcome::SkippedSingular:
                    ++result.trace.skipped_singular;
                    break;
                default: break;
            }
            if (cfg.record_trace) step.triplet = std::move(triplet);
        }
        record(std::move(step));
    }

    void pair_step(const Sample& prev, const Sample& cur) {
        pair_update(result.metric, prev.features, cur.features, cfg.gamma1);
        ++result.trace.pair_updates;
        pending_pair = true;  // folded into this sample's trace record
    }

    void record(TraceStep step) {
        step.pair_step = pending_pair;
        pending_pair = false;
        if (!cfg.record_trace) return;
        step.frob_norm = result.metric.L.norm();
        result.trace.steps.push_back(std::move(step));
    }

    const TrainConfig& cfg;
    ClassLatestBuffer buffer;
    TrainResult result;
    bool pending_pair = false;
};

int stream_dim(const std::vector<Sample>& stream) {
    return stream.empty() ? 0 : static_cast<int>(stream.front().features.size());
}

}  // namespace

TrainResult train_opml(const std::vector<Sample>& stream, const TrainConfig& cfg) {
    cfg.validate();
    OnlineLoop loop(cfg, stream_dim(stream));
    for (const auto& s : stream) loop.triplet_step(s, cfg.gamma);
    return std::move(loop.result);
}

TrainResult train_copml(const std::vector<Sample>& stream, const TrainConfig& cfg) {
    cfg.validate();
    OnlineLoop loop(cfg, stream_dim(stream));
    const Sample* prev = nullptr;
    for (const auto& s : stream) {
        // Pre-stage gate: exactly one class seen so far and this sample
        // continues it.  The pair (x_t, x_{t+1}) is applied on arrival of
        // x_{t+1}, preserving one-pass semantics.
        const bool prestage = loop.buffer.num_classes() == 1 &&
                              loop.buffer.latest(s.label) != nullptr;
        if (prestage && prev != nullptr) loop.pair_step(*prev, s);
        // The buffer is maintained for every sample; triplets only start
        // flowing once a second class exists.
        loop.triplet_step(s, cfg.gamma2);
        prev = &s;
    }
    return std::move(loop.result);
}

double estimate_regret(const TrainTrace& trace, const MetricMatrix& l_star) {
    double regret = 0.0;
    bool any = false;
    for (const auto& step : trace.steps) {
        if (!step.had_triplet) continue;
        if (!step.triplet)
            throw DataError("estimate_regret: trace recorded without triplets");
        any = true;
        regret += step.loss_before - hinge_loss(l_star, *step.triplet);
    }
    (void)any;
    return regret;
}

void TrainTrace::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "step,loss,flag,eta,beta,frob_norm\n";
    std::size_t i = 0;
    for (const auto& s : steps) {
        out << i++ << ',' << s.loss_before << ','
            << (s.pair_step ? "pair" : (s.had_triplet ? outcome_name(s.outcome) : "none"))
            << ',' << s.eta << ',' << s.beta << ',' << s.frob_norm << '\n';
    }
}

}  // namespace opml
