#include "opml/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "opml/eval.hpp"
#include "opml/synthetic.hpp"
#include "opml/theory.hpp"

namespace opml::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("OPML_OUT_DIR");
    return env && *env ? env : ".";
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

// Every command records a manifest that reconstructs the run; replaying it
// reproduces the listed outputs byte-for-byte (the manifest itself carries
// the volatile wall-clock numbers, so it is not part of that contract).
void write_manifest(const fs::path& path, const std::string& command,
                    const std::vector<std::string>& argv,
                    const std::vector<std::string>& outputs, double wall_s) {
    json j;
    j["command"] = command;
    j["argv"] = argv;
    j["tool_version"] = kVersion;
    j["outputs"] = outputs;
    j["wall_time_s"] = wall_s;
    write_text(path, j.dump(2) + "\n");
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

std::string format_mean_std(double mean, double std) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << mean << "+/-" << std;
    return os.str();
}

struct BenchRow {
    std::string dataset;
    std::string algo;
    double gamma = 0.0;
    EvalReport report;
};

void write_bench_files(const fs::path& dir, const std::string& stem,
                       const std::vector<BenchRow>& rows,
                       std::vector<std::string>& outputs) {
    std::ostringstream csv;
    csv << "dataset,algo,gamma,error_mean,error_std,runs,k\n";
    json jrows = json::array();
    for (const auto& r : rows) {
        csv << r.dataset << ',' << r.algo << ',' << r.gamma << ','
            << r.report.error_rate_mean << ',' << r.report.error_rate_std << ','
            << r.report.runs << ',' << r.report.knn_k << '\n';
        json e;
        e["dataset"] = r.dataset;
        e["algo"] = r.algo;
        e["gamma"] = r.gamma;
        e["report"] = json::parse(r.report.to_json());
        jrows.push_back(std::move(e));
    }
    write_text(dir / (stem + ".csv"), csv.str());
    write_text(dir / (stem + ".json"), jrows.dump(2) + "\n");
    outputs.push_back((dir / (stem + ".csv")).string());
    outputs.push_back((dir / (stem + ".json")).string());
}

std::string dataset_stem(const std::string& path) {
    return fs::path(path).stem().string();
}

// ---------------------------------------------------------------- train ---

int cmd_train(const std::vector<std::string>& argv, const std::string& data,
              int label_col, const std::string& algo, TrainConfig cfg,
              std::string out, std::string trace_path, std::string json_path,
              std::string manifest_path, const std::string& out_dir) {
    Timer timer;
    if (out.empty()) out = (fs::path(out_dir) / "metric.bin").string();
    if (manifest_path.empty()) manifest_path = out + ".manifest.json";

    Dataset ds = load_csv(data, label_col);
    Dataset no_test;
    no_test.dim = ds.dim;
    NormParams norm = zscore_fit_apply(ds, no_test);
    unit_ball_rescale(ds, no_test, norm);

    cfg.record_trace = !trace_path.empty();
    const TrainResult result = algo == "copml" ? train_copml(ds.samples, cfg)
                                               : train_opml(ds.samples, cfg);
    if (result.trace.active_updates == 0 && result.trace.pair_updates == 0)
        std::cerr << "warning: no triplets formed; identity metric written\n";

    std::vector<std::string> outputs;
    result.metric.save_binary(out);
    outputs.push_back(out);
    write_text(out + ".norm.json", norm.to_json() + "\n");
    outputs.push_back(out + ".norm.json");
    if (!json_path.empty()) {
        write_text(json_path, result.metric.to_json() + "\n");
        outputs.push_back(json_path);
    }
    if (!trace_path.empty()) {
        result.trace.export_csv(trace_path);
        outputs.push_back(trace_path);
    }
    write_manifest(manifest_path, "train", argv, outputs, timer.seconds());
    std::cout << "trained " << algo << " on " << data << " (" << ds.size()
              << " samples, d=" << ds.dim << ", " << result.trace.active_updates
              << " active updates, " << result.trace.pair_updates
              << " pair updates) -> " << out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- bench ---

int cmd_bench(const std::vector<std::string>& argv,
              const std::vector<std::string>& datasets, int label_col, int runs,
              int k, std::vector<double> grid, int cv_runs,
              std::vector<std::string> algos, TrainConfig cfg,
              const std::string& out_dir) {
    Timer timer;
    std::vector<BenchRow> rows;
    std::vector<std::string> failures;

    for (const auto& path : datasets) {
        Dataset ds;
        try {
            ds = load_csv(path, label_col);
        } catch (const DataError& e) {
            failures.push_back(e.what());
            continue;
        }
        for (const auto& algo : algos) {
            const TrainerKind kind = trainer_kind_from_string(algo);
            TrainConfig run_cfg = cfg;
            const double gamma =
                select_gamma_cv(ds, kind, run_cfg, grid, cv_runs, k);
            run_cfg.gamma = run_cfg.gamma2 = gamma;
            const EvalReport rep = repeated_eval(ds, kind, run_cfg, runs, k);
            std::cout << dataset_stem(path) << "  " << algo << "  error "
                      << format_mean_std(rep.error_rate_mean, rep.error_rate_std)
                      << "  gamma " << gamma << "  ("
                      << rep.wall_time_total_s / rep.runs * 1e3 << " ms/run)\n";
            rows.push_back({dataset_stem(path), algo, gamma, rep});
        }
    }

    std::vector<std::string> outputs;
    write_bench_files(out_dir, "bench", rows, outputs);
    write_manifest(fs::path(out_dir) / "bench.manifest.json", "bench", argv,
                   outputs, timer.seconds());
    if (!failures.empty()) {
        std::cerr << "failed datasets:\n";
        for (const auto& f : failures) std::cerr << "  " << f << "\n";
    }
    return rows.empty() ? kExitData : kExitOk;
}

// ------------------------------------------------------------ coldstart ---

int cmd_coldstart(const std::vector<std::string>& argv, const std::string& data,
                  int label_col, std::vector<int> parts_list, int reps, int k,
                  TrainConfig cfg, const std::string& out_dir) {
    Timer timer;
    Dataset ds;
    try {
        ds = load_csv(data, label_col);
    } catch (const DataError& e) {
        std::cerr << e.what() << "\n";
        return kExitData;
    }

    std::vector<BenchRow> rows;
    for (int parts : parts_list) {
        for (const char* algo : {"euclidean", "opml", "copml"}) {
            const TrainerKind kind = trainer_kind_from_string(algo);
            EvalReport rep;
            rep.runs = reps;
            rep.knn_k = k;
            for (int r = 0; r < reps; ++r) {
                SplitSpec spec;
                spec.mode = SplitSpec::Mode::ColdStart;
                spec.coldstart_parts = parts;
                spec.seed = cfg.seed + static_cast<std::uint64_t>(r);
                rep.per_run_errors.push_back(eval_split(ds, spec, kind, cfg, k));
            }
            const double n = static_cast<double>(reps);
            rep.error_rate_mean =
                std::accumulate(rep.per_run_errors.begin(),
                                rep.per_run_errors.end(), 0.0) / n;
            double var = 0.0;
            for (double e : rep.per_run_errors)
                var += (e - rep.error_rate_mean) * (e - rep.error_rate_mean);
            rep.error_rate_std = reps > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;

            std::cout << dataset_stem(data) << "-" << parts << "  " << algo
                      << "  error "
                      << format_mean_std(rep.error_rate_mean, rep.error_rate_std)
                      << "\n";
            rows.push_back({dataset_stem(data) + "-" + std::to_string(parts),
                            algo, cfg.gamma, rep});
        }
    }

    std::vector<std::string> outputs;
    write_bench_files(out_dir, "coldstart", rows, outputs);
    write_manifest(fs::path(out_dir) / "coldstart.manifest.json", "coldstart",
                   argv, outputs, timer.seconds());
    return kExitOk;
}

// --------------------------------------------------------------- theory ---

int cmd_theory(const std::vector<std::string>& argv, std::string check,
               std::size_t trials, int dims, std::uint64_t seed, double gamma,
               const std::string& data, int label_col,
               const std::string& out_path, const std::string& out_dir) {
    Timer timer;
    BoundReport report;
    report.seed = seed;
    const bool all = check == "all";

    if (all || check == "lemma1")
        report.checks.push_back(check_lemma1(std::min<std::size_t>(trials, 2000),
                                             std::min(dims, 16), seed));
    if (all || check == "lemma2")
        report.checks.push_back(check_lemma2_pd(trials, dims, seed + 1));
    if (all || check == "theorem1")
        report.checks.push_back(check_theorem1_identity(trials, dims, seed + 2));

    if (all || check == "appendixA" || check == "regret") {
        // trace source: a dataset stream when given, synthetic otherwise
        TrainConfig cfg;
        cfg.gamma = cfg.gamma2 = gamma;
        cfg.seed = seed;
        cfg.record_trace = true;
        Dataset ds;
        if (!data.empty()) {
            ds = load_csv(data, label_col);
            Dataset no_test;
            no_test.dim = ds.dim;
            NormParams norm = zscore_fit_apply(ds, no_test);
            unit_ball_rescale(ds, no_test, norm);
        } else {
            ds = synthetic_dataset(400, 8, 3, seed + 3);
        }
        const TrainResult tr = train_opml(ds.samples, cfg);
        if (all || check == "appendixA")
            report.checks.push_back(check_appendix_ranges(tr.trace, gamma));
        if (all || check == "regret")
            report.checks.push_back(check_regret_envelope(tr.trace, tr.metric));
    }
    if (all || check == "theorem2") {
        TrainConfig cfg;
        cfg.gamma = cfg.gamma2 = gamma;
        cfg.seed = seed;
        report.checks.push_back(
            check_divergence(synthetic_dataset(30, 5, 3, seed + 4).samples, cfg));
    }
    if (all || check == "theorem3") {
        TrainConfig cfg;
        cfg.gamma = cfg.gamma2 = gamma;
        cfg.seed = seed;
        report.checks.push_back(
            check_loss_gap(synthetic_dataset(20, 4, 2, seed + 5).samples, cfg));
    }
    if (report.checks.empty()) {
        std::cerr << "unknown check '" << check << "'\n";
        return kExitUsage;
    }

    std::cout << report.to_table();
    const std::string out =
        out_path.empty() ? (fs::path(out_dir) / "theory.json").string() : out_path;
    write_text(out, report.to_json() + "\n");
    write_manifest(out + ".manifest.json", "theory", argv, {out}, timer.seconds());
    return report.all_passed() ? kExitOk : kExitViolation;
}

// --------------------------------------------------------------- timing ---

double median_update_ms(int d, int samples, std::uint64_t seed) {
    // keep the per-coordinate noise norm constant across d so the stream has
    // the same passive/active mix at every dimension; otherwise the median
    // compares different workloads and the scaling ratio is meaningless
    const double spread = 0.15 * std::sqrt(256.0 / d);
    const Dataset ds = synthetic_dataset(samples, d, 2, seed, spread);
    TrainConfig cfg;
    cfg.seed = seed;
    MetricMatrix m = MetricMatrix::identity(d);
    ClassLatestBuffer buffer(seed);
    std::vector<double> per_sample;
    per_sample.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const auto t0 = std::chrono::steady_clock::now();
        if (auto t = buffer.observe(s)) opml_update(m, *t, cfg.gamma);
        per_sample.push_back(
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(per_sample.begin(),
                     per_sample.begin() + static_cast<long>(per_sample.size() / 2),
                     per_sample.end());
    return per_sample[per_sample.size() / 2];
}

int cmd_timing(const std::vector<std::string>& argv, std::vector<int> dims,
               int samples, std::uint64_t seed, bool assert_scaling,
               const std::string& out_dir) {
    Timer timer;
    json j;
    std::cout << "median per-sample update time (reference report: 0.026 ms at "
                 "d=21, 0.023 ms at d=64, 1.7 ms at d=310; hardware-dependent, "
                 "not asserted)\n";
    for (int d : dims) {
        const double ms = median_update_ms(d, samples, seed);
        std::cout << "  d=" << d << "  " << ms << " ms/sample\n";
        j["median_ms"][std::to_string(d)] = ms;
    }

    int rc = kExitOk;
    if (assert_scaling) {
        // O(d^2) window: doubling d multiplies the median time by [3, 6]
        const int scale_samples = std::min(samples, 400);
        double prev = median_update_ms(256, scale_samples, seed);
        for (int d : {512, 1024}) {
            const double cur = median_update_ms(d, scale_samples, seed);
            const double ratio = cur / prev;
            const bool ok = ratio >= 3.0 && ratio <= 6.0;
            std::cout << "  time(" << d << ")/time(" << d / 2 << ") = " << ratio
                      << (ok ? "  (within [3,6])" : "  OUT OF [3,6]") << "\n";
            j["scaling"][std::to_string(d)] = ratio;
            if (!ok) rc = kExitViolation;
            prev = cur;
        }
    }
    const fs::path out = fs::path(out_dir) / "timing.json";
    write_text(out, j.dump(2) + "\n");
    write_manifest(fs::path(out_dir) / "timing.manifest.json", "timing", argv,
                   {out.string()}, timer.seconds());
    return rc;
}

// --------------------------------------------------------------- replay ---

int cmd_replay(const std::string& manifest_path, const std::string& out_override,
               const std::string& out_dir_override) {
    std::ifstream in(manifest_path);
    if (!in) {
        std::cerr << "cannot open manifest '" << manifest_path << "'\n";
        return kExitData;
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        std::cerr << "bad manifest: " << e.what() << "\n";
        return kExitData;
    }
    auto argv = j.at("argv").get<std::vector<std::string>>();
    auto override_flag = [&](const std::string& flag, const std::string& value) {
        if (value.empty()) return;
        for (std::size_t i = 0; i + 1 < argv.size(); ++i)
            if (argv[i] == flag) {
                argv[i + 1] = value;
                return;
            }
        argv.push_back(flag);
        argv.push_back(value);
    };
    override_flag("--out", out_override);
    override_flag("--out-dir", out_dir_override);
    if (!out_override.empty())
        override_flag("--manifest", out_override + ".manifest.json");
    return run(argv);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"One-pass online Mahalanobis metric learning (OPML/COPML)"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string data, out, trace_path, json_path, manifest_path;
    std::string out_dir = default_out_dir();
    std::string algo = "opml", check = "all", theory_out;
    std::vector<std::string> datasets;
    std::vector<std::string> algos{"euclidean", "opml", "copml"};
    std::vector<double> grid{0.01, 0.05, 0.10, 0.20};
    std::vector<int> parts_list{10, 5, 2};
    std::vector<int> dims_list{21, 64, 310};
    TrainConfig cfg;
    int label_col = 0, runs = 100, k = 5, cv_runs = 5, reps = 20;
    int timing_samples = 2000, theory_dims = 64;
    std::size_t trials = 10000;
    bool assert_scaling = false;
    std::string replay_manifest, replay_out, replay_out_dir;

    const auto gamma_range = CLI::Range(1e-12, 0.25 - 1e-12);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "base PRNG seed");
        sub->add_option("--out-dir", out_dir,
                        "output directory (default $OPML_OUT_DIR or .)");
    };

    auto* train = app.add_subcommand("train", "train a metric on a CSV dataset");
    train->add_option("data", data, "dataset CSV")->required();
    train->add_option("--label-col", label_col, "label column (negative = from end)");
    train->add_option("--algo", algo, "opml|copml")
        ->check(CLI::IsMember({"opml", "copml"}));
    train->add_option("--gamma", cfg.gamma, "triplet regularizer")->check(gamma_range);
    train->add_option("--gamma1", cfg.gamma1, "cold-start pair regularizer")
        ->check(CLI::PositiveNumber);
    train->add_option("--gamma2", cfg.gamma2, "cold-start triplet regularizer")
        ->check(gamma_range);
    train->add_option("--out", out, "metric output file");
    train->add_option("--trace", trace_path, "per-step trace CSV");
    train->add_option("--json", json_path, "also write the metric as JSON");
    train->add_option("--manifest", manifest_path, "manifest path");
    add_common(train);

    auto* bench = app.add_subcommand("bench", "error-rate benchmark over datasets");
    bench->add_option("data", datasets, "dataset CSVs")->required();
    bench->add_option("--label-col", label_col, "label column");
    bench->add_option("--runs", runs, "repetitions per dataset");
    bench->add_option("--k", k, "k-NN neighbors");
    bench->add_option("--grid", grid, "gamma grid for cross-validation");
    bench->add_option("--cv-runs", cv_runs, "cross-validation repetitions");
    bench->add_option("--algos", algos, "subset of euclidean,opml,copml");
    bench->add_option("--gamma1", cfg.gamma1, "cold-start pair regularizer")
        ->check(CLI::PositiveNumber);
    add_common(bench);

    auto* cold = app.add_subcommand("coldstart",
                                    "cold-start stream comparison (OPML vs COPML)");
    cold->add_option("data", data, "dataset CSV")->required();
    cold->add_option("--label-col", label_col, "label column");
    cold->add_option("--parts", parts_list, "block counts");
    cold->add_option("--reps", reps, "seeded repetitions");
    cold->add_option("--k", k, "k-NN neighbors");
    cold->add_option("--gamma", cfg.gamma, "triplet regularizer")->check(gamma_range);
    cold->add_option("--gamma1", cfg.gamma1, "pair regularizer")
        ->check(CLI::PositiveNumber);
    cold->add_option("--gamma2", cfg.gamma2, "cold-start triplet regularizer")
        ->check(gamma_range);
    add_common(cold);

    auto* theory = app.add_subcommand("theory", "empirical bound verification");
    theory->add_option("--check", check,
                       "all|lemma1|lemma2|theorem1|appendixA|theorem2|theorem3|regret");
    theory->add_option("--trials", trials, "random trials");
    theory->add_option("--dims", theory_dims, "maximum dimension");
    theory->add_option("--gamma", cfg.gamma, "regularizer")->check(gamma_range);
    theory->add_option("--data", data, "optional dataset CSV for trace checks");
    theory->add_option("--label-col", label_col, "label column");
    theory->add_option("--out", theory_out, "report JSON path");
    add_common(theory);

    auto* timing = app.add_subcommand("timing", "per-sample update timing");
    timing->add_option("--dims", dims_list, "dimensions to measure");
    timing->add_option("--samples", timing_samples, "stream length per dimension");
    timing->add_flag("--assert-scaling", assert_scaling,
                     "assert the O(d^2) doubling window on d=256..1024");
    add_common(timing);

    auto* replay = app.add_subcommand("replay", "re-run a recorded manifest");
    replay->add_option("manifest", replay_manifest, "manifest JSON")->required();
    replay->add_option("--out", replay_out, "override the --out of the recorded run");
    replay->add_option("--out-dir", replay_out_dir,
                       "override the --out-dir of the recorded run");

    std::vector<const char*> argv;
    argv.push_back("opml");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed())
            return cmd_train(args, data, label_col, algo, cfg, out, trace_path,
                             json_path, manifest_path, out_dir);
        if (bench->parsed())
            return cmd_bench(args, datasets, label_col, runs, k, grid, cv_runs,
                             algos, cfg, out_dir);
        if (cold->parsed())
            return cmd_coldstart(args, data, label_col, parts_list, reps, k, cfg,
                                 out_dir);
        if (theory->parsed())
            return cmd_theory(args, check, trials, theory_dims, cfg.seed, cfg.gamma,
                              data, label_col, theory_out, out_dir);
        if (timing->parsed())
            return cmd_timing(args, dims_list, timing_samples, cfg.seed,
                              assert_scaling, out_dir);
        if (replay->parsed())
            return cmd_replay(replay_manifest, replay_out, replay_out_dir);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace opml::cli
