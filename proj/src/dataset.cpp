#include "opml/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "opml/rng.hpp"

namespace opml {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        rows.push_back(split_row(line));
        if (rows.size() > 1 && rows.back().size() != rows.front().size()) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": ragged row (" +
                            std::to_string(rows.back().size()) + " columns, expected " +
                            std::to_string(rows.front().size()) + ")");
        }
    }
    if (rows.empty()) throw DataError(path + ": empty dataset");

    const int ncols = static_cast<int>(rows.front().size());
    if (ncols < 2) throw DataError(path + ": need at least one feature column");
    int lcol = label_column < 0 ? ncols + label_column : label_column;
    if (lcol < 0 || lcol >= ncols)
        throw DataError(path + ": label column " + std::to_string(label_column) +
                        " out of range for " + std::to_string(ncols) + " columns");

    // Header detection: first row counts as a header if any cell is non-numeric.
    std::size_t first = 0;
    {
        double v;
        bool numeric = true;
        for (int c = 0; c < ncols; ++c) {
            if (c != lcol && !parse_double(rows[0][c], v)) { numeric = false; break; }
        }
        if (!numeric) first = 1;
    }
    if (first == rows.size()) throw DataError(path + ": empty dataset");

    Dataset ds;
    ds.dim = ncols - 1;
    ds.name = path;
    std::map<std::string, int> label_map;  // first-appearance remapping
    std::vector<std::string> label_order;

    for (std::size_t r = first; r < rows.size(); ++r) {
        Sample s;
        s.features.resize(ds.dim);
        int f = 0;
        for (int c = 0; c < ncols; ++c) {
            if (c == lcol) continue;
            double v;
            if (!parse_double(rows[r][c], v))
                throw DataError(path + ": row " + std::to_string(r + 1) + ", column " +
                                std::to_string(c + 1) + ": non-numeric feature cell '" +
                                rows[r][c] + "'");
            if (!std::isfinite(v))
                throw DataError(path + ": row " + std::to_string(r + 1) + ", column " +
                                std::to_string(c + 1) + ": non-finite feature value");
            s.features[f++] = v;
        }
        const std::string tok = trim(rows[r][lcol]);
        if (tok.empty())
            throw DataError(path + ": row " + std::to_string(r + 1) + ": empty label");
        auto it = label_map.find(tok);
        if (it == label_map.end()) {
            it = label_map.emplace(tok, static_cast<int>(label_order.size())).first;
            label_order.push_back(tok);
        }
        s.label = it->second;
        s.stream_index = static_cast<int>(ds.samples.size());
        ds.samples.push_back(std::move(s));
    }
    ds.num_classes = static_cast<int>(label_order.size());
    return ds;
}

NormParams zscore_fit_apply(Dataset& train, Dataset& test, bool population_std) {
    if (train.empty()) throw DataError("zscore: empty training set");
    const int d = train.dim;
    const auto n = static_cast<double>(train.size());

    NormParams p;
    p.convention = population_std ? "population" : "sample";
    p.means = Eigen::VectorXd::Zero(d);
    p.stds = Eigen::VectorXd::Zero(d);

    for (const auto& s : train.samples) p.means += s.features;
    p.means /= n;
    for (const auto& s : train.samples)
        p.stds += (s.features - p.means).cwiseAbs2();
    const double divisor = population_std ? n : std::max(n - 1.0, 1.0);
    p.stds = (p.stds / divisor).cwiseSqrt();

    auto apply = [&](Dataset& ds) {
        for (auto& s : ds.samples) {
            for (int j = 0; j < d; ++j) {
                // zero-variance features map to 0
                s.features[j] = p.stds[j] > 0.0
                                    ? (s.features[j] - p.means[j]) / p.stds[j]
                                    : 0.0;
            }
        }
    };
    apply(train);
    apply(test);
    return p;
}

double unit_ball_rescale(Dataset& train, Dataset& test, NormParams& params) {
    double s = 0.0;
    for (const auto& x : train.samples) s = std::max(s, x.features.norm());
    if (s == 0.0) throw DataError("unit_ball_rescale: all-zero training set");
    for (auto& x : train.samples) x.features /= s;
    for (auto& x : test.samples) {
        x.features /= s;
        if (x.features.norm() > 1.0) params.test_exceeds_unit_ball = true;
    }
    params.scale = s;
    return s;
}

std::pair<std::vector<Sample>, std::vector<Sample>> make_stream(
    const Dataset& ds, const SplitSpec& spec) {
    std::vector<Sample> ordered;

    if (spec.mode == SplitSpec::Mode::Shuffled) {
        std::vector<std::size_t> idx(ds.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(spec.seed);
        rng.shuffle(idx);
        ordered.reserve(idx.size());
        for (auto i : idx) ordered.push_back(ds.samples[i]);
    } else {
        if (spec.coldstart_parts < 1)
            throw DataError("make_stream: coldstart parts must be positive");
        // Cut each class into P contiguous blocks and interleave: class 0
        // block 1, class 1 block 1, ..., class 0 block 2, ...  The stream
        // therefore opens with a long single-class run.  The seed shuffles
        // samples within their class, which randomizes the block contents
        // across repetitions without disturbing the label pattern.
        std::vector<std::vector<Sample>> by_class(ds.num_classes);
        for (const auto& s : ds.samples) by_class[s.label].push_back(s);
        Rng rng(spec.seed);
        for (auto& cls : by_class) rng.shuffle(cls);
        const int parts = spec.coldstart_parts;
        for (int b = 0; b < parts; ++b) {
            for (int k = 0; k < ds.num_classes; ++k) {
                const auto& cls = by_class[k];
                const std::size_t lo = cls.size() * b / parts;
                const std::size_t hi = cls.size() * (b + 1) / parts;
                for (std::size_t i = lo; i < hi; ++i) ordered.push_back(cls[i]);
            }
        }
    }

    const double frac =
        spec.mode == SplitSpec::Mode::ColdStart ? 0.5 : spec.train_fraction;
    const auto n_train =
        static_cast<std::size_t>(frac * static_cast<double>(ordered.size()));
    if (n_train == 0 || n_train >= ordered.size())
        throw DataError("make_stream: train fraction yields an empty split");

    std::vector<Sample> train(ordered.begin(),
                              ordered.begin() + static_cast<long>(n_train));
    std::vector<Sample> test(ordered.begin() + static_cast<long>(n_train),
                             ordered.end());
    for (std::size_t i = 0; i < train.size(); ++i)
        train[i].stream_index = static_cast<int>(i);
    for (std::size_t i = 0; i < test.size(); ++i)
        test[i].stream_index = static_cast<int>(i);
    return {std::move(train), std::move(test)};
}

std::string NormParams::to_json() const {
    nlohmann::json j;
    j["means"] = std::vector<double>(means.data(), means.data() + means.size());
    j["stds"] = std::vector<double>(stds.data(), stds.data() + stds.size());
    j["scale"] = scale;
    j["convention"] = convention;
    j["test_exceeds_unit_ball"] = test_exceeds_unit_ball;
    return j.dump(2);
}

NormParams NormParams::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    NormParams p;
    const auto m = j.at("means").get<std::vector<double>>();
    const auto s = j.at("stds").get<std::vector<double>>();
    p.means = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<long>(m.size()));
    p.stds = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<long>(s.size()));
    p.scale = j.at("scale").get<double>();
    p.convention = j.at("convention").get<std::string>();
    p.test_exceeds_unit_ball = j.value("test_exceeds_unit_ball", false);
    return p;
}

}  // namespace opml
