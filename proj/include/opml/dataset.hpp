#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace opml {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Sample {
    Eigen::VectorXd features;
    int label = 0;           // contiguous class index, 0..c-1
    int stream_index = 0;    // position t in the presented sequence
};

struct Dataset {
    std::vector<Sample> samples;
    int num_classes = 0;
    int dim = 0;
    std::string name;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
};

// Affine normalization fitted on a training set; convention records the
// standard-deviation divisor ("sample" = n-1, "population" = n).
struct NormParams {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
    double scale = 1.0;             // unit-ball divisor (max train norm)
    std::string convention = "sample";
    bool test_exceeds_unit_ball = false;

    std::string to_json() const;
    static NormParams from_json(const std::string& text);
};

struct SplitSpec {
    enum class Mode { Shuffled, ColdStart };
    double train_fraction = 0.5;
    std::uint64_t seed = 0;
    Mode mode = Mode::Shuffled;
    int coldstart_parts = 2;
};

// Load a labeled dataset from CSV.  A non-numeric first row is treated as a
// header.  Labels (numeric or categorical tokens) are remapped to 0..c-1 in
// order of first appearance.  label_column < 0 counts from the end (-1 =
// last column).
Dataset load_csv(const std::string& path, int label_column = 0);

// Per-feature Z-score fitted on train, applied to both sets.
// Zero-variance features map to 0.
NormParams zscore_fit_apply(Dataset& train, Dataset& test,
                            bool population_std = false);

// Divide every sample by the maximum training-sample norm so that all train
// norms are <= 1.  Returns the scale; throws DataError on an all-zero train
// set.  A flag in NormParams records whether any test norm exceeds 1.
double unit_ball_rescale(Dataset& train, Dataset& test, NormParams& params);

// Order the dataset into a training stream plus a held-out test set.
std::pair<std::vector<Sample>, std::vector<Sample>> make_stream(
    const Dataset& ds, const SplitSpec& spec);

}  // namespace opml
