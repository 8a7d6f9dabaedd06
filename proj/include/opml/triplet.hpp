#pragma once

#include <map>
#include <optional>
#include <vector>

#include "opml/dataset.hpp"
#include "opml/rng.hpp"

namespace opml {

// <anchor, same-class, different-class>
struct Triplet {
    Sample anchor;
    Sample positive;
    Sample negative;
};

// The latest-sample-per-class buffer.  Stores exactly one feature-vector
// copy per observed class, independent of stream length.
class ClassLatestBuffer {
public:
    explicit ClassLatestBuffer(std::uint64_t seed) : rng_(seed) {}

    // Process one incoming sample and emit at most one triplet.
    // The positive is the previously stored latest sample of the anchor's
    // class; the negative is drawn uniformly from the other stored classes.
    // Afterwards the anchor replaces its class's stored sample.
    std::optional<Triplet> observe(const Sample& s);

    std::size_t num_classes() const { return latest_.size(); }
    const Sample* latest(int label) const {
        auto it = latest_.find(label);
        return it == latest_.end() ? nullptr : &it->second;
    }

private:
    std::map<int, Sample> latest_;
    Rng rng_;
    int dim_ = -1;
};

// Test-only batch oracle: all triplets (s, p, q) with p a past same-class
// sample and q a past different-class sample.  O(md) space by construction.
std::vector<Triplet> batch_observe_oracle(const std::vector<Sample>& history,
                                          const Sample& s);

}  // namespace opml
