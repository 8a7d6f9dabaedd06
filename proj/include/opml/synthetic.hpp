#pragma once

#include "opml/dataset.hpp"

namespace opml {

// Gaussian class clusters with unit-ball normalization; used by the theory
// and timing subcommands and by tests that need a labeled stream without a
// dataset file.  spread controls cluster tightness (smaller = easier).
Dataset synthetic_dataset(int n, int d, int classes, std::uint64_t seed,
                          double spread = 0.25);

}  // namespace opml
