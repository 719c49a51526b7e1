#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gipal/tensor.hpp"

namespace gipal {

// Labeled samples with a uniform input shape.
struct Dataset {
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return inputs.size(); }

    // Checks the structural invariants; throws on violation.
    void validate() const;
};

// Synthetic Gaussian blob classification data. Class centers are drawn from a
// standard normal and rescaled so the minimum pairwise centroid distance equals
// `separation` (points have unit per-coordinate noise, so separation is in
// units of the noise scale). Train and test sets share the same centers.
struct BlobSpec {
    int num_classes = 4;
    int dim = 16;
    int train_per_class = 64;
    int test_per_class = 256;
    double separation = 3.0;
    std::uint64_t seed = 1;
};

std::pair<Dataset, Dataset> make_blobs(const BlobSpec& spec);

} // namespace gipal
