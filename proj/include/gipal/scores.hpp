#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gipal/network.hpp"
#include "gipal/perturb.hpp"

namespace gipal {

// Running integral F(a_i) of a PR curve under the composite trapezoid rule.
// F(0) = 0, F nondecreasing for nonnegative accuracies.
struct PCDCurve {
    std::vector<double> alphas;
    std::vector<double> values;
};

PCDCurve pcd(std::span<const double> alphas, std::span<const double> accuracies);
PCDCurve pcd(const PRCurve& pr);

// Area between the idealized network's PCD curve (the 45-degree line F = a)
// and the actual one: the trapezoid integral of (a - F(a)) over the grid.
// Zero for a curve pinned at accuracy 1; at most a_max^2/2 for accuracies in
// [0, 1].
double gi_score(std::span<const double> alphas, std::span<const double> accuracies);
double gi_score(const PRCurve& pr);

// Ratio of the between-curves area over the top 60% of the magnitude range,
// [0.4*a_max, a_max], to the same area over the bottom 10%, [0, 0.1*a_max].
// Window edges that fall between grid points are inserted by linear
// interpolation of F; the denominator is guarded by 1e-12.
double pal_score(std::span<const double> alphas, std::span<const double> accuracies);
double pal_score(const PRCurve& pr);

// Single-point intra-class mixup accuracy at alpha = 0.5: input level for
// mixup_accuracy, shallowest-layer representations for the manifold variant.
// The pairing must be an intra-class pairing.
double mixup_accuracy(const Network& net, const Dataset& data, const Pairing& pairing);
double manifold_mixup_accuracy(const Network& net, const Dataset& data, const Pairing& pairing);

// Davies-Bouldin index over flattened representations: (1/k) sum_i max_{j!=i}
// (s_i + s_j) / d_ij, with s_i the mean distance of class-i points to their
// centroid and d_ij the centroid distance. Scale-invariant.
double davies_bouldin(const std::vector<Tensor>& reps, std::span<const int> labels);

// DBI of shallowest-layer representations times (1 - mixup accuracy).
double dbi_mixup(const Network& net, const Dataset& data, const Pairing& pairing);

struct ScoreRecord {
    std::string model_id;
    std::string measure;
    double value = 0.0;
};

// Canonical measure order: 8 Gi/Pal sweep variants, then the baselines.
// "dbi" is computable but not part of the default set.
std::vector<std::string> default_measures();
std::vector<std::string> all_measures();

struct ScoreOptions {
    int grid_points = 26;  // intra/gaussian grid size; inter uses one fewer
    int subset_size = 512;
    std::uint64_t seed = 0;
    std::vector<std::string> measures; // empty = default_measures()
};

// Computes the requested measures for one model. All sweeps share one subset
// (derived from the seed), and single-point baselines reuse the sweep pairing,
// so mixup_acc equals the intra input curve's 0.5 endpoint exactly.
std::vector<ScoreRecord> score_model(const Network& net, const Dataset& data,
                                     const std::string& model_id, const ScoreOptions& opts);

} // namespace gipal
