#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gipal/dataset.hpp"
#include "gipal/network.hpp"
#include "gipal/rng.hpp"

namespace gipal {

enum class PerturbKind { mixup_inter, mixup_intra, gaussian };

const char* perturb_kind_name(PerturbKind k);
PerturbKind perturb_kind_from_name(const std::string& name);

// One perturbation sweep: a kind, the tap point it acts on (0 = input;
// shallowest_tap(net) = first hidden representation), a magnitude grid, and
// the evaluation subset.
struct PerturbationSpec {
    PerturbKind kind = PerturbKind::mixup_inter;
    int layer = 0;
    std::vector<double> alpha_grid;
    int subset_size = 512;
    std::uint64_t pairing_seed = 0;

    // Grid must start at 0, increase strictly, and stay in the kind's legal
    // range: inter-class mixup in [0, 0.5), intra-class mixup in [0, 0.5],
    // gaussian sigma unbounded above.
    void validate() const;
};

// Uniform magnitude grid over [0, 0.5]; `points` includes both endpoints.
// Inter-class mixup excludes the 0.5 endpoint, so its grid has points-1 nodes.
std::vector<double> default_alpha_grid(PerturbKind kind, int points = 26);

struct PRCurve {
    PerturbationSpec spec;
    std::vector<double> alphas;
    std::vector<double> accuracies;
    double base_accuracy = 0.0;
};

// Elementwise (1-alpha)*x + alpha*x_prime; alpha = 0 returns x bit-exactly.
Tensor mixup(const Tensor& x, const Tensor& x_prime, double alpha);

enum class PairMode { inter, intra };

// Uniformly random eligible partner for sample i (different class for inter,
// same class for intra), never i itself.
std::size_t sample_partner(const Dataset& data, std::size_t i, PairMode mode, Rng& rng);

// x plus i.i.d. zero-mean Gaussian noise of standard deviation sigma;
// sigma = 0 returns x bit-exactly.
Tensor gaussian_perturb(const Tensor& x, double sigma, Rng& rng);

// Deterministic evaluation subset plus one fixed partner per subset sample.
// The subset depends only on (pairing_seed, data size, subset_size), so specs
// sharing a seed share the subset. Gaussian specs carry no partners.
struct Pairing {
    std::vector<std::size_t> subset;   // indices into the dataset
    std::vector<std::size_t> partner;  // parallel to subset; empty for gaussian
};

Pairing make_pairing(const Dataset& data, const PerturbationSpec& spec);

// Accuracy over the pairing's subset after perturbing the layer-`layer`
// representation with magnitude alpha. Labels are never perturbed. For
// gaussian, per-sample noise streams derive from (noise_seed, sample slot) so
// the result is independent of thread count. Parallel over samples.
double perturbed_accuracy(const Network& net, const Dataset& data, PerturbKind kind, int layer,
                          double alpha, const Pairing& pairing, std::uint64_t noise_seed = 0);

// Full magnitude sweep with one pairing reused across the grid; only alpha
// varies along the curve.
PRCurve pr_curve(const Network& net, const Dataset& data, const PerturbationSpec& spec);

namespace serial {
double perturbed_accuracy(const Network& net, const Dataset& data, PerturbKind kind, int layer,
                          double alpha, const Pairing& pairing, std::uint64_t noise_seed = 0);
PRCurve pr_curve(const Network& net, const Dataset& data, const PerturbationSpec& spec);
} // namespace serial

} // namespace gipal
