#include "gipal/perturb.hpp"

#include <cmath>
#include <cstdint>

#include "gipal/errors.hpp"
#include "gipal/text.hpp"

namespace gipal {

const char* perturb_kind_name(PerturbKind k) {
    switch (k) {
        case PerturbKind::mixup_inter: return "mixup_inter";
        case PerturbKind::mixup_intra: return "mixup_intra";
        case PerturbKind::gaussian: return "gaussian";
    }
    return "?";
}

PerturbKind perturb_kind_from_name(const std::string& name) {
    if (name == "mixup_inter" || name == "inter") return PerturbKind::mixup_inter;
    if (name == "mixup_intra" || name == "intra") return PerturbKind::mixup_intra;
    if (name == "gaussian") return PerturbKind::gaussian;
    throw ParseError("unknown perturbation kind '" + name + "'");
}

void PerturbationSpec::validate() const {
    if (alpha_grid.empty()) throw InsufficientGridError("alpha grid is empty");
    if (alpha_grid.front() != 0.0) throw RangeError("alpha grid must start at 0");
    for (std::size_t i = 1; i < alpha_grid.size(); ++i)
        if (!(alpha_grid[i] > alpha_grid[i - 1]))
            throw RangeError("alpha grid must be strictly increasing");
    const double hi = alpha_grid.back();
    switch (kind) {
        case PerturbKind::mixup_inter:
            if (hi >= 0.5) throw RangeError("inter-class mixup grid must stay below 0.5");
            break;
        case PerturbKind::mixup_intra:
            if (hi > 0.5) throw RangeError("intra-class mixup grid must stay within [0, 0.5]");
            break;
        case PerturbKind::gaussian:
            break;
    }
    if (layer < 0) throw IndexError("layer must be nonnegative");
    if (subset_size <= 0) throw RangeError("subset_size must be positive");
}

std::vector<double> default_alpha_grid(PerturbKind kind, int points) {
    if (points < 2) throw InsufficientGridError("grid needs at least 2 points");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] = 0.5 * static_cast<double>(i) / static_cast<double>(points - 1);
    if (kind == PerturbKind::mixup_inter) grid.pop_back(); // drop the 0.5 endpoint
    return grid;
}

Tensor mixup(const Tensor& x, const Tensor& x_prime, double alpha) {
    if (!same_shape(x, x_prime))
        throw DimensionError("mixup shapes differ: " + shape_to_string(x.shape) + " vs " +
                             shape_to_string(x_prime.shape));
    if (!(alpha >= 0.0 && alpha <= 0.5))
        throw RangeError("mixup alpha " + format_double(alpha) + " outside [0, 0.5]");
    if (alpha == 0.0) return x;
    Tensor out = x;
    const float a = static_cast<float>(alpha);
    const float b = 1.0f - a;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = b * x.data[i] + a * x_prime.data[i];
    return out;
}

std::size_t sample_partner(const Dataset& data, std::size_t i, PairMode mode, Rng& rng) {
    if (i >= data.size()) throw IndexError("sample index out of range");
    const int label = data.labels[i];
    std::vector<std::size_t> eligible;
    eligible.reserve(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (j == i) continue;
        const bool same = data.labels[j] == label;
        if ((mode == PairMode::intra) == same) eligible.push_back(j);
    }
    if (eligible.empty())
        throw PairingError(std::string("no eligible ") + (mode == PairMode::intra ? "intra" : "inter") +
                           "-class partner for sample " + std::to_string(i) + " (label " +
                           std::to_string(label) + ")");
    return eligible[rng.uniform_index(eligible.size())];
}

Tensor gaussian_perturb(const Tensor& x, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw RangeError("sigma must be nonnegative");
    if (sigma == 0.0) return x;
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = x.data[i] + static_cast<float>(sigma * rng.normal());
    return out;
}

Pairing make_pairing(const Dataset& data, const PerturbationSpec& spec) {
    spec.validate();
    data.validate();
    Rng rng(spec.pairing_seed);
    Pairing p;
    const std::size_t n = data.size();
    if (static_cast<std::size_t>(spec.subset_size) >= n) {
        p.subset.resize(n);
        for (std::size_t i = 0; i < n; ++i) p.subset[i] = i;
    } else {
        p.subset = rng.sample_without_replacement(n, static_cast<std::size_t>(spec.subset_size));
    }
    if (spec.kind != PerturbKind::gaussian) {
        const PairMode mode = spec.kind == PerturbKind::mixup_intra ? PairMode::intra : PairMode::inter;
        p.partner.reserve(p.subset.size());
        for (std::size_t idx : p.subset) p.partner.push_back(sample_partner(data, idx, mode, rng));
    }
    return p;
}

namespace {

// Per-sample evaluation shared by the serial and parallel drivers, so the two
// agree bit-exactly.
struct SweepWorkspace {
    std::vector<Tensor> reps;         // layer-`layer` representation per subset sample
    std::vector<Tensor> partner_reps; // same for partners (mixup kinds only)
    std::vector<int> labels;          // subset labels
};

SweepWorkspace make_workspace(const Network& net, const Dataset& data, PerturbKind kind, int layer,
                              const Pairing& pairing) {
    if (layer < 0 || layer > net.layer_count())
        throw IndexError("layer index " + std::to_string(layer) + " outside [0, " +
                         std::to_string(net.layer_count()) + "]");
    if (kind != PerturbKind::gaussian && pairing.partner.size() != pairing.subset.size())
        throw PairingError("pairing has no partners for a mixup sweep");
    SweepWorkspace ws;
    const std::size_t m = pairing.subset.size();
    ws.reps.resize(m);
    ws.labels.resize(m);
    if (kind != PerturbKind::gaussian) ws.partner_reps.resize(m);
    const auto mi = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < mi; ++j) {
        const auto js = static_cast<std::size_t>(j);
        ws.reps[js] = activations(net, data.inputs[pairing.subset[js]], layer);
        ws.labels[js] = data.labels[pairing.subset[js]];
        if (kind != PerturbKind::gaussian)
            ws.partner_reps[js] = activations(net, data.inputs[pairing.partner[js]], layer);
    }
    return ws;
}

bool sample_correct(const Network& net, const SweepWorkspace& ws, PerturbKind kind, int layer,
                    double alpha, std::uint64_t noise_seed, std::size_t j) {
    Tensor perturbed;
    if (kind == PerturbKind::gaussian) {
        Rng noise(mix_seed(noise_seed, j));
        perturbed = gaussian_perturb(ws.reps[j], alpha, noise);
    } else {
        perturbed = mixup(ws.reps[j], ws.partner_reps[j], alpha);
    }
    const Tensor probs = forward_from(net, perturbed, layer);
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i)
        if (probs.data[static_cast<std::size_t>(i)] > probs.data[static_cast<std::size_t>(best)]) best = i;
    return best == ws.labels[j];
}

double point_accuracy(const Network& net, const SweepWorkspace& ws, PerturbKind kind, int layer,
                      double alpha, std::uint64_t noise_seed, bool parallel) {
    if (ws.labels.empty()) throw EmptyInputError("empty evaluation subset");
    const auto m = static_cast<std::int64_t>(ws.labels.size());
    std::int64_t correct = 0;
    if (parallel) {
#pragma omp parallel for schedule(static) reduction(+ : correct)
        for (std::int64_t j = 0; j < m; ++j)
            if (sample_correct(net, ws, kind, layer, alpha, noise_seed, static_cast<std::size_t>(j))) ++correct;
    } else {
        for (std::int64_t j = 0; j < m; ++j)
            if (sample_correct(net, ws, kind, layer, alpha, noise_seed, static_cast<std::size_t>(j))) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(m);
}

void check_point_alpha(PerturbKind kind, double alpha) {
    switch (kind) {
        case PerturbKind::mixup_inter:
            if (!(alpha >= 0.0 && alpha < 0.5))
                throw RangeError("inter-class mixup alpha outside [0, 0.5)");
            break;
        case PerturbKind::mixup_intra:
            if (!(alpha >= 0.0 && alpha <= 0.5))
                throw RangeError("intra-class mixup alpha outside [0, 0.5]");
            break;
        case PerturbKind::gaussian:
            if (!(alpha >= 0.0)) throw RangeError("sigma must be nonnegative");
            break;
    }
}

double perturbed_accuracy_impl(const Network& net, const Dataset& data, PerturbKind kind, int layer,
                               double alpha, const Pairing& pairing, std::uint64_t noise_seed,
                               bool parallel) {
    check_point_alpha(kind, alpha);
    SweepWorkspace ws = make_workspace(net, data, kind, layer, pairing);
    return point_accuracy(net, ws, kind, layer, alpha, noise_seed, parallel);
}

PRCurve pr_curve_impl(const Network& net, const Dataset& data, const PerturbationSpec& spec,
                      bool parallel) {
    spec.validate();
    Pairing pairing = make_pairing(data, spec);
    SweepWorkspace ws = make_workspace(net, data, spec.kind, spec.layer, pairing);

    PRCurve curve;
    curve.spec = spec;
    curve.alphas = spec.alpha_grid;
    curve.accuracies.resize(spec.alpha_grid.size());
    for (std::size_t a = 0; a < spec.alpha_grid.size(); ++a) {
        const std::uint64_t point_seed = mix_seed(spec.pairing_seed, 0x6E0A5EEDULL + a);
        curve.accuracies[a] =
            point_accuracy(net, ws, spec.kind, spec.layer, spec.alpha_grid[a], point_seed, parallel);
    }

    // Unperturbed accuracy on the same subset, computed through the plain
    // forward path. Equals accuracies[0] since the grid starts at 0 and the
    // zero-magnitude perturbation is the identity.
    std::int64_t correct = 0;
    const auto m = static_cast<std::int64_t>(pairing.subset.size());
#pragma omp parallel for schedule(static) reduction(+ : correct) if (parallel)
    for (std::int64_t j = 0; j < m; ++j) {
        const std::size_t idx = pairing.subset[static_cast<std::size_t>(j)];
        if (predict(net, data.inputs[idx]) == data.labels[idx]) ++correct;
    }
    curve.base_accuracy = static_cast<double>(correct) / static_cast<double>(m);
    return curve;
}

} // namespace

double perturbed_accuracy(const Network& net, const Dataset& data, PerturbKind kind, int layer,
                          double alpha, const Pairing& pairing, std::uint64_t noise_seed) {
    return perturbed_accuracy_impl(net, data, kind, layer, alpha, pairing, noise_seed, true);
}

PRCurve pr_curve(const Network& net, const Dataset& data, const PerturbationSpec& spec) {
    return pr_curve_impl(net, data, spec, true);
}

namespace serial {

double perturbed_accuracy(const Network& net, const Dataset& data, PerturbKind kind, int layer,
                          double alpha, const Pairing& pairing, std::uint64_t noise_seed) {
    return perturbed_accuracy_impl(net, data, kind, layer, alpha, pairing, noise_seed, false);
}

PRCurve pr_curve(const Network& net, const Dataset& data, const PerturbationSpec& spec) {
    return pr_curve_impl(net, data, spec, false);
}

} // namespace serial

} // namespace gipal
