#include "gipal/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "gipal/errors.hpp"
#include "gipal/text.hpp"

namespace gipal {

namespace {

void check_grid(std::span<const double> alphas, std::span<const double> accuracies) {
    if (alphas.size() < 2) throw InsufficientGridError("need at least 2 grid points");
    if (alphas.size() != accuracies.size())
        throw DimensionError("grid has " + std::to_string(alphas.size()) + " alphas but " +
                             std::to_string(accuracies.size()) + " accuracies");
    if (alphas[0] != 0.0) throw RangeError("grid must start at 0");
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] > alphas[i - 1])) throw RangeError("grid must be strictly increasing");
}

// Linear interpolation of a sampled curve at x in [xs.front(), xs.back()].
double interp(std::span<const double> xs, std::span<const double> ys, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

// Trapezoid integral of the gap g(a) = a - F(a) over [lo, hi], with the window
// edges inserted by linear interpolation of F.
double window_gap_integral(std::span<const double> alphas, std::span<const double> F, double lo,
                           double hi) {
    lo = std::max(lo, alphas.front());
    hi = std::min(hi, alphas.back());
    if (!(hi > lo)) throw InsufficientGridError("empty integration window");

    std::vector<double> xs;
    std::vector<double> gs;
    xs.push_back(lo);
    gs.push_back(lo - interp(alphas, F, lo));
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] > lo && alphas[i] < hi) {
            xs.push_back(alphas[i]);
            gs.push_back(alphas[i] - F[i]);
        }
    }
    xs.push_back(hi);
    gs.push_back(hi - interp(alphas, F, hi));

    double area = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        area += 0.5 * (xs[i] - xs[i - 1]) * (gs[i] + gs[i - 1]);
    return area;
}

} // namespace

PCDCurve pcd(std::span<const double> alphas, std::span<const double> accuracies) {
    check_grid(alphas, accuracies);
    PCDCurve out;
    out.alphas.assign(alphas.begin(), alphas.end());
    out.values.resize(alphas.size());
    out.values[0] = 0.0;
    for (std::size_t i = 1; i < alphas.size(); ++i)
        out.values[i] = out.values[i - 1] +
                        0.5 * (alphas[i] - alphas[i - 1]) * (accuracies[i] + accuracies[i - 1]);
    return out;
}

PCDCurve pcd(const PRCurve& pr) { return pcd(pr.alphas, pr.accuracies); }

double gi_score(std::span<const double> alphas, std::span<const double> accuracies) {
    PCDCurve F = pcd(alphas, accuracies);
    double area = 0.0;
    for (std::size_t i = 1; i < alphas.size(); ++i) {
        const double g0 = alphas[i - 1] - F.values[i - 1];
        const double g1 = alphas[i] - F.values[i];
        area += 0.5 * (alphas[i] - alphas[i - 1]) * (g0 + g1);
    }
    return area;
}

double gi_score(const PRCurve& pr) { return gi_score(pr.alphas, pr.accuracies); }

double pal_score(std::span<const double> alphas, std::span<const double> accuracies) {
    PCDCurve F = pcd(alphas, accuracies);
    const double a_max = alphas.back();
    const double numerator = window_gap_integral(alphas, F.values, 0.4 * a_max, a_max);
    const double denominator = window_gap_integral(alphas, F.values, 0.0, 0.1 * a_max);
    return numerator / std::max(denominator, 1e-12);
}

double pal_score(const PRCurve& pr) { return pal_score(pr.alphas, pr.accuracies); }

double mixup_accuracy(const Network& net, const Dataset& data, const Pairing& pairing) {
    return perturbed_accuracy(net, data, PerturbKind::mixup_intra, 0, 0.5, pairing);
}

double manifold_mixup_accuracy(const Network& net, const Dataset& data, const Pairing& pairing) {
    return perturbed_accuracy(net, data, PerturbKind::mixup_intra, shallowest_tap(net), 0.5,
                              pairing);
}

double davies_bouldin(const std::vector<Tensor>& reps, std::span<const int> labels) {
    if (reps.size() != labels.size())
        throw DimensionError("representation/label count mismatch");
    if (reps.empty()) throw EmptyInputError("no representations");
    const std::size_t dim = reps[0].size();
    for (const Tensor& r : reps)
        if (r.size() != dim) throw DimensionError("representations have mixed sizes");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < reps.size(); ++i) by_class[labels[i]].push_back(i);
    const std::size_t k = by_class.size();
    if (k < 2) throw DegenerateClusterError("Davies-Bouldin needs at least 2 classes");

    std::vector<std::vector<double>> centroids;
    std::vector<double> scatter;
    centroids.reserve(k);
    scatter.reserve(k);
    for (const auto& [label, members] : by_class) {
        std::vector<double> c(dim, 0.0);
        for (std::size_t idx : members)
            for (std::size_t t = 0; t < dim; ++t) c[t] += reps[idx].data[t];
        for (double& v : c) v /= static_cast<double>(members.size());
        double s = 0.0;
        for (std::size_t idx : members) {
            double d2 = 0.0;
            for (std::size_t t = 0; t < dim; ++t) {
                const double diff = reps[idx].data[t] - c[t];
                d2 += diff * diff;
            }
            s += std::sqrt(d2);
        }
        centroids.push_back(std::move(c));
        scatter.push_back(s / static_cast<double>(members.size()));
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t t = 0; t < dim; ++t) {
                const double diff = centroids[i][t] - centroids[j][t];
                d2 += diff * diff;
            }
            const double d = std::sqrt(d2);
            if (d == 0.0) throw DegenerateClusterError("coincident class centroids");
            worst = std::max(worst, (scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

double dbi_mixup(const Network& net, const Dataset& data, const Pairing& pairing) {
    std::vector<Tensor> reps;
    std::vector<int> labels;
    reps.reserve(pairing.subset.size());
    labels.reserve(pairing.subset.size());
    const int tap = shallowest_tap(net);
    for (std::size_t idx : pairing.subset) {
        reps.push_back(activations(net, data.inputs[idx], tap));
        labels.push_back(data.labels[idx]);
    }
    const double dbi = davies_bouldin(reps, labels);
    return dbi * (1.0 - mixup_accuracy(net, data, pairing));
}

std::vector<std::string> default_measures() {
    return {"gi_inter_input",  "gi_inter_shallow",  "gi_intra_input",  "gi_intra_shallow",
            "pal_inter_input", "pal_inter_shallow", "pal_intra_input", "pal_intra_shallow",
            "mixup_acc",       "manifold_mixup_acc", "dbi_mixup"};
}

std::vector<std::string> all_measures() {
    std::vector<std::string> m = default_measures();
    m.push_back("dbi");
    return m;
}

std::vector<ScoreRecord> score_model(const Network& net, const Dataset& data,
                                     const std::string& model_id, const ScoreOptions& opts) {
    std::vector<std::string> wanted = opts.measures.empty() ? default_measures() : opts.measures;
    {
        const std::vector<std::string> known = all_measures();
        for (const std::string& m : wanted)
            if (std::find(known.begin(), known.end(), m) == known.end())
                throw RangeError("unknown measure '" + m + "'");
    }

    auto make_spec = [&](PerturbKind kind, int layer) {
        PerturbationSpec spec;
        spec.kind = kind;
        spec.layer = layer;
        spec.alpha_grid = default_alpha_grid(kind, opts.grid_points);
        spec.subset_size = opts.subset_size;
        spec.pairing_seed = opts.seed;
        return spec;
    };

    // Curves and single-point values computed at most once each.
    std::map<std::pair<int, int>, PRCurve> curves; // (kind, layer) -> curve
    auto curve = [&](PerturbKind kind, int layer) -> const PRCurve& {
        auto key = std::make_pair(static_cast<int>(kind), layer);
        auto it = curves.find(key);
        if (it == curves.end()) it = curves.emplace(key, pr_curve(net, data, make_spec(kind, layer))).first;
        return it->second;
    };

    std::optional<Pairing> intra_pairing;
    auto pairing = [&]() -> const Pairing& {
        if (!intra_pairing) intra_pairing = make_pairing(data, make_spec(PerturbKind::mixup_intra, 0));
        return *intra_pairing;
    };

    std::optional<double> mixup_val, manifold_val, dbi_val;
    auto get_mixup = [&]() {
        if (!mixup_val) mixup_val = mixup_accuracy(net, data, pairing());
        return *mixup_val;
    };
    auto get_manifold = [&]() {
        if (!manifold_val) manifold_val = manifold_mixup_accuracy(net, data, pairing());
        return *manifold_val;
    };
    auto get_dbi = [&]() {
        if (!dbi_val) {
            const Pairing& p = pairing();
            std::vector<Tensor> reps;
            std::vector<int> labels;
            reps.reserve(p.subset.size());
            labels.reserve(p.subset.size());
            const int tap = shallowest_tap(net);
            for (std::size_t idx : p.subset) {
                reps.push_back(activations(net, data.inputs[idx], tap));
                labels.push_back(data.labels[idx]);
            }
            dbi_val = davies_bouldin(reps, labels);
        }
        return *dbi_val;
    };

    const int shallow = shallowest_tap(net);
    auto value_of = [&](const std::string& m) -> double {
        if (m == "gi_inter_input") return gi_score(curve(PerturbKind::mixup_inter, 0));
        if (m == "gi_inter_shallow") return gi_score(curve(PerturbKind::mixup_inter, shallow));
        if (m == "gi_intra_input") return gi_score(curve(PerturbKind::mixup_intra, 0));
        if (m == "gi_intra_shallow") return gi_score(curve(PerturbKind::mixup_intra, shallow));
        if (m == "pal_inter_input") return pal_score(curve(PerturbKind::mixup_inter, 0));
        if (m == "pal_inter_shallow") return pal_score(curve(PerturbKind::mixup_inter, shallow));
        if (m == "pal_intra_input") return pal_score(curve(PerturbKind::mixup_intra, 0));
        if (m == "pal_intra_shallow") return pal_score(curve(PerturbKind::mixup_intra, shallow));
        if (m == "mixup_acc") return get_mixup();
        if (m == "manifold_mixup_acc") return get_manifold();
        if (m == "dbi") return get_dbi();
        if (m == "dbi_mixup") return get_dbi() * (1.0 - get_mixup());
        throw RangeError("unknown measure '" + m + "'");
    };

    // Emit in the canonical order so score files are byte-stable.
    std::vector<ScoreRecord> records;
    for (const std::string& m : all_measures()) {
        if (std::find(wanted.begin(), wanted.end(), m) == wanted.end()) continue;
        const double v = value_of(m);
        if (!std::isfinite(v)) throw NumericError("measure " + m + " is not finite for model " + model_id);
        records.push_back({model_id, m, v});
    }
    return records;
}

} // namespace gipal
