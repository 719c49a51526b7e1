#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gipal/errors.hpp"
#include "gipal/perturb.hpp"
#include "gipal/scores.hpp"

#include "helpers.hpp"

using namespace gipal;
using testutil::random_dataset;
using testutil::random_mlp;

namespace {

std::vector<double> uniform_grid(int n, double hi = 0.5) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = hi * double(i) / double(n - 1);
    return g;
}

// Piecewise-linear Lipschitz-1 accuracy curve sampled on `grid`.
std::vector<double> lipschitz_curve(const std::vector<double>& grid, Rng& rng) {
    std::vector<double> acc(grid.size());
    acc[0] = rng.uniform01();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double step = (grid[i] - grid[i - 1]) * (2.0 * rng.uniform01() - 1.0);
        acc[i] = std::clamp(acc[i - 1] + step, 0.0, 1.0);
    }
    return acc;
}

} // namespace

TEST_SUITE("scores") {

TEST_CASE("pcd is exact on constant curves") {
    auto grid = default_alpha_grid(PerturbKind::mixup_intra);
    std::vector<double> ones(grid.size(), 1.0);
    PCDCurve F = pcd(grid, ones);
    REQUIRE(F.values.size() == grid.size());
    CHECK(F.values[0] == 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(F.values[i] == grid[i]);

    std::vector<double> zeros(grid.size(), 0.0);
    F = pcd(grid, zeros);
    for (double v : F.values) CHECK(v == 0.0);
}

TEST_CASE("pcd is exact on the linear curve") {
    auto grid = default_alpha_grid(PerturbKind::mixup_intra);
    std::vector<double> lin(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) lin[i] = 1.0 - grid[i];
    PCDCurve F = pcd(grid, lin);
    // analytic F(a) = a - a^2/2; trapezoid is exact for linear integrands
    CHECK(F.values.back() == 0.375);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expect = grid[i] - 0.5 * grid[i] * grid[i];
        CHECK(F.values[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    // F stays below the ideal 45-degree line
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(F.values[i] <= grid[i] + 1e-12);
}

TEST_CASE("pcd rejects malformed grids") {
    CHECK_THROWS_AS(pcd(std::vector<double>{0.0}, std::vector<double>{1.0}),
                    InsufficientGridError);
    CHECK_THROWS_AS(pcd(std::vector<double>{0.0, 0.1}, std::vector<double>{1.0}),
                    DimensionError);
    CHECK_THROWS_AS(pcd(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 1.0}),
                    RangeError);
    CHECK_THROWS_AS(pcd(std::vector<double>{0.0, 0.2, 0.2}, std::vector<double>{1.0, 1.0, 1.0}),
                    RangeError);
}

TEST_CASE("gi analytic oracles") {
    auto grid = default_alpha_grid(PerturbKind::mixup_intra);

    std::vector<double> ones(grid.size(), 1.0);
    CHECK(gi_score(grid, ones) == 0.0);

    std::vector<double> zeros(grid.size(), 0.0);
    CHECK(gi_score(grid, zeros) == 0.125);

    std::vector<double> lin(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) lin[i] = 1.0 - grid[i];
    CHECK(gi_score(grid, lin) == doctest::Approx(1.0 / 48.0).epsilon(5e-3));
    CHECK(std::fabs(gi_score(grid, lin) - 1.0 / 48.0) < 1e-4);

    // brute-force quadrature oracle on a 10001-point grid
    auto fine = uniform_grid(10001);
    std::vector<double> fine_lin(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i) fine_lin[i] = 1.0 - fine[i];
    CHECK(std::fabs(gi_score(fine, fine_lin) - 1.0 / 48.0) < 1e-8);
}

TEST_CASE("gi stays within its analytic bounds") {
    auto grid = default_alpha_grid(PerturbKind::mixup_intra);
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> acc(grid.size());
        for (double& a : acc) a = rng.uniform01();
        const double gi = gi_score(grid, acc);
        CHECK(gi >= 0.0);
        CHECK(gi <= 0.5 * 0.5 * 0.5 + 1e-12); // a_max^2 / 2
    }
}

TEST_CASE("gi respects dominance monotonicity") {
    auto grid = default_alpha_grid(PerturbKind::mixup_intra);
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> hi(grid.size()), lo(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            hi[i] = rng.uniform01();
            lo[i] = hi[i] * rng.uniform01(); // pointwise <= hi
        }
        CHECK(gi_score(grid, hi) <= gi_score(grid, lo) + 1e-15);
    }
}

TEST_CASE("quadrature converges between 26 and 401 points") {
    auto fine = uniform_grid(401);
    Rng rng(7);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> acc = lipschitz_curve(fine, rng);
        std::vector<double> coarse_grid, coarse_acc;
        for (std::size_t i = 0; i < fine.size(); i += 16) {
            coarse_grid.push_back(fine[i]);
            coarse_acc.push_back(acc[i]);
        }
        REQUIRE(coarse_grid.size() == 26);
        worst = std::max(worst, std::fabs(gi_score(fine, acc) - gi_score(coarse_grid, coarse_acc)));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("pal analytic oracles") {
    auto grid = default_alpha_grid(PerturbKind::mixup_intra);

    std::vector<double> ones(grid.size(), 1.0);
    CHECK(pal_score(grid, ones) == 0.0); // 0 / max(0, 1e-12)

    // A == 0: g(a) = a is linear, so the windowed trapezoid with interpolated
    // edges is exact: (0.105) / (0.00125) = 84.
    std::vector<double> zeros(grid.size(), 0.0);
    CHECK(pal_score(grid, zeros) == doctest::Approx(84.0).epsilon(1e-12));

    // A = 1 - a: quadratic g; the value converges to the analytic 936 as the
    // grid refines. The default 26-point value is a frozen regression point.
    std::vector<double> lin(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) lin[i] = 1.0 - grid[i];
    CHECK(pal_score(grid, lin) == doctest::Approx(867.11111111111006).epsilon(1e-12));

    auto fine = uniform_grid(1001);
    std::vector<double> fine_lin(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i) fine_lin[i] = 1.0 - fine[i];
    CHECK(pal_score(fine, fine_lin) == doctest::Approx(936.0).epsilon(0.01));
}

TEST_CASE("pal denominator guard keeps the ideal curve at zero") {
    // tiny gap only inside the top window; denominator window area is 0
    std::vector<double> grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> acc = {1.0, 1.0, 1.0, 1.0, 0.5, 0.5};
    const double v = pal_score(grid, acc);
    CHECK(v > 1e6); // numerator finite, denominator clamped to 1e-12
    CHECK(std::isfinite(v));
}

TEST_CASE("mixup accuracy equals the intra curve endpoint") {
    Network net = random_mlp(41, 5, 3, 1, 8);
    Dataset data = random_dataset(42, 48, {5}, 3);

    PerturbationSpec spec;
    spec.kind = PerturbKind::mixup_intra;
    spec.alpha_grid = default_alpha_grid(spec.kind);
    spec.subset_size = 24;
    spec.pairing_seed = 11;

    Pairing pairing = make_pairing(data, spec);
    PRCurve curve = pr_curve(net, data, spec);
    CHECK(mixup_accuracy(net, data, pairing) == curve.accuracies.back());
}

TEST_CASE("mixup of duplicate samples leaves accuracy unchanged") {
    // every class holds two copies of one point, so the intra partner is
    // always a duplicate and T_0.5 is the identity
    Dataset data;
    data.num_classes = 2;
    Rng rng(55);
    for (int c = 0; c < 2; ++c) {
        Tensor x = Tensor::zeros({4});
        testutil::fill_random(x.data, rng, 1.0);
        for (int copy = 0; copy < 2; ++copy) {
            data.inputs.push_back(x);
            data.labels.push_back(c);
        }
    }
    Network net = random_mlp(56, 4, 2, 1, 6);

    PerturbationSpec spec;
    spec.kind = PerturbKind::mixup_intra;
    spec.alpha_grid = default_alpha_grid(spec.kind);
    spec.subset_size = 4;
    spec.pairing_seed = 2;
    Pairing pairing = make_pairing(data, spec);
    CHECK(mixup_accuracy(net, data, pairing) == accuracy(net, data));
}

TEST_CASE("manifold mixup differs from input mixup through the nonlinearity") {
    // relu breaks the affine commutation, so the two baselines must be able
    // to disagree; verify they are not wired to the same tap
    Network net = random_mlp(60, 6, 3, 2, 8);
    CHECK(shallowest_tap(net) > 1);
}

TEST_CASE("davies_bouldin hand oracles") {
    auto point = [](float a, float b) { return Tensor({2}, {a, b}); };

    // singleton clusters: zero scatter
    std::vector<Tensor> reps = {point(0, 0), point(4, 0)};
    std::vector<int> labels = {0, 1};
    CHECK(davies_bouldin(reps, labels) == 0.0);

    // s1 = s2 = 1, centroid distance 4 -> 0.5
    reps = {point(-1, 0), point(1, 0), point(3, 0), point(5, 0)};
    labels = {0, 0, 1, 1};
    CHECK(davies_bouldin(reps, labels) == doctest::Approx(0.5).epsilon(1e-9));

    // three clusters, worst-ratio per cluster
    reps = {point(0, 0), point(2, 0), point(10, 0), point(12, 0), point(0, 20), point(2, 20)};
    labels = {0, 0, 1, 1, 2, 2};
    // all scatters 1; d01 = 10, d02 = sqrt(1+400)... centroids (1,0),(11,0),(1,20)
    const double d01 = 10.0, d02 = 20.0, d12 = std::sqrt(100.0 + 400.0);
    const double expect =
        ((2.0 / d01) + (2.0 / std::min(d01, d12)) + (2.0 / std::min(d02, d12))) / 3.0;
    CHECK(davies_bouldin(reps, labels) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("davies_bouldin is scale invariant") {
    // power-of-two coordinates scale exactly in float32, so the comparison
    // is limited only by double rounding inside the statistic
    Rng rng(71);
    std::vector<Tensor> reps;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        const int cls = i % 3;
        Tensor x = Tensor::zeros({3});
        x.data[0] = std::ldexp(1.0f, cls + 2); // class centers at 4, 8, 16
        for (int d = 1; d < 3; ++d) {
            const int e = -1 - int(rng.uniform_index(3));
            x.data[d] = (rng.uniform01() < 0.5 ? -1.0f : 1.0f) * std::ldexp(1.0f, e);
        }
        reps.push_back(std::move(x));
        labels.push_back(cls);
    }
    const double base = davies_bouldin(reps, labels);
    std::vector<Tensor> scaled = reps;
    for (Tensor& t : scaled)
        for (float& v : t.data) v *= 7.3f;
    CHECK(std::fabs(davies_bouldin(scaled, labels) - base) < 1e-9);
}

TEST_CASE("davies_bouldin error paths") {
    auto point = [](float a) { return Tensor({1}, {a}); };

    std::vector<Tensor> reps = {point(0), point(1)};
    std::vector<int> one_class = {0, 0};
    CHECK_THROWS_AS(davies_bouldin(reps, one_class), DegenerateClusterError);

    std::vector<Tensor> coincident = {point(0), point(2), point(0), point(2)};
    std::vector<int> labels = {0, 0, 1, 1};
    CHECK_THROWS_AS(davies_bouldin(coincident, labels), DegenerateClusterError);

    std::vector<Tensor> mixed = {point(0), Tensor({2}, {0.0f, 1.0f})};
    std::vector<int> two = {0, 1};
    CHECK_THROWS_AS(davies_bouldin(mixed, two), DimensionError);

    std::vector<int> short_labels = {0};
    CHECK_THROWS_AS(davies_bouldin(reps, short_labels), DimensionError);
    CHECK_THROWS_AS(davies_bouldin(std::vector<Tensor>{}, std::vector<int>{}), EmptyInputError);
}

TEST_CASE("score_model emits the canonical default measures") {
    Network net = random_mlp(81, 6, 3, 1, 8);
    Dataset data = random_dataset(82, 60, {6}, 3);

    ScoreOptions opts;
    opts.subset_size = 24;
    opts.seed = 3;
    auto records = score_model(net, data, "model-a", opts);

    auto names = default_measures();
    REQUIRE(records.size() == names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        CHECK(records[i].measure == names[i]);
        CHECK(records[i].model_id == "model-a");
        CHECK(std::isfinite(records[i].value));
    }

    // shallow sweeps take a different tap than the input sweeps
    CHECK(records[0].measure == "gi_inter_input");
    CHECK(records[1].measure == "gi_inter_shallow");

    auto rerun = score_model(net, data, "model-a", opts);
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(records[i].value == rerun[i].value);
}

TEST_CASE("score_model honors the measure selection") {
    Network net = random_mlp(83, 5, 3, 1, 6);
    Dataset data = random_dataset(84, 40, {5}, 3);

    ScoreOptions opts;
    opts.subset_size = 20;
    opts.seed = 9;
    opts.measures = {"dbi", "gi_intra_input"};
    auto records = score_model(net, data, "m", opts);
    REQUIRE(records.size() == 2);
    // canonical ordering puts the gi sweep first
    CHECK(records[0].measure == "gi_intra_input");
    CHECK(records[1].measure == "dbi");

    opts.measures = {"no_such_measure"};
    CHECK_THROWS_AS(score_model(net, data, "m", opts), RangeError);
}

TEST_CASE("score_model cross-checks against direct curve evaluation") {
    Network net = random_mlp(85, 5, 4, 2, 6);
    Dataset data = random_dataset(86, 50, {5}, 4);

    ScoreOptions opts;
    opts.subset_size = 25;
    opts.seed = 13;
    auto records = score_model(net, data, "m", opts);

    PerturbationSpec spec;
    spec.kind = PerturbKind::mixup_inter;
    spec.layer = 0;
    spec.alpha_grid = default_alpha_grid(spec.kind, opts.grid_points);
    spec.subset_size = opts.subset_size;
    spec.pairing_seed = opts.seed;
    const double direct = gi_score(pr_curve(net, data, spec));
    CHECK(records[0].measure == "gi_inter_input");
    CHECK(records[0].value == direct);
}

TEST_CASE("constant net yields flat response curves at every tap") {
    // zero weights: the prediction ignores the input, so every perturbation
    // leaves accuracy pinned at the base rate and each sweep scores exactly
    // like a synthetic flat curve at that rate
    Network net = testutil::constant_net(4, 3, 1);
    Dataset data;
    data.num_classes = 3;
    Rng rng(90);
    for (int i = 0; i < 30; ++i) {
        Tensor x = Tensor::zeros({4});
        testutil::fill_random(x.data, rng, 1.0);
        data.inputs.push_back(std::move(x));
        data.labels.push_back(i % 3);
    }
    const double base = accuracy(net, data);
    CHECK(base == 10.0 / 30.0);

    auto flat_score = [&](PerturbKind kind, bool pal) {
        const std::vector<double> grid = default_alpha_grid(kind, 26);
        const std::vector<double> acc(grid.size(), base);
        return pal ? pal_score(grid, acc) : gi_score(grid, acc);
    };
    const double gi_inter = flat_score(PerturbKind::mixup_inter, false);
    const double gi_intra = flat_score(PerturbKind::mixup_intra, false);
    const double pal_inter = flat_score(PerturbKind::mixup_inter, true);
    const double pal_intra = flat_score(PerturbKind::mixup_intra, true);
    CHECK(gi_inter > 0.0); // an un-invariant curve would differ from these

    // dbi_mixup is excluded: a constant net's representations coincide, which
    // is exactly the degenerate-cluster error covered elsewhere
    ScoreOptions opts;
    opts.subset_size = 30;
    opts.seed = 1;
    opts.measures = {"gi_inter_input",  "gi_inter_shallow",  "gi_intra_input",
                     "gi_intra_shallow", "pal_inter_input",  "pal_inter_shallow",
                     "pal_intra_input", "pal_intra_shallow"};
    const auto records = score_model(net, data, "flat", opts);
    REQUIRE(records.size() == 8);
    for (const ScoreRecord& r : records) {
        const bool pal = r.measure.rfind("pal_", 0) == 0;
        const bool inter = r.measure.find("inter") != std::string::npos;
        const double expected = pal ? (inter ? pal_inter : pal_intra)
                                    : (inter ? gi_inter : gi_intra);
        CHECK(r.value == expected);
    }
}

} // TEST_SUITE
