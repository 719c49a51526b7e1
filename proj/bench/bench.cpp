// Times the OpenMP evaluation kernels against their serial references and
// checks that both produce bit-identical results. Run with OMP_NUM_THREADS
// set to see scaling; the speedup column is serial time / parallel time.

#include <chrono>
#include <cstdio>
#include <functional>
#include <omp.h>

#include "gipal/network.hpp"
#include "gipal/perturb.hpp"
#include "gipal/rng.hpp"
#include "gipal/trainer.hpp"

using namespace gipal;

namespace {

double seconds(const std::function<void()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

double best_of(int reps, const std::function<void()>& fn) {
    fn(); // warm up caches and the thread pool
    double best = seconds(fn);
    for (int r = 1; r < reps; ++r) best = std::min(best, seconds(fn));
    return best;
}

Network random_mlp(std::uint64_t seed, int in_dim, int classes, int depth, int width) {
    TrainConfig cfg;
    cfg.depth = depth;
    cfg.width = width;
    Network net = build_network(cfg, {in_dim}, classes);
    Rng rng(seed);
    for (auto& layer : net.layers) {
        for (auto& w : layer.weights) w = static_cast<float>(rng.normal() * 0.05);
        for (auto& b : layer.bias) b = static_cast<float>(rng.normal() * 0.05);
    }
    net.validate();
    return net;
}

Dataset random_dataset(std::uint64_t seed, std::size_t n, int dim, int classes) {
    Dataset data;
    data.num_classes = classes;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor x = Tensor::zeros({dim});
        for (auto& v : x.data) v = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
        data.inputs.push_back(std::move(x));
        data.labels.push_back(static_cast<int>(i) % classes);
    }
    data.validate();
    return data;
}

bool same_curve(const PRCurve& a, const PRCurve& b) {
    return a.alphas == b.alphas && a.accuracies == b.accuracies &&
           a.base_accuracy == b.base_accuracy;
}

void row(const char* name, double serial_s, double parallel_s, bool match) {
    std::printf("%-22s %10.3f %10.3f %9.2fx   %s\n", name, serial_s * 1e3, parallel_s * 1e3,
                serial_s / parallel_s, match ? "bitwise match" : "MISMATCH");
}

} // namespace

int main() {
    constexpr int kReps = 3;
    const Network net = random_mlp(11, 256, 10, 3, 256);
    const Dataset data = random_dataset(12, 2048, 256, 10);

    std::printf("threads: %d   samples: %zu   network: 256 -> 3x256 -> 10\n\n", omp_get_max_threads(),
                data.size());
    std::printf("%-22s %10s %10s %10s\n", "kernel", "serial ms", "openmp ms", "speedup");

    {
        double ref = 0.0, par = 0.0;
        double ts = best_of(kReps, [&] { ref = serial::accuracy(net, data); });
        double tp = best_of(kReps, [&] { par = accuracy(net, data); });
        row("accuracy", ts, tp, ref == par);
    }

    auto curve_case = [&](const char* name, PerturbKind kind, int layer) {
        PerturbationSpec spec;
        spec.kind = kind;
        spec.layer = layer;
        spec.alpha_grid = default_alpha_grid(kind, 26);
        spec.subset_size = 512;
        spec.pairing_seed = 21;
        PRCurve ref, par;
        double ts = best_of(kReps, [&] { ref = serial::pr_curve(net, data, spec); });
        double tp = best_of(kReps, [&] { par = pr_curve(net, data, spec); });
        row(name, ts, tp, same_curve(ref, par));
    };

    curve_case("pr_curve intra/input", PerturbKind::mixup_intra, 0);
    curve_case("pr_curve inter/tap", PerturbKind::mixup_inter, shallowest_tap(net));
    curve_case("pr_curve gaussian", PerturbKind::gaussian, 0);

    return 0;
}
