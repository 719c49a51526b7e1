#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "gipal/dataset.hpp"
#include "gipal/network.hpp"
#include "gipal/rng.hpp"

namespace testutil {

// Self-deleting scratch directory under the system temp root.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("gipal_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::uint32_t float_bits(float v) {
    std::uint32_t b;
    std::memcpy(&b, &v, sizeof b);
    return b;
}

inline bool bitwise_equal(const gipal::Tensor& a, const gipal::Tensor& b) {
    if (a.shape != b.shape) return false;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        if (float_bits(a.data[i]) != float_bits(b.data[i])) return false;
    return true;
}

inline void fill_random(std::vector<float>& v, gipal::Rng& rng, double scale = 0.6) {
    for (float& x : v) x = static_cast<float>((rng.uniform01() * 2.0 - 1.0) * scale);
}

// Small MLP with random weights: depth x (dense width + relu), dense head,
// softmax.
inline gipal::Network random_mlp(std::uint64_t seed, int in_dim, int num_classes, int depth = 1,
                                 int width = 8) {
    using gipal::LayerSpec;
    gipal::Rng rng(seed);
    gipal::Network net;
    net.num_classes = num_classes;
    net.input_shape = {in_dim};
    int cur = in_dim;
    for (int d = 0; d < depth; ++d) {
        net.layers.push_back(LayerSpec::dense(cur, width));
        net.layers.push_back(LayerSpec::relu());
        cur = width;
    }
    net.layers.push_back(LayerSpec::dense(cur, num_classes));
    net.layers.push_back(LayerSpec::softmax());
    for (auto& layer : net.layers) {
        fill_random(layer.weights, rng);
        fill_random(layer.bias, rng, 0.2);
    }
    net.validate();
    return net;
}

// Conv stack on [1, side, side] inputs: conv 3x3 + relu, flatten, dense head,
// softmax.
inline gipal::Network random_conv(std::uint64_t seed, int side, int num_classes,
                                  int channels = 4) {
    using gipal::LayerSpec;
    gipal::Rng rng(seed);
    gipal::Network net;
    net.num_classes = num_classes;
    net.input_shape = {1, side, side};
    net.layers.push_back(LayerSpec::conv2d(1, channels, 3, 3));
    net.layers.push_back(LayerSpec::relu());
    net.layers.push_back(LayerSpec::flatten());
    const int flat = channels * (side - 2) * (side - 2);
    net.layers.push_back(LayerSpec::dense(flat, num_classes));
    net.layers.push_back(LayerSpec::softmax());
    for (auto& layer : net.layers) {
        fill_random(layer.weights, rng, 0.4);
        fill_random(layer.bias, rng, 0.2);
    }
    net.validate();
    return net;
}

// Random dataset with every class populated at least twice (so intra-class
// pairing always has a partner).
inline gipal::Dataset random_dataset(std::uint64_t seed, int n, std::vector<int> shape,
                                     int num_classes) {
    gipal::Rng rng(seed);
    gipal::Dataset data;
    data.num_classes = num_classes;
    for (int i = 0; i < n; ++i) {
        gipal::Tensor x = gipal::Tensor::zeros(shape);
        fill_random(x.data, rng, 1.0);
        data.inputs.push_back(std::move(x));
        data.labels.push_back(i % num_classes);
    }
    rng.shuffle(data.labels);
    data.validate();
    return data;
}

// Net that ignores its input: zero weights, bias favoring `favored`.
inline gipal::Network constant_net(int in_dim, int num_classes, int favored) {
    using gipal::LayerSpec;
    gipal::Network net;
    net.num_classes = num_classes;
    net.input_shape = {in_dim};
    net.layers.push_back(LayerSpec::dense(in_dim, num_classes));
    net.layers.push_back(LayerSpec::softmax());
    net.layers[0].bias[static_cast<std::size_t>(favored)] = 1.0f;
    net.validate();
    return net;
}

struct CliResult {
    int code = -1;
    std::string output; // stdout + stderr interleaved
};

// Runs the CLI binary with the given argument string, capturing combined
// output.
inline CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(GIPAL_CLI_PATH) + " " + args + " 2>&1";
    CliResult res;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, got);
    const int status = ::pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

inline std::string read_file(const std::string& path) {
    std::string out;
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return out;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
    std::fclose(f);
    return out;
}

inline void write_file(const std::string& path, const std::string& contents) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) return;
    std::fwrite(contents.data(), 1, contents.size(), f);
    std::fclose(f);
}

} // namespace testutil
