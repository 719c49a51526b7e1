#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gipal/data_io.hpp"
#include "gipal/dataset.hpp"
#include "gipal/network.hpp"

namespace gipal {

enum class Architecture { mlp, small_conv };

const char* architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);

struct TrainConfig {
    int depth = 1;            // hidden-layer count
    int width = 16;           // units per hidden layer, or conv channels
    double learning_rate = 0.1;
    int batch_size = 16;
    int max_epochs = 100;
    double target_train_accuracy = 0.99;
    std::uint64_t seed = 0;
    Architecture architecture = Architecture::mlp;

    void validate() const;
};

struct TrainResult {
    Network net;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double gap = 0.0;
    int epochs_run = 0;
    bool reached_target = false;
};

// The untrained stack for a config: mlp is depth x (dense width + relu)
// followed by a dense head and softmax (inputs of rank > 1 are flattened
// first); small_conv is depth x (3x3 conv + relu), flatten, dense head,
// softmax. Weights are zero until trained or initialized.
Network build_network(const TrainConfig& config, const std::vector<int>& input_shape,
                      int num_classes);

// Minibatch SGD with momentum 0.9 and cross-entropy loss. Stops at the first
// epoch end where train accuracy reaches the target, else after max_epochs.
// Deterministic: the seed fixes the init and every shuffle.
TrainResult train(const TrainConfig& config, const Dataset& train_data, const Dataset& test_data);

// Max relative error between the trainer's analytic gradient and central
// finite differences, for a 2-layer MLP on one sample, in 64-bit arithmetic.
double gradient_check_max_rel_error(std::uint64_t seed = 7);

struct HyperGrid {
    // Axis order defines the grid-point order: the Cartesian product is
    // enumerated with the first axis slowest.
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    TrainConfig base;

    void validate() const; // >= 2 axes with >= 2 values each
    std::size_t point_count() const;
};

// Grid config file: 'axis <name> <v1> <v2> ...' lines declare axes,
// 'set <key> <value>' lines override base-config fields (max_epochs, seed,
// target, arch, depth, width, lr, batch). '#' starts a comment.
HyperGrid load_grid(const std::string& path);

// Applies one grid point's axis values on top of the base config.
TrainConfig apply_point(const HyperGrid& grid, std::size_t point_index);

// Trains one model per grid point, saves each under out_dir/models/, and
// writes out_dir/manifest.txt. Each point derives a private seed from
// (base seed, point index), so results do not depend on scheduling. Points
// run in parallel. Models that miss the target are flagged, not dropped.
CorpusManifest generate_corpus(const HyperGrid& grid, const Dataset& train_data,
                               const Dataset& test_data, const std::string& out_dir,
                               std::vector<std::string>* log_lines = nullptr);

} // namespace gipal
