#include "gipal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "gipal/errors.hpp"
#include "gipal/rng.hpp"
#include "gipal/text.hpp"

namespace gipal {

const char* architecture_name(Architecture a) {
    switch (a) {
    case Architecture::mlp: return "mlp";
    case Architecture::small_conv: return "small_conv";
    }
    throw RangeError("unknown architecture");
}

Architecture architecture_from_name(const std::string& name) {
    if (name == "mlp") return Architecture::mlp;
    if (name == "small_conv") return Architecture::small_conv;
    throw RangeError("unknown architecture '" + name + "'");
}

void TrainConfig::validate() const {
    if (depth <= 0) throw RangeError("depth must be positive");
    if (width <= 0) throw RangeError("width must be positive");
    if (!(learning_rate > 0.0)) throw RangeError("learning_rate must be positive");
    if (batch_size <= 0) throw RangeError("batch_size must be positive");
    if (max_epochs <= 0) throw RangeError("max_epochs must be positive");
    if (!(target_train_accuracy > 0.0) || target_train_accuracy > 1.0)
        throw RangeError("target_train_accuracy must lie in (0, 1]");
}

Network build_network(const TrainConfig& config, const std::vector<int>& input_shape,
                      int num_classes) {
    config.validate();
    Network net;
    net.num_classes = num_classes;
    net.input_shape = input_shape;
    if (config.architecture == Architecture::mlp) {
        if (input_shape.size() > 1) net.layers.push_back(LayerSpec::flatten());
        int in_dim = 1;
        for (int d : input_shape) in_dim *= d;
        for (int h = 0; h < config.depth; ++h) {
            net.layers.push_back(LayerSpec::dense(in_dim, config.width));
            net.layers.push_back(LayerSpec::relu());
            in_dim = config.width;
        }
        net.layers.push_back(LayerSpec::dense(in_dim, num_classes));
    } else {
        if (input_shape.size() != 2 && input_shape.size() != 3)
            throw DimensionError("small_conv expects [H,W] or [C,H,W] inputs");
        // Rank-2 inputs are treated as single-channel images.
        int ch = input_shape.size() == 3 ? input_shape[0] : 1;
        int h = input_shape[input_shape.size() == 3 ? 1 : 0];
        int w = input_shape[input_shape.size() == 3 ? 2 : 1];
        for (int c = 0; c < config.depth; ++c) {
            if (h < 3 || w < 3)
                throw DimensionError("input too small for " + std::to_string(config.depth) +
                                     " 3x3 conv layers");
            net.layers.push_back(LayerSpec::conv2d(ch, config.width, 3, 3));
            net.layers.push_back(LayerSpec::relu());
            ch = config.width;
            h -= 2;
            w -= 2;
        }
        net.layers.push_back(LayerSpec::flatten());
        net.layers.push_back(LayerSpec::dense(ch * h * w, num_classes));
    }
    net.layers.push_back(LayerSpec::softmax());
    if (input_shape.size() == 2 && config.architecture == Architecture::small_conv) {
        // conv2d expects [C,H,W]; promote the declared input shape.
        net.input_shape = {1, input_shape[0], input_shape[1]};
    }
    net.validate();
    return net;
}

namespace {

// Training engine over a layer stack, generic in the arithmetic type so the
// gradient check can run the identical code in double.
template <class T>
struct Engine {
    std::vector<LayerSpec> specs; // dims/kinds only; weight storage lives below
    std::vector<std::vector<int>> shapes; // shapes[l] = tap-point-l shape
    std::vector<std::vector<T>> w, b;
    std::vector<std::vector<T>> gw, gb;
    std::vector<std::vector<T>> vw, vb;
    std::vector<std::vector<T>> acts;  // acts[l] = tap-point-l values
    std::vector<std::vector<T>> dacts; // gradient buffers, same layout

    explicit Engine(const Network& net) : specs(net.layers) {
        const int L = net.layer_count();
        shapes.resize(L + 1);
        for (int l = 0; l <= L; ++l) shapes[l] = net.shape_at(l);
        w.resize(L);
        b.resize(L);
        gw.resize(L);
        gb.resize(L);
        vw.resize(L);
        vb.resize(L);
        acts.resize(L + 1);
        dacts.resize(L + 1);
        for (int l = 0; l < L; ++l) {
            w[l].assign(specs[l].weight_count(), T(0));
            b[l].assign(specs[l].bias_count(), T(0));
            gw[l].assign(w[l].size(), T(0));
            gb[l].assign(b[l].size(), T(0));
            vw[l].assign(w[l].size(), T(0));
            vb[l].assign(b[l].size(), T(0));
        }
        for (int l = 0; l <= L; ++l) {
            std::size_t n = 1;
            for (int d : shapes[l]) n *= static_cast<std::size_t>(d);
            acts[l].assign(n, T(0));
            dacts[l].assign(n, T(0));
        }
    }

    void init_glorot(Rng& rng) {
        for (std::size_t l = 0; l < specs.size(); ++l) {
            const LayerSpec& s = specs[l];
            double fan_in = 0, fan_out = 0;
            if (s.kind == LayerKind::dense) {
                fan_in = s.in_dim;
                fan_out = s.out_dim;
            } else if (s.kind == LayerKind::conv2d) {
                fan_in = static_cast<double>(s.in_ch) * s.kh * s.kw;
                fan_out = static_cast<double>(s.out_ch) * s.kh * s.kw;
            } else {
                continue;
            }
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            for (T& v : w[l]) v = static_cast<T>((rng.uniform01() * 2.0 - 1.0) * limit);
            std::fill(b[l].begin(), b[l].end(), T(0));
        }
    }

    void zero_grads() {
        for (auto& g : gw) std::fill(g.begin(), g.end(), T(0));
        for (auto& g : gb) std::fill(g.begin(), g.end(), T(0));
    }

    // Forward pass caching every tap point; returns the cross-entropy loss
    // -log p[label], computed via log-sum-exp.
    T forward_loss(const Tensor& x, int label) {
        for (std::size_t i = 0; i < x.data.size(); ++i) acts[0][i] = static_cast<T>(x.data[i]);
        const int L = static_cast<int>(specs.size());
        for (int l = 0; l < L; ++l) apply_layer(l);
        // Recompute the loss from the logits (tap L-1 feeds the softmax).
        const std::vector<T>& logits = acts[L - 1];
        T m = logits[0];
        for (T v : logits) m = std::max(m, v);
        T sum = T(0);
        for (T v : logits) sum += std::exp(v - m);
        return std::log(sum) + m - logits[static_cast<std::size_t>(label)];
    }

    void apply_layer(int l) {
        const LayerSpec& s = specs[l];
        const std::vector<T>& in = acts[l];
        std::vector<T>& out = acts[l + 1];
        switch (s.kind) {
        case LayerKind::dense: {
            for (int o = 0; o < s.out_dim; ++o) {
                T acc = b[l][o];
                const T* row = w[l].data() + static_cast<std::size_t>(o) * s.in_dim;
                for (int i = 0; i < s.in_dim; ++i) acc += row[i] * in[i];
                out[o] = acc;
            }
            break;
        }
        case LayerKind::conv2d: {
            const int ih = shapes[l][1], iw = shapes[l][2];
            const int oh = shapes[l + 1][1], ow = shapes[l + 1][2];
            for (int oc = 0; oc < s.out_ch; ++oc)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        T acc = b[l][oc];
                        for (int ic = 0; ic < s.in_ch; ++ic)
                            for (int ky = 0; ky < s.kh; ++ky)
                                for (int kx = 0; kx < s.kw; ++kx) {
                                    const std::size_t wi =
                                        ((static_cast<std::size_t>(oc) * s.in_ch + ic) * s.kh + ky) *
                                            s.kw +
                                        kx;
                                    const std::size_t xi =
                                        (static_cast<std::size_t>(ic) * ih + oy * s.stride + ky) * iw +
                                        ox * s.stride + kx;
                                    acc += w[l][wi] * in[xi];
                                }
                        out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
                    }
            break;
        }
        case LayerKind::relu:
            for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
            break;
        case LayerKind::flatten:
            std::copy(in.begin(), in.end(), out.begin());
            break;
        case LayerKind::softmax: {
            T m = in[0];
            for (T v : in) m = std::max(m, v);
            T sum = T(0);
            for (std::size_t i = 0; i < in.size(); ++i) {
                out[i] = std::exp(in[i] - m);
                sum += out[i];
            }
            for (T& v : out) v /= sum;
            break;
        }
        }
    }

    // Accumulates parameter gradients for the cached sample into gw/gb.
    void backward(int label) {
        const int L = static_cast<int>(specs.size());
        // Fused softmax + cross-entropy: d(loss)/d(logits) = p - onehot.
        std::vector<T>& dlogits = dacts[L - 1];
        const std::vector<T>& p = acts[L];
        for (std::size_t c = 0; c < p.size(); ++c)
            dlogits[c] = p[c] - (static_cast<int>(c) == label ? T(1) : T(0));
        for (int l = L - 2; l >= 0; --l) {
            const LayerSpec& s = specs[l];
            const std::vector<T>& in = acts[l];
            const std::vector<T>& dout = dacts[l + 1];
            std::vector<T>& din = dacts[l];
            switch (s.kind) {
            case LayerKind::dense: {
                std::fill(din.begin(), din.end(), T(0));
                for (int o = 0; o < s.out_dim; ++o) {
                    const T d = dout[o];
                    T* grow = gw[l].data() + static_cast<std::size_t>(o) * s.in_dim;
                    const T* row = w[l].data() + static_cast<std::size_t>(o) * s.in_dim;
                    for (int i = 0; i < s.in_dim; ++i) {
                        grow[i] += d * in[i];
                        din[i] += d * row[i];
                    }
                    gb[l][o] += d;
                }
                break;
            }
            case LayerKind::conv2d: {
                std::fill(din.begin(), din.end(), T(0));
                const int ih = shapes[l][1], iw = shapes[l][2];
                const int oh = shapes[l + 1][1], ow = shapes[l + 1][2];
                for (int oc = 0; oc < s.out_ch; ++oc)
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox) {
                            const T d = dout[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
                            gb[l][oc] += d;
                            for (int ic = 0; ic < s.in_ch; ++ic)
                                for (int ky = 0; ky < s.kh; ++ky)
                                    for (int kx = 0; kx < s.kw; ++kx) {
                                        const std::size_t wi =
                                            ((static_cast<std::size_t>(oc) * s.in_ch + ic) * s.kh +
                                             ky) *
                                                s.kw +
                                            kx;
                                        const std::size_t xi =
                                            (static_cast<std::size_t>(ic) * ih + oy * s.stride +
                                             ky) *
                                                iw +
                                            ox * s.stride + kx;
                                        gw[l][wi] += d * in[xi];
                                        din[xi] += d * w[l][wi];
                                    }
                        }
                break;
            }
            case LayerKind::relu:
                for (std::size_t i = 0; i < in.size(); ++i)
                    din[i] = in[i] > T(0) ? dout[i] : T(0);
                break;
            case LayerKind::flatten:
                std::copy(dout.begin(), dout.end(), din.begin());
                break;
            case LayerKind::softmax:
                throw IndexError("softmax must be the final layer");
            }
        }
    }

    void sgd_step(T lr, T inv_batch) {
        for (std::size_t l = 0; l < specs.size(); ++l) {
            for (std::size_t i = 0; i < w[l].size(); ++i) {
                vw[l][i] = T(0.9) * vw[l][i] + gw[l][i] * inv_batch;
                w[l][i] -= lr * vw[l][i];
            }
            for (std::size_t i = 0; i < b[l].size(); ++i) {
                vb[l][i] = T(0.9) * vb[l][i] + gb[l][i] * inv_batch;
                b[l][i] -= lr * vb[l][i];
            }
        }
    }

    Network materialize(const Network& skeleton) const {
        Network net = skeleton;
        for (std::size_t l = 0; l < specs.size(); ++l) {
            for (std::size_t i = 0; i < w[l].size(); ++i)
                net.layers[l].weights[i] = static_cast<float>(w[l][i]);
            for (std::size_t i = 0; i < b[l].size(); ++i)
                net.layers[l].bias[i] = static_cast<float>(b[l][i]);
        }
        return net;
    }
};

} // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_data, const Dataset& test_data) {
    config.validate();
    train_data.validate();
    test_data.validate();
    if (train_data.num_classes != test_data.num_classes)
        throw DimensionError("train and test class counts differ");
    if (!same_shape(train_data.inputs[0], test_data.inputs[0]))
        throw DimensionError("train and test input shapes differ");

    const Network skeleton =
        build_network(config, train_data.inputs[0].shape, train_data.num_classes);
    Engine<float> eng(skeleton);
    Rng init_rng(mix_seed(config.seed, 1));
    eng.init_glorot(init_rng);
    Rng shuffle_rng(mix_seed(config.seed, 2));

    const std::size_t n = train_data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            eng.zero_grads();
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t idx = order[s];
                const float loss = eng.forward_loss(train_data.inputs[idx], train_data.labels[idx]);
                if (!std::isfinite(loss))
                    throw TrainingDivergedError("loss diverged at epoch " + std::to_string(epoch));
                eng.backward(train_data.labels[idx]);
            }
            eng.sgd_step(static_cast<float>(config.learning_rate),
                         1.0f / static_cast<float>(stop - start));
        }
        result.epochs_run = epoch;
        result.net = eng.materialize(skeleton);
        result.train_accuracy = accuracy(result.net, train_data);
        if (result.train_accuracy >= config.target_train_accuracy) {
            result.reached_target = true;
            break;
        }
    }
    result.test_accuracy = accuracy(result.net, test_data);
    result.gap = result.train_accuracy - result.test_accuracy;
    return result;
}

double gradient_check_max_rel_error(std::uint64_t seed) {
    TrainConfig config;
    config.depth = 1;
    config.width = 8;
    const int in_dim = 5, k = 3;
    const Network skeleton = build_network(config, {in_dim}, k);

    Engine<double> eng(skeleton);
    Rng rng(mix_seed(seed, 1));
    eng.init_glorot(rng);

    Tensor x = Tensor::zeros({in_dim});
    for (float& v : x.data) v = static_cast<float>(rng.normal());
    const int label = static_cast<int>(rng.uniform_index(k));

    eng.zero_grads();
    eng.forward_loss(x, label);
    eng.backward(label);

    const double h = 1e-5;
    double worst = 0.0;
    auto probe = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double keep = params[i];
            params[i] = keep + h;
            const double up = eng.forward_loss(x, label);
            params[i] = keep - h;
            const double down = eng.forward_loss(x, label);
            params[i] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-9});
            worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
        }
    };
    for (std::size_t l = 0; l < eng.w.size(); ++l) {
        probe(eng.w[l], eng.gw[l]);
        probe(eng.b[l], eng.gb[l]);
    }
    return worst;
}

void HyperGrid::validate() const {
    base.validate();
    if (axes.size() < 2) throw RangeError("grid needs at least 2 axes");
    int rich = 0;
    for (const auto& [name, values] : axes) {
        if (name.empty()) throw RangeError("axis name must not be empty");
        if (values.empty()) throw RangeError("axis '" + name + "' has no values");
        if (values.size() >= 2) ++rich;
    }
    for (std::size_t i = 0; i < axes.size(); ++i)
        for (std::size_t j = i + 1; j < axes.size(); ++j)
            if (axes[i].first == axes[j].first)
                throw RangeError("duplicate axis '" + axes[i].first + "'");
    if (rich < 2) throw RangeError("grid needs at least 2 axes with at least 2 values each");
}

std::size_t HyperGrid::point_count() const {
    std::size_t n = 1;
    for (const auto& [name, values] : axes) n *= values.size();
    return n;
}

namespace {

void apply_config_key(TrainConfig& config, const std::string& key, const std::string& value) {
    if (key == "depth")
        config.depth = static_cast<int>(parse_int(value));
    else if (key == "width")
        config.width = static_cast<int>(parse_int(value));
    else if (key == "lr")
        config.learning_rate = parse_double(value);
    else if (key == "batch")
        config.batch_size = static_cast<int>(parse_int(value));
    else if (key == "max_epochs")
        config.max_epochs = static_cast<int>(parse_int(value));
    else if (key == "target")
        config.target_train_accuracy = parse_double(value);
    else if (key == "seed")
        config.seed = static_cast<std::uint64_t>(parse_int(value));
    else if (key == "arch")
        config.architecture = architecture_from_name(value);
    else
        throw RangeError("unknown config key '" + key + "'");
}

} // namespace

HyperGrid load_grid(const std::string& path) {
    const std::string text = read_text_file(path);
    HyperGrid grid;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t nl = text.find('\n', line_start);
        std::string_view line = std::string_view(text).substr(
            line_start, nl == std::string::npos ? std::string::npos : nl - line_start);
        const std::size_t this_line = line_start;
        line_start = nl == std::string::npos ? text.size() : nl + 1;
        if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        try {
            if (tok[0] == "axis") {
                if (tok.size() < 3)
                    throw ParseError("axis needs a name and at least one value");
                std::vector<std::string> values;
                for (std::size_t i = 2; i < tok.size(); ++i) values.emplace_back(tok[i]);
                grid.axes.emplace_back(std::string(tok[1]), std::move(values));
            } else if (tok[0] == "set") {
                if (tok.size() != 3) throw ParseError("set needs a key and a value");
                apply_config_key(grid.base, std::string(tok[1]), std::string(tok[2]));
            } else {
                throw ParseError("unknown directive '" + std::string(tok[0]) + "'");
            }
        } catch (const Error& e) {
            throw ParseError(path + ": " + e.what() + " at byte offset " +
                             std::to_string(this_line));
        }
    }
    grid.validate();
    return grid;
}

TrainConfig apply_point(const HyperGrid& grid, std::size_t point_index) {
    if (point_index >= grid.point_count()) throw IndexError("grid point out of range");
    TrainConfig config = grid.base;
    // Mixed-radix decode, first axis slowest.
    std::size_t rest = point_index;
    std::vector<std::size_t> digit(grid.axes.size());
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
        digit[a] = rest % grid.axes[a].second.size();
        rest /= grid.axes[a].second.size();
    }
    for (std::size_t a = 0; a < grid.axes.size(); ++a)
        apply_config_key(config, grid.axes[a].first, grid.axes[a].second[digit[a]]);
    return config;
}

CorpusManifest generate_corpus(const HyperGrid& grid, const Dataset& train_data,
                               const Dataset& test_data, const std::string& out_dir,
                               std::vector<std::string>* log_lines) {
    grid.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "models", ec);
    if (ec) throw IoError("cannot create " + out_dir + "/models: " + ec.message());

    const std::size_t n = grid.point_count();
    int id_width = 3;
    for (std::size_t v = n; v > 1000; v /= 10) ++id_width;

    auto model_id = [&](std::size_t p) {
        std::string num = std::to_string(p);
        return "m" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
    };

    std::vector<ManifestEntry> entries(n);
    std::vector<std::string> failures(n);
    std::vector<std::string> lines(n);
    std::vector<char> ok(n, 0);

#pragma omp parallel for schedule(dynamic)
    for (long long pi = 0; pi < static_cast<long long>(n); ++pi) {
        const std::size_t p = static_cast<std::size_t>(pi);
        try {
            TrainConfig config = apply_point(grid, p);
            config.seed = mix_seed(grid.base.seed, p);
            const TrainResult r = train(config, train_data, test_data);
            const std::string id = model_id(p);
            const std::string rel = "models/" + id + ".gpm";
            save_model(r.net, (fs::path(out_dir) / rel).string());

            ManifestEntry e;
            e.model_id = id;
            e.weight_file = rel;
            // Record the exact grid value strings, not re-formatted numbers.
            std::size_t rest = p;
            std::vector<std::size_t> digit(grid.axes.size());
            for (std::size_t a = grid.axes.size(); a-- > 0;) {
                digit[a] = rest % grid.axes[a].second.size();
                rest /= grid.axes[a].second.size();
            }
            for (std::size_t a = 0; a < grid.axes.size(); ++a)
                e.hyperparams.emplace_back(grid.axes[a].first, grid.axes[a].second[digit[a]]);
            e.train_accuracy = r.train_accuracy;
            e.test_accuracy = r.test_accuracy;
            e.generalization_gap = r.gap;
            e.below_target = !r.reached_target;
            entries[p] = std::move(e);
            ok[p] = 1;
            lines[p] = id + " train=" + format_double(r.train_accuracy) +
                       " test=" + format_double(r.test_accuracy) +
                       " gap=" + format_double(r.gap) + " epochs=" + format_int(r.epochs_run) +
                       (r.reached_target ? "" : " below_target");
        } catch (const std::exception& e) {
            failures[p] = model_id(p) + ": " + e.what();
            lines[p] = failures[p];
        }
    }

    CorpusManifest manifest;
    for (const auto& [name, values] : grid.axes) manifest.axes.push_back(name);
    std::size_t succeeded = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (ok[p]) {
            manifest.entries.push_back(std::move(entries[p]));
            ++succeeded;
        }
        if (log_lines) log_lines->push_back(lines[p]);
    }
    if (succeeded == 0) throw Error("every grid point failed; first: " + failures[0]);

    write_manifest(manifest, (fs::path(out_dir) / "manifest.txt").string());
    return manifest;
}

} // namespace gipal
