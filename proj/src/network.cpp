#include "gipal/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gipal/errors.hpp"

namespace gipal {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::flatten: return "flatten";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "dense") return LayerKind::dense;
    if (name == "conv2d") return LayerKind::conv2d;
    if (name == "relu") return LayerKind::relu;
    if (name == "flatten") return LayerKind::flatten;
    if (name == "softmax") return LayerKind::softmax;
    throw ParseError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::dense(int in, int out) {
    if (in <= 0 || out <= 0) throw DimensionError("dense dimensions must be positive");
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.in_dim = in;
    l.out_dim = out;
    l.weights.assign(static_cast<std::size_t>(in) * out, 0.0f);
    l.bias.assign(static_cast<std::size_t>(out), 0.0f);
    return l;
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kh, int kw, int stride) {
    if (in_ch <= 0 || out_ch <= 0 || kh <= 0 || kw <= 0 || stride <= 0)
        throw DimensionError("conv2d parameters must be positive");
    LayerSpec l;
    l.kind = LayerKind::conv2d;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kh = kh;
    l.kw = kw;
    l.stride = stride;
    l.weights.assign(static_cast<std::size_t>(out_ch) * in_ch * kh * kw, 0.0f);
    l.bias.assign(static_cast<std::size_t>(out_ch), 0.0f);
    return l;
}

LayerSpec LayerSpec::relu() {
    LayerSpec l;
    l.kind = LayerKind::relu;
    return l;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
}

LayerSpec LayerSpec::softmax() {
    LayerSpec l;
    l.kind = LayerKind::softmax;
    return l;
}

std::size_t LayerSpec::weight_count() const {
    switch (kind) {
        case LayerKind::dense: return static_cast<std::size_t>(in_dim) * out_dim;
        case LayerKind::conv2d: return static_cast<std::size_t>(out_ch) * in_ch * kh * kw;
        default: return 0;
    }
}

std::size_t LayerSpec::bias_count() const {
    switch (kind) {
        case LayerKind::dense: return static_cast<std::size_t>(out_dim);
        case LayerKind::conv2d: return static_cast<std::size_t>(out_ch);
        default: return 0;
    }
}

namespace {

std::vector<int> layer_output_shape(const LayerSpec& l, const std::vector<int>& in, int layer_index) {
    const std::string where = "layer " + std::to_string(layer_index) + " (" + layer_kind_name(l.kind) + ")";
    switch (l.kind) {
        case LayerKind::dense:
            if (in.size() != 1 || in[0] != l.in_dim)
                throw DimensionError(where + " expects input [" + std::to_string(l.in_dim) + "], got " +
                                     shape_to_string(in));
            return {l.out_dim};
        case LayerKind::conv2d: {
            if (in.size() != 3 || in[0] != l.in_ch)
                throw DimensionError(where + " expects input [" + std::to_string(l.in_ch) + ",H,W], got " +
                                     shape_to_string(in));
            if (in[1] < l.kh || in[2] < l.kw)
                throw DimensionError(where + " kernel larger than input " + shape_to_string(in));
            const int oh = (in[1] - l.kh) / l.stride + 1;
            const int ow = (in[2] - l.kw) / l.stride + 1;
            return {l.out_ch, oh, ow};
        }
        case LayerKind::relu: return in;
        case LayerKind::flatten: return {static_cast<int>(Tensor::numel(in))};
        case LayerKind::softmax:
            if (in.size() != 1)
                throw DimensionError(where + " expects a vector input, got " + shape_to_string(in));
            return in;
    }
    throw DimensionError(where + ": unreachable");
}

Tensor apply_layer(const LayerSpec& l, const Tensor& in, int layer_index) {
    Tensor out = Tensor::zeros(layer_output_shape(l, in.shape, layer_index));
    switch (l.kind) {
        case LayerKind::dense: {
            const int ni = l.in_dim;
            const int no = l.out_dim;
            for (int o = 0; o < no; ++o) {
                float s = l.bias[static_cast<std::size_t>(o)];
                const float* w = l.weights.data() + static_cast<std::size_t>(o) * ni;
                for (int i = 0; i < ni; ++i) s += w[i] * in.data[static_cast<std::size_t>(i)];
                out.data[static_cast<std::size_t>(o)] = s;
            }
            break;
        }
        case LayerKind::conv2d: {
            const int ih = in.shape[1], iw = in.shape[2];
            const int oh = out.shape[1], ow = out.shape[2];
            for (int oc = 0; oc < l.out_ch; ++oc) {
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        float s = l.bias[static_cast<std::size_t>(oc)];
                        for (int ic = 0; ic < l.in_ch; ++ic) {
                            for (int ky = 0; ky < l.kh; ++ky) {
                                const int iy = oy * l.stride + ky;
                                const float* row = in.data.data() +
                                                   (static_cast<std::size_t>(ic) * ih + iy) * iw +
                                                   static_cast<std::size_t>(ox) * l.stride;
                                const float* wrow = l.weights.data() +
                                                    ((static_cast<std::size_t>(oc) * l.in_ch + ic) * l.kh + ky) * l.kw;
                                for (int kx = 0; kx < l.kw; ++kx) s += wrow[kx] * row[kx];
                            }
                        }
                        out.data[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = s;
                    }
                }
            }
            break;
        }
        case LayerKind::relu:
            for (std::size_t i = 0; i < in.size(); ++i)
                out.data[i] = in.data[i] > 0.0f ? in.data[i] : 0.0f;
            break;
        case LayerKind::flatten:
            out.data = in.data;
            break;
        case LayerKind::softmax: {
            // Max-subtraction keeps exp() in range.
            float m = in.data[0];
            for (float v : in.data) m = std::max(m, v);
            float sum = 0.0f;
            for (std::size_t i = 0; i < in.size(); ++i) {
                out.data[i] = std::exp(in.data[i] - m);
                sum += out.data[i];
            }
            for (std::size_t i = 0; i < in.size(); ++i) out.data[i] /= sum;
            break;
        }
    }
    return out;
}

void check_input(const Network& net, const Tensor& x) {
    if (x.shape != net.input_shape)
        throw DimensionError("input shape " + shape_to_string(x.shape) + " does not match network input " +
                             shape_to_string(net.input_shape));
    if (!x.all_finite()) throw NumericError("input contains non-finite values");
}

} // namespace

std::vector<int> Network::shape_at(int layer) const {
    if (layer < 0 || layer > layer_count())
        throw IndexError("layer index " + std::to_string(layer) + " outside [0, " +
                         std::to_string(layer_count()) + "]");
    std::vector<int> s = input_shape;
    for (int i = 0; i < layer; ++i) s = layer_output_shape(layers[static_cast<std::size_t>(i)], s, i);
    return s;
}

void Network::validate() const {
    if (layers.empty()) throw DimensionError("network has no layers");
    if (num_classes <= 0) throw RangeError("num_classes must be positive");
    Tensor::numel(input_shape); // rejects non-positive dims

    int softmax_count = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.kind == LayerKind::softmax) ++softmax_count;
        if (l.weights.size() != l.weight_count() || l.bias.size() != l.bias_count())
            throw DimensionError("layer " + std::to_string(i) + " has " + std::to_string(l.weights.size()) +
                                 " weights / " + std::to_string(l.bias.size()) + " biases, declared " +
                                 std::to_string(l.weight_count()) + " / " + std::to_string(l.bias_count()));
    }
    if (softmax_count != 1 || layers.back().kind != LayerKind::softmax)
        throw DimensionError("softmax must appear exactly once, as the final layer");

    std::vector<int> out = shape_at(layer_count()); // walks every layer, checks compatibility
    if (out.size() != 1 || out[0] != num_classes)
        throw DimensionError("final output shape " + shape_to_string(out) + " does not equal num_classes " +
                             std::to_string(num_classes));
}

Tensor forward(const Network& net, const Tensor& x) {
    check_input(net, x);
    Tensor cur = x;
    for (int i = 0; i < net.layer_count(); ++i)
        cur = apply_layer(net.layers[static_cast<std::size_t>(i)], cur, i);
    return cur;
}

Tensor activations(const Network& net, const Tensor& x, int layer) {
    if (layer < 0 || layer > net.layer_count())
        throw IndexError("layer index " + std::to_string(layer) + " outside [0, " +
                         std::to_string(net.layer_count()) + "]");
    check_input(net, x);
    Tensor cur = x;
    for (int i = 0; i < layer; ++i)
        cur = apply_layer(net.layers[static_cast<std::size_t>(i)], cur, i);
    return cur;
}

Tensor forward_from(const Network& net, const Tensor& x_layer, int layer) {
    if (layer < 0 || layer > net.layer_count())
        throw IndexError("layer index " + std::to_string(layer) + " outside [0, " +
                         std::to_string(net.layer_count()) + "]");
    if (x_layer.shape != net.shape_at(layer))
        throw DimensionError("representation shape " + shape_to_string(x_layer.shape) +
                             " does not match layer " + std::to_string(layer) + " output " +
                             shape_to_string(net.shape_at(layer)));
    Tensor cur = x_layer;
    for (int i = layer; i < net.layer_count(); ++i)
        cur = apply_layer(net.layers[static_cast<std::size_t>(i)], cur, i);
    return cur;
}

int shallowest_tap(const Network& net) {
    for (int i = 0; i < net.layer_count(); ++i)
        if (net.layers[static_cast<std::size_t>(i)].kind == LayerKind::relu) return i + 1;
    return std::min(1, net.layer_count());
}

int predict(const Network& net, const Tensor& x) {
    Tensor p = forward(net, x);
    int best = 0;
    for (int i = 1; i < static_cast<int>(p.size()); ++i)
        if (p.data[static_cast<std::size_t>(i)] > p.data[static_cast<std::size_t>(best)]) best = i;
    return best;
}

double accuracy(const Network& net, const Dataset& data) {
    if (data.size() == 0) throw EmptyInputError("accuracy over empty dataset");
    data.validate();
    const auto n = static_cast<std::int64_t>(data.size());
    std::int64_t correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct)
    for (std::int64_t i = 0; i < n; ++i) {
        if (predict(net, data.inputs[static_cast<std::size_t>(i)]) == data.labels[static_cast<std::size_t>(i)])
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

namespace serial {

double accuracy(const Network& net, const Dataset& data) {
    if (data.size() == 0) throw EmptyInputError("accuracy over empty dataset");
    data.validate();
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (predict(net, data.inputs[i]) == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace serial

} // namespace gipal
