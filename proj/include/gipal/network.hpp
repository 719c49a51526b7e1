#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gipal/dataset.hpp"
#include "gipal/tensor.hpp"

namespace gipal {

enum class LayerKind { dense, conv2d, relu, flatten, softmax };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

// One layer of the stack. Parameter fields are only meaningful for the kinds
// that declare them; weights/bias stay empty otherwise.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;

    // dense
    int in_dim = 0;
    int out_dim = 0;

    // conv2d (valid padding, square stride)
    int in_ch = 0;
    int out_ch = 0;
    int kh = 0;
    int kw = 0;
    int stride = 1;

    std::vector<float> weights; // dense: [out][in]; conv2d: [out_ch][in_ch][kh][kw]
    std::vector<float> bias;    // dense: [out]; conv2d: [out_ch]

    static LayerSpec dense(int in, int out);
    static LayerSpec conv2d(int in_ch, int out_ch, int kh, int kw, int stride = 1);
    static LayerSpec relu();
    static LayerSpec flatten();
    static LayerSpec softmax();

    std::size_t weight_count() const;
    std::size_t bias_count() const;
    std::size_t param_count() const { return weight_count() + bias_count(); }
};

// Immutable feed-forward stack realizing the full map, per-layer tap points,
// and suffix maps. Layer index 0 is the input itself; index L is the output
// of the final layer.
struct Network {
    std::vector<LayerSpec> layers;
    int num_classes = 0;
    std::vector<int> input_shape;

    int layer_count() const { return static_cast<int>(layers.size()); }

    // Output shape of tap point `layer` in [0, layer_count()].
    std::vector<int> shape_at(int layer) const;

    // Enforces: parameter lengths match declared dimensions, consecutive layer
    // shapes are compatible, softmax appears exactly once as the final layer,
    // and the final dimension equals num_classes. Throws on violation.
    void validate() const;
};

// Full forward map; returns the class distribution (length num_classes).
Tensor forward(const Network& net, const Tensor& x);

// Output of tap point `layer`; layer 0 returns x unchanged.
Tensor activations(const Network& net, const Tensor& x, int layer);

// Suffix map: applies the layers remaining after tap point `layer` to an
// intermediate representation. forward_from(net, activations(net, x, l), l)
// == forward(net, x) bit-exactly for every x and l.
Tensor forward_from(const Network& net, const Tensor& x_layer, int layer);

// Tap point of the shallowest hidden representation: the output of the first
// relu (the first full affine + nonlinearity unit), falling back to tap 1 for
// stacks without one. Mixup at an affine tap commutes with the affine map and
// would collapse onto input-level mixup, so shallow-representation statistics
// hook in after the nonlinearity.
int shallowest_tap(const Network& net);

// Index of the maximum-probability class; ties break to the lowest index.
int predict(const Network& net, const Tensor& x);

// Fraction of samples whose predicted class equals the label. The count is an
// exact integer; one division at the end. Parallel over samples.
double accuracy(const Network& net, const Dataset& data);

namespace serial {
// Reference implementation, single-threaded. Must agree bit-exactly with the
// parallel version.
double accuracy(const Network& net, const Dataset& data);
} // namespace serial

} // namespace gipal
