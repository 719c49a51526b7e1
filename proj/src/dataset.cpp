#include "gipal/dataset.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gipal/errors.hpp"
#include "gipal/rng.hpp"

namespace gipal {

void Dataset::validate() const {
    if (inputs.empty()) throw EmptyInputError("dataset has no samples");
    if (inputs.size() != labels.size())
        throw DimensionError("dataset has " + std::to_string(inputs.size()) + " inputs but " +
                             std::to_string(labels.size()) + " labels");
    if (num_classes <= 0) throw RangeError("num_classes must be positive");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].shape != inputs[0].shape)
            throw DimensionError("sample " + std::to_string(i) + " shape " +
                                 shape_to_string(inputs[i].shape) + " differs from " +
                                 shape_to_string(inputs[0].shape));
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw LabelRangeError("label " + std::to_string(labels[i]) + " outside [0, " +
                                  std::to_string(num_classes) + ") at sample " + std::to_string(i));
    }
}

std::pair<Dataset, Dataset> make_blobs(const BlobSpec& spec) {
    if (spec.num_classes < 2) throw RangeError("make_blobs needs at least 2 classes");
    if (spec.dim < 1 || spec.train_per_class < 1 || spec.test_per_class < 0)
        throw RangeError("make_blobs sizes must be positive");
    if (!(spec.separation > 0.0)) throw RangeError("separation must be positive");

    Rng rng(spec.seed);
    const int k = spec.num_classes;
    const int d = spec.dim;

    std::vector<std::vector<double>> centers(k, std::vector<double>(d));
    for (auto& c : centers)
        for (double& v : c) v = rng.normal();

    double min_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            double s = 0.0;
            for (int t = 0; t < d; ++t) {
                double diff = centers[i][t] - centers[j][t];
                s += diff * diff;
            }
            min_dist = std::min(min_dist, std::sqrt(s));
        }
    }
    if (!(min_dist > 0.0)) throw NumericError("degenerate blob centers");
    const double scale = spec.separation / min_dist;
    for (auto& c : centers)
        for (double& v : c) v *= scale;

    auto draw = [&](int per_class) {
        Dataset ds;
        ds.num_classes = k;
        for (int c = 0; c < k; ++c) {
            for (int n = 0; n < per_class; ++n) {
                std::vector<float> x(d);
                for (int t = 0; t < d; ++t)
                    x[t] = static_cast<float>(centers[c][t] + rng.normal());
                ds.inputs.emplace_back(std::vector<int>{d}, std::move(x));
                ds.labels.push_back(c);
            }
        }
        return ds;
    };

    Dataset train = draw(spec.train_per_class);
    Dataset test = draw(spec.test_per_class);
    return {std::move(train), std::move(test)};
}

} // namespace gipal
