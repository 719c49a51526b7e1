#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gipal/dataset.hpp"
#include "gipal/network.hpp"
#include "gipal/perturb.hpp"
#include "gipal/scores.hpp"

namespace gipal {

// Model file: a line-oriented text header declaring the layer stack, then one
// little-endian float32 blob with every layer's weights and biases in layer
// order. Round-trips are bit-exact.
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

enum class DatasetFormat { csv, idx };

// csv: one sample per line, label first, then the feature values.
// idx: standard image/label file pair (magic 0x00000803 / 0x00000801,
// big-endian dims); 8-bit values are scaled to [0, 1]. For the single-path
// overload the label file is derived by substituting "images" -> "labels" and
// "idx3" -> "idx1" in the image path.
// num_classes = 0 infers max label + 1.
Dataset load_dataset(const std::string& path, DatasetFormat format, int num_classes = 0);
Dataset load_dataset_idx(const std::string& images_path, const std::string& labels_path,
                         int num_classes = 0);
void write_dataset_csv(const Dataset& data, const std::string& path);

// Guesses csv for a ".csv" suffix, idx otherwise.
DatasetFormat dataset_format_for_path(const std::string& path);

struct CurveExport {
    std::string model_id;
    PRCurve curve;
};

// Curve CSV: header plus one row per grid point with columns
// alpha, accuracy, pcd, model_id, perturbation_kind, layer.
// Values are written with shortest round-trip precision.
void write_curves(const std::vector<CurveExport>& curves, const std::string& path);
std::vector<CurveExport> read_curves(const std::string& path);

struct ManifestEntry {
    std::string model_id;
    std::string weight_file; // relative to the manifest's directory
    std::vector<std::pair<std::string, std::string>> hyperparams; // axis -> value, axis order
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double generalization_gap = 0.0;
    bool below_target = false;
};

struct CorpusManifest {
    std::vector<std::string> axes;
    std::vector<ManifestEntry> entries;

    // Gap consistency (gap == train - test within 1e-9) and uniform axis
    // names; throws on violation.
    void validate() const;
};

void write_manifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest load_manifest(const std::string& path); // validates

void write_scores_csv(const std::vector<ScoreRecord>& records, const std::string& path);
std::vector<ScoreRecord> load_scores_csv(const std::string& path);

} // namespace gipal
