#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gipal::cli {

struct TrainCorpusArgs {
    std::string config;    // grid file
    std::string data;      // training set
    std::string test_data; // held-out set
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool quiet = false;
};

struct ScoreArgs {
    std::string corpus_dir;
    std::string data;
    std::string out; // defaults to <corpus_dir>/scores.csv
    std::vector<std::string> measures;
    int grid_points = 26;
    int subset_size = 512;
    std::uint64_t seed = 0;
    bool quiet = false;
};

struct EvaluateArgs {
    std::string corpus_dir;
    std::string scores; // defaults to <corpus_dir>/scores.csv
    std::string out_dir; // defaults to <corpus_dir>
    bool include_undertrained = false;
    bool quiet = false;
};

struct ExportCurvesArgs {
    std::string corpus_dir;
    std::string model_id;
    std::string model_file; // alternative to corpus_dir + model_id
    std::string data;
    std::string out;
    std::string kind = "inter";
    std::string layer = "input";
    int grid_points = 26;
    int subset_size = 512;
    std::uint64_t seed = 0;
};

struct MakeBlobsArgs {
    std::string out_train;
    std::string out_test;
    int num_classes = 4;
    int dim = 16;
    int train_per_class = 64;
    int test_per_class = 256;
    double separation = 3.0;
    std::uint64_t seed = 1;
};

int cmd_train_corpus(const TrainCorpusArgs& args);
int cmd_score(const ScoreArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_export_curves(const ExportCurvesArgs& args);
int cmd_make_blobs(const MakeBlobsArgs& args);

} // namespace gipal::cli
