#include <cstdio>
#include <exception>
#include <filesystem>

#include <CLI11.hpp>
#include <omp.h>

#include "commands.hpp"
#include "gipal/errors.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitDomain = 3;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perturbation-response curve statistics for generalization-gap prediction"};
    app.require_subcommand(1);
    int jobs = 0;

    app.add_option("--jobs", jobs, "worker threads for batch commands (0 = all cores)");

    gipal::cli::TrainCorpusArgs tc;
    CLI::App* train = app.add_subcommand("train-corpus", "train one model per grid point");
    train->add_option("--config", tc.config, "grid config file")->required();
    train->add_option("--data", tc.data, "training set (csv or idx)")->required();
    train->add_option("--test-data", tc.test_data, "held-out set")->required();
    train->add_option("--out", tc.out_dir, "corpus output directory")->required();
    auto* tc_seed = train->add_option("--seed", tc.seed, "override the config's base seed");
    train->add_flag("--quiet", tc.quiet, "suppress per-model lines");

    gipal::cli::ScoreArgs sc;
    CLI::App* score = app.add_subcommand("score", "compute complexity measures per model");
    score->add_option("--corpus-dir", sc.corpus_dir, "directory with manifest.txt")->required();
    score->add_option("--data", sc.data, "dataset the sweeps run on")->required();
    score->add_option("--out", sc.out, "score CSV path (default <corpus-dir>/scores.csv)");
    score->add_option("--measures", sc.measures, "measure names (default: the 11 standard ones)")
        ->delimiter(',');
    score->add_option("--grid-points", sc.grid_points, "magnitude grid size")->capture_default_str();
    score->add_option("--subset-size", sc.subset_size, "evaluation subset size")->capture_default_str();
    score->add_option("--seed", sc.seed, "pairing/subset seed")->capture_default_str();
    score->add_flag("--quiet", sc.quiet, "suppress the summary line");

    gipal::cli::EvaluateArgs ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "CMI + Kendall tau report over a corpus");
    evaluate->add_option("--corpus-dir", ev.corpus_dir, "directory with manifest.txt")->required();
    evaluate->add_option("--scores", ev.scores, "score CSV (default <corpus-dir>/scores.csv)");
    evaluate->add_option("--out", ev.out_dir, "report directory (default <corpus-dir>)");
    evaluate->add_flag("--include-undertrained", ev.include_undertrained,
                       "keep models flagged below_target");
    evaluate->add_flag("--quiet", ev.quiet, "do not print the report");

    gipal::cli::ExportCurvesArgs ec;
    CLI::App* exportc = app.add_subcommand("export-curves", "PR + PCD grid for one model");
    exportc->add_option("--corpus-dir", ec.corpus_dir, "corpus holding the model");
    exportc->add_option("--model", ec.model_id, "model id within the corpus");
    exportc->add_option("--model-file", ec.model_file, "model file path (bypasses the corpus)");
    exportc->add_option("--data", ec.data, "dataset the sweep runs on")->required();
    exportc->add_option("--out", ec.out, "curve CSV path")->required();
    exportc->add_option("--kind", ec.kind, "inter | intra | gaussian")->capture_default_str()
        ->check(CLI::IsMember({"inter", "intra", "gaussian"}));
    exportc->add_option("--layer", ec.layer, "input | shallowest")->capture_default_str()
        ->check(CLI::IsMember({"input", "shallowest"}));
    exportc->add_option("--grid-points", ec.grid_points, "magnitude grid size")->capture_default_str();
    exportc->add_option("--subset-size", ec.subset_size, "evaluation subset size")->capture_default_str();
    exportc->add_option("--seed", ec.seed, "pairing/subset seed")->capture_default_str();

    gipal::cli::MakeBlobsArgs mb;
    CLI::App* blobs = app.add_subcommand("make-blobs", "synthetic Gaussian blob datasets");
    blobs->add_option("--out-train", mb.out_train, "train CSV path")->required();
    blobs->add_option("--out-test", mb.out_test, "test CSV path")->required();
    blobs->add_option("--classes", mb.num_classes, "class count")->capture_default_str();
    blobs->add_option("--dim", mb.dim, "feature dimension")->capture_default_str();
    blobs->add_option("--train-per-class", mb.train_per_class, "train samples per class")->capture_default_str();
    blobs->add_option("--test-per-class", mb.test_per_class, "test samples per class")->capture_default_str();
    blobs->add_option("--separation", mb.separation, "min centroid distance in noise units")->capture_default_str();
    blobs->add_option("--seed", mb.seed, "generator seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (jobs > 0) omp_set_num_threads(jobs);
    tc.seed_given = tc_seed->count() > 0;

    try {
        if (train->parsed()) return gipal::cli::cmd_train_corpus(tc);
        if (score->parsed()) return gipal::cli::cmd_score(sc);
        if (evaluate->parsed()) return gipal::cli::cmd_evaluate(ev);
        if (exportc->parsed()) return gipal::cli::cmd_export_curves(ec);
        if (blobs->parsed()) return gipal::cli::cmd_make_blobs(mb);
        std::fprintf(stderr, "no command given\n");
        return kExitUsage;
    } catch (const gipal::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const gipal::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const gipal::LengthError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const gipal::EmptyInputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const gipal::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDomain;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDomain;
    }
}
