#include "commands.hpp"

#include <cstdio>
#include <filesystem>

#include "gipal/cmi.hpp"
#include "gipal/data_io.hpp"
#include "gipal/errors.hpp"
#include "gipal/rng.hpp"
#include "gipal/scores.hpp"
#include "gipal/text.hpp"
#include "gipal/trainer.hpp"

namespace gipal::cli {

namespace fs = std::filesystem;

namespace {

Dataset load_any(const std::string& path) {
    return load_dataset(path, dataset_format_for_path(path));
}

} // namespace

int cmd_train_corpus(const TrainCorpusArgs& args) {
    HyperGrid grid = load_grid(args.config);
    if (args.seed_given) grid.base.seed = args.seed; // flag wins over the config file
    const Dataset train_data = load_any(args.data);
    const Dataset test_data = load_any(args.test_data);

    std::vector<std::string> log_lines;
    const CorpusManifest manifest =
        generate_corpus(grid, train_data, test_data, args.out_dir, &log_lines);
    if (!args.quiet)
        for (const std::string& line : log_lines) std::printf("%s\n", line.c_str());
    std::printf("wrote %zu models and %s\n", manifest.entries.size(),
                (fs::path(args.out_dir) / "manifest.txt").string().c_str());
    return 0;
}

int cmd_score(const ScoreArgs& args) {
    const std::string manifest_path = (fs::path(args.corpus_dir) / "manifest.txt").string();
    const CorpusManifest manifest = load_manifest(manifest_path);
    const Dataset data = load_any(args.data);
    const std::string out =
        args.out.empty() ? (fs::path(args.corpus_dir) / "scores.csv").string() : args.out;

    const std::size_t n = manifest.entries.size();
    std::vector<std::vector<ScoreRecord>> per_model(n);
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const ManifestEntry& e = manifest.entries[static_cast<std::size_t>(i)];
        try {
            const Network net =
                load_model((fs::path(args.corpus_dir) / e.weight_file).string());
            ScoreOptions opts;
            opts.grid_points = args.grid_points;
            opts.subset_size = args.subset_size;
            opts.seed = mix_seed(args.seed, hash_string(e.model_id));
            opts.measures = args.measures;
            per_model[static_cast<std::size_t>(i)] = score_model(net, data, e.model_id, opts);
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(i)] = e.model_id + ": " + ex.what();
        }
    }

    std::vector<ScoreRecord> records;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
            std::fprintf(stderr, "score failed for %s\n", errors[i].c_str());
            continue;
        }
        records.insert(records.end(), per_model[i].begin(), per_model[i].end());
        ++scored;
    }
    write_scores_csv(records, out);
    if (!args.quiet)
        std::printf("scored %zu/%zu models, %zu records -> %s\n", scored, n, records.size(),
                    out.c_str());
    return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
    const std::string manifest_path = (fs::path(args.corpus_dir) / "manifest.txt").string();
    const CorpusManifest manifest = load_manifest(manifest_path);
    const std::string scores_path =
        args.scores.empty() ? (fs::path(args.corpus_dir) / "scores.csv").string() : args.scores;
    const std::vector<ScoreRecord> records = load_scores_csv(scores_path);

    const MeasureTable table = build_measure_table(manifest, records, args.include_undertrained);
    const CmiReport report = evaluate_all(table);

    const std::string out_dir = args.out_dir.empty() ? args.corpus_dir : args.out_dir;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    write_report_csv(report, (fs::path(out_dir) / "report.csv").string());
    const std::string text = format_report_text(report);
    write_text_file((fs::path(out_dir) / "report.txt").string(), text);
    if (!args.quiet) std::printf("%s", text.c_str());
    return 0;
}

int cmd_export_curves(const ExportCurvesArgs& args) {
    std::string model_path = args.model_file;
    std::string model_id = args.model_id;
    if (model_path.empty()) {
        const CorpusManifest manifest =
            load_manifest((fs::path(args.corpus_dir) / "manifest.txt").string());
        const ManifestEntry* found = nullptr;
        for (const ManifestEntry& e : manifest.entries)
            if (e.model_id == args.model_id) found = &e;
        if (!found) throw RangeError("no model '" + args.model_id + "' in " + args.corpus_dir);
        model_path = (fs::path(args.corpus_dir) / found->weight_file).string();
    } else if (model_id.empty()) {
        model_id = fs::path(model_path).stem().string();
    }

    const Network net = load_model(model_path);
    const Dataset data = load_any(args.data);

    PerturbationSpec spec;
    spec.kind = perturb_kind_from_name(args.kind);
    if (args.layer == "input")
        spec.layer = 0;
    else if (args.layer == "shallowest")
        spec.layer = shallowest_tap(net);
    else
        throw RangeError("layer must be 'input' or 'shallowest', got '" + args.layer + "'");
    spec.alpha_grid = default_alpha_grid(spec.kind, args.grid_points);
    spec.subset_size = args.subset_size;
    // Matches the seed derivation of the score command, so exported curves
    // reproduce the sweep behind the score records.
    spec.pairing_seed = mix_seed(args.seed, hash_string(model_id));

    const PRCurve curve = pr_curve(net, data, spec);
    write_curves({{model_id, curve}}, args.out);
    std::printf("wrote %zu grid points for %s -> %s\n", curve.alphas.size(), model_id.c_str(),
                args.out.c_str());
    return 0;
}

int cmd_make_blobs(const MakeBlobsArgs& args) {
    BlobSpec spec;
    spec.num_classes = args.num_classes;
    spec.dim = args.dim;
    spec.train_per_class = args.train_per_class;
    spec.test_per_class = args.test_per_class;
    spec.separation = args.separation;
    spec.seed = args.seed;
    const auto [train_data, test_data] = make_blobs(spec);
    write_dataset_csv(train_data, args.out_train);
    write_dataset_csv(test_data, args.out_test);
    std::printf("wrote %zu train and %zu test samples (%d classes, dim %d)\n", train_data.size(),
                test_data.size(), spec.num_classes, spec.dim);
    return 0;
}

} // namespace gipal::cli
