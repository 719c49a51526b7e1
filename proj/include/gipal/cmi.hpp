#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gipal/data_io.hpp"

namespace gipal {

// One model per row: its hyperparameter values (as grid strings), its
// generalization gap, and one value per measure.
struct MeasureTable {
    std::vector<std::string> axes;
    std::vector<std::string> measure_names;

    struct Row {
        std::string model_id;
        std::vector<std::string> hyper_values; // parallel to axes
        double gap = 0.0;
        std::vector<double> measures; // parallel to measure_names
    };
    std::vector<Row> rows;

    void validate() const; // >= 2 rows, uniform widths, finite values
    std::size_t measure_index(const std::string& name) const;
};

// Inner join of manifest entries and score records on model_id. Entries
// flagged below_target are dropped unless include_undertrained. Every joined
// model must carry the same measure set.
MeasureTable build_measure_table(const CorpusManifest& manifest,
                                 const std::vector<ScoreRecord>& records,
                                 bool include_undertrained = false);

// Tau-a: (concordant - discordant) / C(n,2); ties add 0 to the numerator but
// stay in the denominator.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

// Binary order indicators over every untied unordered row pair in `group`
// (indices into table.rows), pair members ordered by model_id:
// (1[mu_i > mu_j], 1[gap_i > gap_j]). Pairs tied in either variable are
// dropped.
std::vector<std::pair<int, int>> pair_signs(const MeasureTable& table,
                                            std::span<const double> mu,
                                            std::span<const std::size_t> group);

struct ConditioningResult {
    std::vector<std::string> axes; // the conditioning set S
    double value = 0.0;            // normalized conditional MI x 100
};

// Per conditioning set S (|S| = min(2, #axes)): group rows by their values on
// S, compute pair signs per group, and form
//   sum_g w_g I_g(Umu; Ug) / sum_g w_g H_g(Ug)
// with base-2 entropies and w_g proportional to the group's usable pair
// count; groups with < 2 usable pairs contribute 0 to both sums. Throws
// UndefinedScoreError naming S when a set has no usable pairs or a zero
// entropy denominator.
std::vector<ConditioningResult> cmi_by_conditioning(const MeasureTable& table,
                                                    std::span<const double> mu);

// 100 x the minimum over conditioning sets; in [0, 100].
double cmi_score(const MeasureTable& table, std::span<const double> mu);
double cmi_score(const MeasureTable& table, const std::string& measure);

struct MeasureEval {
    std::string measure;
    bool ok = false;
    std::string error; // empty when ok
    double cmi = 0.0;
    double tau = 0.0;
    std::vector<ConditioningResult> breakdown;
};

struct CmiReport {
    std::vector<MeasureEval> rows;
};

// Evaluates every measure; per-measure failures land in the report rather
// than aborting the rest.
CmiReport evaluate_all(const MeasureTable& table);

// CSV columns: measure, cmi_score, kendall_tau, status.
void write_report_csv(const CmiReport& report, const std::string& path);

// Fixed-width text table, one measure per row.
std::string format_report_text(const CmiReport& report);

} // namespace gipal
