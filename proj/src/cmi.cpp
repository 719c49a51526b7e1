#include "gipal/cmi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gipal/errors.hpp"
#include "gipal/text.hpp"

namespace gipal {

void MeasureTable::validate() const {
    if (rows.size() < 2) throw EmptyInputError("measure table needs at least 2 rows");
    for (const Row& r : rows) {
        if (r.hyper_values.size() != axes.size())
            throw DimensionError("row " + r.model_id + " has " +
                                 std::to_string(r.hyper_values.size()) + " hyperparameters, expected " +
                                 std::to_string(axes.size()));
        if (r.measures.size() != measure_names.size())
            throw DimensionError("row " + r.model_id + " has " + std::to_string(r.measures.size()) +
                                 " measures, expected " + std::to_string(measure_names.size()));
        if (!std::isfinite(r.gap)) throw NumericError("row " + r.model_id + " has non-finite gap");
        for (double v : r.measures)
            if (!std::isfinite(v))
                throw NumericError("row " + r.model_id + " has a non-finite measure");
    }
}

std::size_t MeasureTable::measure_index(const std::string& name) const {
    auto it = std::find(measure_names.begin(), measure_names.end(), name);
    if (it == measure_names.end()) throw RangeError("no measure named '" + name + "'");
    return static_cast<std::size_t>(it - measure_names.begin());
}

MeasureTable build_measure_table(const CorpusManifest& manifest,
                                 const std::vector<ScoreRecord>& records,
                                 bool include_undertrained) {
    std::map<std::string, std::map<std::string, double>> by_model;
    for (const ScoreRecord& r : records) {
        auto [it, inserted] = by_model[r.model_id].emplace(r.measure, r.value);
        if (!inserted)
            throw DimensionError("duplicate score for model " + r.model_id + ", measure " +
                                 r.measure);
    }

    MeasureTable table;
    table.axes = manifest.axes;
    for (const ManifestEntry& e : manifest.entries) {
        if (e.below_target && !include_undertrained) continue;
        auto it = by_model.find(e.model_id);
        if (it == by_model.end()) continue; // model was never scored
        if (table.measure_names.empty())
            for (const auto& [name, value] : it->second) table.measure_names.push_back(name);
        if (it->second.size() != table.measure_names.size())
            throw DimensionError("model " + e.model_id + " carries " +
                                 std::to_string(it->second.size()) + " measures, expected " +
                                 std::to_string(table.measure_names.size()));
        MeasureTable::Row row;
        row.model_id = e.model_id;
        for (const auto& [axis, value] : e.hyperparams) row.hyper_values.push_back(value);
        row.gap = e.generalization_gap;
        for (const std::string& name : table.measure_names) {
            auto mit = it->second.find(name);
            if (mit == it->second.end())
                throw DimensionError("model " + e.model_id + " is missing measure " + name);
            row.measures.push_back(mit->second);
        }
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw DimensionError("kendall_tau: " + std::to_string(xs.size()) + " vs " +
                             std::to_string(ys.size()) + " values");
    const std::size_t n = xs.size();
    if (n < 2) throw DimensionError("kendall_tau needs at least 2 values");
    long long net = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = xs[i] - xs[j];
            const double dy = ys[i] - ys[j];
            if (dx == 0.0 || dy == 0.0) continue;
            net += (dx > 0.0) == (dy > 0.0) ? 1 : -1;
        }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return static_cast<double>(net) / pairs;
}

std::vector<std::pair<int, int>> pair_signs(const MeasureTable& table,
                                            std::span<const double> mu,
                                            std::span<const std::size_t> group) {
    std::vector<std::size_t> order(group.begin(), group.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return table.rows[a].model_id < table.rows[b].model_id;
    });
    std::vector<std::pair<int, int>> signs;
    for (std::size_t a = 0; a < order.size(); ++a)
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const std::size_t i = order[a], j = order[b];
            if (mu[i] == mu[j] || table.rows[i].gap == table.rows[j].gap) continue;
            signs.emplace_back(mu[i] > mu[j] ? 1 : 0, table.rows[i].gap > table.rows[j].gap ? 1 : 0);
        }
    return signs;
}

namespace {

double entropy2(double p0, double p1) {
    double h = 0.0;
    if (p0 > 0.0) h -= p0 * std::log2(p0);
    if (p1 > 0.0) h -= p1 * std::log2(p1);
    return h;
}

std::string set_name(const std::vector<std::string>& axes) {
    std::string s = "{";
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (i) s += ", ";
        s += axes[i];
    }
    return s + "}";
}

// All conditioning sets of the required size, as axis-index lists in
// lexicographic order.
std::vector<std::vector<std::size_t>> conditioning_sets(std::size_t num_axes) {
    const std::size_t m = std::min<std::size_t>(2, num_axes);
    std::vector<std::vector<std::size_t>> sets;
    if (m == 0) {
        sets.push_back({});
    } else if (m == 1) {
        for (std::size_t a = 0; a < num_axes; ++a) sets.push_back({a});
    } else {
        for (std::size_t a = 0; a < num_axes; ++a)
            for (std::size_t b = a + 1; b < num_axes; ++b) sets.push_back({a, b});
    }
    return sets;
}

} // namespace

std::vector<ConditioningResult> cmi_by_conditioning(const MeasureTable& table,
                                                    std::span<const double> mu) {
    table.validate();
    if (mu.size() != table.rows.size())
        throw DimensionError("measure vector has " + std::to_string(mu.size()) +
                             " values for " + std::to_string(table.rows.size()) + " rows");
    for (double v : mu)
        if (!std::isfinite(v)) throw NumericError("non-finite measure value");

    std::vector<ConditioningResult> results;
    for (const std::vector<std::size_t>& set : conditioning_sets(table.axes.size())) {
        ConditioningResult res;
        for (std::size_t a : set) res.axes.push_back(table.axes[a]);

        // Group rows by their values on the conditioning axes.
        std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            std::vector<std::string> key;
            for (std::size_t a : set) key.push_back(table.rows[r].hyper_values[a]);
            groups[key].push_back(r);
        }

        double weighted_mi = 0.0;
        double weighted_h = 0.0;
        std::size_t usable_pairs = 0;
        std::size_t contributing_pairs = 0;
        for (const auto& [key, members] : groups) {
            const auto signs = pair_signs(table, mu, members);
            const std::size_t n = signs.size();
            usable_pairs += n;
            if (n < 2) continue;
            // Entropies from integer counts, marginals as count sums divided
            // once by n. A saturated group (every pair on the joint diagonal
            // or anti-diagonal) then gives H(U), H(V), and H(U,V) that are
            // bitwise equal, so I = H(U)+H(V)-H(U,V) equals H(V) exactly and
            // a perfect measure scores exactly 100.
            long long count[2][2] = {{0, 0}, {0, 0}};
            for (const auto& [u, v] : signs) ++count[u][v];
            const double N = static_cast<double>(n);
            const double hu = entropy2(static_cast<double>(count[0][0] + count[0][1]) / N,
                                       static_cast<double>(count[1][0] + count[1][1]) / N);
            const double hv = entropy2(static_cast<double>(count[0][0] + count[1][0]) / N,
                                       static_cast<double>(count[0][1] + count[1][1]) / N);
            double hj = 0.0;
            for (const auto& row : count)
                for (long long c : row)
                    if (c > 0) {
                        const double p = static_cast<double>(c) / N;
                        hj -= p * std::log2(p);
                    }
            const double mi = hu + hv - hj;
            const double w = static_cast<double>(n);
            weighted_mi += w * mi;
            weighted_h += w * hv;
            contributing_pairs += n;
        }
        if (usable_pairs == 0)
            throw UndefinedScoreError("no usable pairs under conditioning set " +
                                      set_name(res.axes));
        if (contributing_pairs == 0)
            throw UndefinedScoreError("no group with 2 usable pairs under conditioning set " +
                                      set_name(res.axes));
        if (weighted_h == 0.0)
            throw UndefinedScoreError("gap order is constant within every group of conditioning set " +
                                      set_name(res.axes));
        // The shared total-pair normalization of w_g cancels in the ratio.
        double ratio = weighted_mi / weighted_h;
        ratio = std::clamp(ratio, 0.0, 1.0);
        res.value = 100.0 * ratio;
        results.push_back(std::move(res));
    }
    return results;
}

double cmi_score(const MeasureTable& table, std::span<const double> mu) {
    const auto results = cmi_by_conditioning(table, mu);
    double best = 100.0;
    for (const ConditioningResult& r : results) best = std::min(best, r.value);
    return best;
}

double cmi_score(const MeasureTable& table, const std::string& measure) {
    const std::size_t m = table.measure_index(measure);
    std::vector<double> mu;
    mu.reserve(table.rows.size());
    for (const auto& row : table.rows) mu.push_back(row.measures[m]);
    return cmi_score(table, mu);
}

CmiReport evaluate_all(const MeasureTable& table) {
    table.validate();
    CmiReport report;
    std::vector<double> gaps;
    gaps.reserve(table.rows.size());
    for (const auto& row : table.rows) gaps.push_back(row.gap);

    for (std::size_t m = 0; m < table.measure_names.size(); ++m) {
        MeasureEval eval;
        eval.measure = table.measure_names[m];
        std::vector<double> mu;
        mu.reserve(table.rows.size());
        for (const auto& row : table.rows) mu.push_back(row.measures[m]);
        try {
            eval.breakdown = cmi_by_conditioning(table, mu);
            eval.cmi = 100.0;
            for (const ConditioningResult& r : eval.breakdown)
                eval.cmi = std::min(eval.cmi, r.value);
            eval.tau = kendall_tau(mu, gaps);
            eval.ok = true;
        } catch (const Error& e) {
            eval.ok = false;
            eval.error = e.what();
            eval.breakdown.clear();
            eval.cmi = 0.0;
            eval.tau = 0.0;
        }
        report.rows.push_back(std::move(eval));
    }
    return report;
}

void write_report_csv(const CmiReport& report, const std::string& path) {
    std::string out = "measure,cmi_score,kendall_tau,status\n";
    for (const MeasureEval& e : report.rows) {
        out += e.measure;
        out += ',';
        out += e.ok ? format_double(e.cmi) : "";
        out += ',';
        out += e.ok ? format_double(e.tau) : "";
        out += ',';
        out += e.ok ? "ok" : e.error;
        out += '\n';
    }
    write_text_file(path, out);
}

std::string format_report_text(const CmiReport& report) {
    std::size_t name_w = std::string("measure").size();
    for (const MeasureEval& e : report.rows) name_w = std::max(name_w, e.measure.size());

    auto fixed = [](double v, int prec) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
        return std::string(buf);
    };

    std::string out;
    out += "measure" + std::string(name_w - 7, ' ') + "  cmi_score  kendall_tau\n";
    out += std::string(name_w, '-') + "  ---------  -----------\n";
    for (const MeasureEval& e : report.rows) {
        out += e.measure + std::string(name_w - e.measure.size(), ' ');
        if (e.ok) {
            std::string cmi = fixed(e.cmi, 2);
            std::string tau = fixed(e.tau, 3);
            out += "  " + std::string(9 - std::min<std::size_t>(9, cmi.size()), ' ') + cmi;
            out += "  " + std::string(11 - std::min<std::size_t>(11, tau.size()), ' ') + tau;
            out += '\n';
        } else {
            out += "  undefined: " + e.error + '\n';
        }
    }
    return out;
}

} // namespace gipal
