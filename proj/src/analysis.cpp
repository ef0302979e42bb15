#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "synthval/error.hpp"
#include "synthval/pipeline.hpp"
#include "synthval/rng.hpp"
#include "synthval/stats.hpp"

namespace synthval {

std::string_view to_string(QualityMetric q) { return q == QualityMetric::Propensity ? "p" : "u_pca"; }

std::optional<double> quality_value(const EnsembleReport& r, QualityMetric q) {
    if (!r.ok) return std::nullopt;
    if (q == QualityMetric::Propensity) return r.metrics.propensity;
    return r.u_pca;
}

double relative_accuracy(double pa_synth, double pa_real) { return std::fabs(pa_synth - pa_real); }

std::vector<Winner> select_optimal(std::span<const EnsembleReport> reports, QualityMetric q, SelectionScope scope) {
    // Key (dataset, generator or 0) -> best index so far.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> best;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto value = quality_value(reports[i], q);
        if (!value) continue;
        const std::size_t group = scope == SelectionScope::PerDatasetGenerator ? reports[i].generator : 0;
        const auto key = std::make_pair(reports[i].dataset, group);
        auto it = best.find(key);
        if (it == best.end()) {
            best.emplace(key, i);
            continue;
        }
        const EnsembleReport& cur = reports[it->second];
        const double cur_value = *quality_value(cur, q);
        const bool better = *value < cur_value ||
                            (*value == cur_value && std::make_pair(reports[i].generator, reports[i].split) <
                                                        std::make_pair(cur.generator, cur.split));
        if (better) it->second = i;
    }
    if (best.empty()) throw PreconditionError("no ensemble carries a " + std::string(to_string(q)) + " value");
    std::vector<Winner> out;
    for (const auto& [key, index] : best) {
        Winner w;
        w.dataset = key.first;
        if (scope == SelectionScope::PerDatasetGenerator) w.generator = key.second;
        w.ensemble = index;
        out.push_back(w);
    }
    return out;
}

std::size_t winning_classifier(std::span<const double> accuracies) {
    if (accuracies.empty()) throw PreconditionError("no classifier accuracies");
    std::size_t best = 0;
    for (std::size_t c = 1; c < accuracies.size(); ++c) {
        if (accuracies[c] > accuracies[best]) best = c;
    }
    return best;
}

std::vector<std::optional<MetricVector>> dataset_minima(std::span<const EnsembleReport> reports, std::size_t n_datasets) {
    std::vector<std::optional<MetricVector>> out(n_datasets);
    for (const auto& r : reports) {
        if (!r.ok || r.dataset >= n_datasets) continue;
        auto& m = out[r.dataset];
        if (!m) {
            m = r.metrics;
            continue;
        }
        auto a = m->as_array();
        const auto b = r.metrics.as_array();
        for (std::size_t k = 0; k < 4; ++k) a[k] = std::min(a[k], b[k]);
        m = MetricVector::from_array(a);
    }
    return out;
}

SummaryColumn corpus_summary(std::span<const EnsembleReport> reports, std::span<const Winner> winners,
                             std::span<const std::size_t> datasets) {
    std::size_t n_datasets = 0;
    for (const auto& r : reports) n_datasets = std::max(n_datasets, r.dataset + 1);
    const auto minima = dataset_minima(reports, n_datasets);

    std::array<double, 4> lo;
    std::array<double, 4> hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& r : reports) {
        if (!r.ok) continue;
        const auto v = r.metrics.as_array();
        for (std::size_t k = 0; k < 4; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    }

    SummaryColumn out;
    std::array<double, 4> sum{};
    std::array<double, 4> sum_normalized{};
    for (const auto& w : winners) {
        if (w.generator) continue;
        if (std::find(datasets.begin(), datasets.end(), w.dataset) == datasets.end()) continue;
        if (!minima[w.dataset]) continue;
        const auto chosen = reports[w.ensemble].metrics.as_array();
        const auto best = minima[w.dataset]->as_array();
        for (std::size_t k = 0; k < 4; ++k) {
            const double diff = std::fabs(chosen[k] - best[k]);
            sum[k] += diff;
            const double range = hi[k] - lo[k];
            sum_normalized[k] += range > 0.0 ? diff / range : 0.0;
        }
        ++out.n_datasets;
    }
    if (out.n_datasets == 0) return out;
    const double n = static_cast<double>(out.n_datasets);
    std::array<double, 4> avg;
    for (std::size_t k = 0; k < 4; ++k) {
        avg[k] = sum[k] / n;
        out.overall += avg[k] / 4.0;
        out.overall_normalized += sum_normalized[k] / n / 4.0;
    }
    out.avg_abs_diff = MetricVector::from_array(avg);
    return out;
}

std::vector<std::optional<double>> stability(std::span<const EnsembleReport> reports, QualityMetric q,
                                             std::size_t n_generators) {
    // (generator, dataset) -> (min, max)
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> range;
    for (const auto& r : reports) {
        const auto v = quality_value(r, q);
        if (!v || r.generator >= n_generators) continue;
        const auto key = std::make_pair(r.generator, r.dataset);
        auto it = range.find(key);
        if (it == range.end()) {
            range.emplace(key, std::make_pair(*v, *v));
        } else {
            it->second.first = std::min(it->second.first, *v);
            it->second.second = std::max(it->second.second, *v);
        }
    }
    std::vector<double> sum(n_generators, 0.0);
    std::vector<std::size_t> count(n_generators, 0);
    for (const auto& [key, mm] : range) {
        sum[key.first] += mm.second - mm.first;
        ++count[key.first];
    }
    std::vector<std::optional<double>> out(n_generators);
    for (std::size_t g = 0; g < n_generators; ++g) {
        if (count[g] > 0) out[g] = sum[g] / static_cast<double>(count[g]);
    }
    return out;
}

std::string MatchTally::text() const { return std::to_string(matches) + "/" + std::to_string(total); }

namespace {

bool is_testing(const ExperimentReport& report, std::size_t d) {
    return std::find(report.pca_testing.begin(), report.pca_testing.end(), d) != report.pca_testing.end();
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

MatchTally winner_matches(const ExperimentReport& report, QualityMetric q) {
    MatchTally tally;
    std::vector<Winner> winners;
    try {
        winners = select_optimal(report.ensembles, q, SelectionScope::PerDataset);
    } catch (const PreconditionError&) {
        return tally;
    }
    for (const auto& w : winners) {
        const auto& ds = report.datasets[w.dataset];
        if (!is_testing(report, w.dataset) || !ds.baseline_ok) continue;
        ++tally.total;
        if (winning_classifier(report.ensembles[w.ensemble].accuracy) == winning_classifier(ds.baseline)) ++tally.matches;
    }
    return tally;
}

std::vector<MatchTally> generator_matches(const ExperimentReport& report) {
    std::vector<MatchTally> out(report.generator_names.size());
    for (const auto& r : report.ensembles) {
        const auto& ds = report.datasets[r.dataset];
        if (!r.ok || !is_testing(report, r.dataset) || !ds.baseline_ok) continue;
        auto& t = out[r.generator];
        ++t.total;
        if (winning_classifier(r.accuracy) == winning_classifier(ds.baseline)) ++t.matches;
    }
    return out;
}

std::vector<CorrelationEntry> quality_correlations(const ExperimentReport& report) {
    std::vector<CorrelationEntry> out;
    const std::size_t n_gen = report.generator_names.size();
    for (QualityMetric q : {QualityMetric::Propensity, QualityMetric::Upca}) {
        for (std::size_t g = 0; g <= n_gen; ++g) {
            CorrelationEntry e;
            e.group = g < n_gen ? report.generator_names[g] : "overall";
            e.quality = std::string(to_string(q));
            std::vector<double> x;
            std::vector<double> y;
            for (const auto& r : report.ensembles) {
                if (g < n_gen && r.generator != g) continue;
                const auto v = quality_value(r, q);
                if (!v || !is_testing(report, r.dataset)) continue;
                x.push_back(*v);
                y.push_back(r.ara);
            }
            e.n = x.size();
            if (x.size() < 3) {
                e.note = "fewer than 3 ensembles";
            } else {
                try {
                    const auto c = pearson_corr(x, y);
                    e.r = c.r;
                    e.p_value = c.p_value;
                } catch (const DegenerateError&) {
                    e.note = "constant input";
                }
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

namespace {

nlohmann::json ensemble_json(const ExperimentReport& report, const EnsembleReport& r) {
    nlohmann::json j = {{"dataset", report.datasets[r.dataset].name},
                        {"generator", report.generator_names[r.generator]},
                        {"split", r.split},
                        {"ok", r.ok}};
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["metrics"] = r.metrics.to_json();
    j["u_pca"] = optional_json(r.u_pca);
    nlohmann::json pa = nlohmann::json::object();
    nlohmann::json ra = nlohmann::json::object();
    for (std::size_t c = 0; c < report.classifier_names.size(); ++c) {
        pa[report.classifier_names[c]] = r.accuracy[c];
        ra[report.classifier_names[c]] = r.relative_accuracy[c];
    }
    j["accuracy"] = pa;
    j["relative_accuracy"] = ra;
    j["ara"] = r.ara;
    j["winning_classifier"] = report.classifier_names[winning_classifier(r.accuracy)];
    j["ci_width_p"] = optional_json(r.ci_width_p);
    j["ci_width_u_pca"] = optional_json(r.ci_width_upca);
    nlohmann::json dps = nlohmann::json::array();
    for (const auto& dp : r.datapoints) {
        dps.push_back({{"metrics", dp.metrics.to_json()}, {"accuracy", dp.accuracy}, {"u_pca", optional_json(dp.u_pca)}});
    }
    j["datapoints"] = dps;
    return j;
}

std::vector<std::optional<SummaryColumn>> summary_columns(const ExperimentReport& report) {
    std::vector<std::optional<SummaryColumn>> out;
    for (QualityMetric q : {QualityMetric::Propensity, QualityMetric::Upca}) {
        try {
            const auto winners = select_optimal(report.ensembles, q, SelectionScope::PerDataset);
            out.push_back(corpus_summary(report.ensembles, winners, report.pca_testing));
        } catch (const PreconditionError&) {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

nlohmann::json winners_json(const ExperimentReport& report, QualityMetric q, SelectionScope scope) {
    nlohmann::json arr = nlohmann::json::array();
    std::vector<Winner> winners;
    try {
        winners = select_optimal(report.ensembles, q, scope);
    } catch (const PreconditionError&) {
        return arr;
    }
    for (const auto& w : winners) {
        const auto& r = report.ensembles[w.ensemble];
        nlohmann::json j = {{"dataset", report.datasets[w.dataset].name},
                            {"ensemble", w.ensemble},
                            {"generator", report.generator_names[r.generator]},
                            {"split", r.split},
                            {"value", *quality_value(r, q)},
                            {"winning_classifier", report.classifier_names[winning_classifier(r.accuracy)]}};
        if (w.generator) j["group_generator"] = report.generator_names[*w.generator];
        arr.push_back(j);
    }
    return arr;
}

}  // namespace

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j;
    j["config"] = config;
    j["generators"] = generator_names;
    j["classifiers"] = classifier_names;

    nlohmann::json ds = nlohmann::json::array();
    const auto minima = dataset_minima(ensembles, datasets.size());
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        const auto& s = datasets[d];
        nlohmann::json e = {{"name", s.name},
                            {"role", std::string(to_string(s.role))},
                            {"rows", s.n_rows},
                            {"columns", s.n_cols},
                            {"baseline_ok", s.baseline_ok},
                            {"impute_warnings", s.impute_warnings}};
        if (s.baseline_ok) {
            nlohmann::json pa = nlohmann::json::object();
            for (std::size_t c = 0; c < classifier_names.size(); ++c) pa[classifier_names[c]] = s.baseline[c];
            e["baseline_accuracy"] = pa;
            e["baseline_accuracy_per_split"] = s.baseline_per_split;
            e["winning_classifier"] = classifier_names[winning_classifier(s.baseline)];
        } else {
            e["baseline_error"] = s.baseline_error;
        }
        e["metric_minima"] = minima[d] ? minima[d]->to_json() : nlohmann::json(nullptr);
        ds.push_back(e);
    }
    j["datasets"] = ds;
    j["pca_training"] = pca_training;
    j["pca_testing"] = pca_testing;

    nlohmann::json ens = nlohmann::json::array();
    for (const auto& r : ensembles) ens.push_back(ensemble_json(*this, r));
    j["ensembles"] = ens;
    j["failed_cells"] = failed_cells();

    if (upca) j["upca"] = upca->to_json();
    else j["upca"] = {{"error", upca_error}};

    nlohmann::json analysis;
    for (QualityMetric q : {QualityMetric::Propensity, QualityMetric::Upca}) {
        const std::string name(to_string(q));
        analysis["winners"][name] = winners_json(*this, q, SelectionScope::PerDataset);
        analysis["winners_per_generator"][name] = winners_json(*this, q, SelectionScope::PerDatasetGenerator);
        analysis["winner_matches"][name] = winner_matches(*this, q).text();
        const auto st = stability(ensembles, q, generator_names.size());
        nlohmann::json sj = nlohmann::json::object();
        for (std::size_t g = 0; g < generator_names.size(); ++g) sj[generator_names[g]] = optional_json(st[g]);
        analysis["stability"][name] = sj;
    }
    const auto columns = summary_columns(*this);
    for (std::size_t k = 0; k < 2; ++k) {
        const std::string name(to_string(k == 0 ? QualityMetric::Propensity : QualityMetric::Upca));
        if (!columns[k]) {
            analysis["avg_abs_diff"][name] = nullptr;
            continue;
        }
        nlohmann::json c = columns[k]->avg_abs_diff.to_json();
        c["overall"] = columns[k]->overall;
        c["overall_normalized"] = columns[k]->overall_normalized;
        c["n_datasets"] = columns[k]->n_datasets;
        analysis["avg_abs_diff"][name] = c;
    }
    nlohmann::json corr = nlohmann::json::array();
    for (const auto& e : quality_correlations(*this)) {
        corr.push_back({{"group", e.group}, {"quality", e.quality}, {"n", e.n}, {"r", optional_json(e.r)},
                        {"p_value", optional_json(e.p_value)}, {"note", e.note}});
    }
    analysis["correlations"] = corr;
    const auto gm = generator_matches(*this);
    nlohmann::json gmj = nlohmann::json::object();
    for (std::size_t g = 0; g < generator_names.size(); ++g) gmj[generator_names[g]] = gm[g].text();
    analysis["generator_matches"] = gmj;
    j["analysis"] = analysis;
    return j;
}

namespace {

void write_rows(const std::filesystem::path& path, const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_csv_records(out, rows);
}

}  // namespace

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / "report.json").string());
        out << report.to_json().dump(2) << "\n";
    }

    const auto columns = summary_columns(report);
    std::vector<std::vector<std::string>> t2 = {{"metric", "p", "u_pca"}};
    for (std::size_t k = 0; k < 6; ++k) {
        std::vector<std::string> row = {k < 4 ? kMetricNames[k] : (k == 4 ? "overall" : "overall_normalized")};
        for (const auto& c : columns) {
            if (!c) {
                row.emplace_back();
            } else if (k < 4) {
                row.push_back(format_double(c->avg_abs_diff.as_array()[k]));
            } else {
                row.push_back(format_double(k == 4 ? c->overall : c->overall_normalized));
            }
        }
        t2.push_back(std::move(row));
    }
    write_rows(dir / "t2_avg_abs_diff.csv", t2);

    std::vector<std::vector<std::string>> t34 = {{"group", "quality", "n", "r", "p_value", "note"}};
    for (const auto& e : quality_correlations(report)) {
        t34.push_back({e.group, e.quality, std::to_string(e.n), optional_text(e.r), optional_text(e.p_value), e.note});
    }
    write_rows(dir / "t3_t4_correlations.csv", t34);

    std::vector<std::vector<std::string>> t58 = {{"table", "group", "matches", "total", "fraction"}};
    for (QualityMetric q : {QualityMetric::Propensity, QualityMetric::Upca}) {
        const auto t = winner_matches(report, q);
        t58.push_back({"t5", std::string(to_string(q)), std::to_string(t.matches), std::to_string(t.total), t.text()});
    }
    const auto gm = generator_matches(report);
    for (std::size_t g = 0; g < gm.size(); ++g) {
        t58.push_back({"t8", report.generator_names[g], std::to_string(gm[g].matches), std::to_string(gm[g].total),
                       gm[g].text()});
    }
    write_rows(dir / "t5_t8_matches.csv", t58);

    const auto sp = stability(report.ensembles, QualityMetric::Propensity, report.generator_names.size());
    const auto su = stability(report.ensembles, QualityMetric::Upca, report.generator_names.size());
    std::vector<std::vector<std::string>> t6 = {{"generator", "stability_p", "stability_u_pca"}};
    for (std::size_t g = 0; g < report.generator_names.size(); ++g) {
        t6.push_back({report.generator_names[g], optional_text(sp[g]), optional_text(su[g])});
    }
    write_rows(dir / "t6_stability.csv", t6);

    std::vector<std::vector<std::string>> ci = {{"dataset", "generator", "split", "ci_width_p", "ci_width_u_pca"}};
    std::vector<std::vector<std::string>> ens = {{"dataset", "generator", "split", "ok", "hellinger", "pcd",
                                                  "log_cluster", "propensity", "u_pca"}};
    for (const auto& name : report.classifier_names) ens[0].push_back("pa_" + name);
    for (const auto& name : report.classifier_names) ens[0].push_back("ra_" + name);
    ens[0].push_back("ara");
    ens[0].push_back("error");
    for (const auto& r : report.ensembles) {
        const std::string& dname = report.datasets[r.dataset].name;
        const std::string& gname = report.generator_names[r.generator];
        std::vector<std::string> row = {dname, gname, std::to_string(r.split), r.ok ? "true" : "false"};
        if (r.ok) {
            ci.push_back({dname, gname, std::to_string(r.split), optional_text(r.ci_width_p), optional_text(r.ci_width_upca)});
            for (double v : r.metrics.as_array()) row.push_back(format_double(v));
            row.push_back(optional_text(r.u_pca));
            for (double v : r.accuracy) row.push_back(format_double(v));
            for (double v : r.relative_accuracy) row.push_back(format_double(v));
            row.push_back(format_double(r.ara));
            row.emplace_back();
        } else {
            row.resize(ens[0].size() - 1);
            row.push_back(r.error);
        }
        ens.push_back(std::move(row));
    }
    write_rows(dir / "ci_widths.csv", ci);
    write_rows(dir / "ensembles.csv", ens);
}

std::vector<ImputeCompareRow> impute_compare(const Table& t, std::size_t repeats, double fraction, std::uint64_t seed,
                                             const MetricConfig& metrics, const ImputeOptions& options) {
    std::vector<ImputeCompareRow> rows;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        const Table masked = mask_cells(t, fraction, derive_seed(seed, {seed_tag::mask, rep}));
        const Table synth = gen_sequential_cart(masked, masked.n_rows(), derive_seed(seed, {seed_tag::generate, rep}));
        for (ImputerKind kind : {ImputerKind::Substitution, ImputerKind::Regression, ImputerKind::Cart}) {
            const auto k = static_cast<std::uint64_t>(kind);
            const Table real_imp = impute(kind, masked, derive_seed(seed, {seed_tag::impute_real, rep, k}), options).table;
            const Table synth_imp = impute(kind, synth, derive_seed(seed, {seed_tag::impute_synth, rep, k}), options).table;
            ImputeCompareRow row;
            row.method = kind;
            row.repeat = rep;
            row.out_of_range_real = count_out_of_range(masked, real_imp);
            row.out_of_range_synth = count_out_of_range(masked, synth_imp);
            row.hellinger = hellinger_overall(real_imp, synth_imp, metrics.hellinger_bins);
            FitConfig model = metrics.propensity_model;
            model.seed = derive_seed(seed, {seed_tag::propensity, rep, k});
            row.propensity = propensity(real_imp, synth_imp, model);
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace synthval
