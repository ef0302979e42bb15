#include "synthval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <thread>

#include "synthval/error.hpp"
#include "synthval/rng.hpp"
#include "synthval/stats.hpp"

namespace synthval {

std::string_view to_string(DatasetRole role) {
    switch (role) {
    case DatasetRole::Both: return "both";
    case DatasetRole::PcaTraining: return "pca_training";
    case DatasetRole::PcaTesting: return "pca_testing";
    }
    return "?";
}

DatasetRole dataset_role_from_string(std::string_view text) {
    if (text == "both") return DatasetRole::Both;
    if (text == "pca_training" || text == "training") return DatasetRole::PcaTraining;
    if (text == "pca_testing" || text == "testing") return DatasetRole::PcaTesting;
    throw ParseError("unknown dataset role '" + std::string(text) + "'");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::uint64_t parse_seed(const std::string& text) {
    std::uint64_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError("seed must be a non-negative integer, got '" + text + "'");
    }
    return value;
}

namespace {

double to_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double d = std::stod(text, &used);
        if (used == text.size()) return d;
    } catch (const std::exception&) {
    }
    throw ParseError(key + ": expected a number, got '" + text + "'");
}

std::size_t to_count(const std::string& key, const std::string& text) {
    std::size_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ParseError(key + ": expected a boolean, got '" + text + "'");
}

const std::map<std::string, std::string>& section_or_empty(const KeyValueConfig& kv, const std::string& name) {
    static const std::map<std::string, std::string> empty;
    return kv.has_section(name) ? kv.section(name) : empty;
}

}  // namespace

void apply_fit_overrides(FitConfig& cfg, const std::map<std::string, std::string>& section) {
    for (const auto& [key, value] : section) {
        if (key == "kind") continue;
        if (key == "max_depth") cfg.max_depth = static_cast<int>(to_count(key, value));
        else if (key == "min_leaf") cfg.min_leaf = to_count(key, value);
        else if (key == "n_trees") cfg.n_trees = to_count(key, value);
        else if (key == "learning_rate") cfg.learning_rate = to_double(key, value);
        else if (key == "l2_penalty") cfg.l2_penalty = to_double(key, value);
        else if (key == "n_epochs") cfg.n_epochs = to_count(key, value);
        else if (key == "feature_fraction") cfg.feature_fraction = to_double(key, value);
        else if (key == "bootstrap") cfg.bootstrap = to_bool(key, value);
        else if (key == "seed") cfg.seed = parse_seed(value);
        else throw ParseError("unknown classifier setting '" + key + "'");
    }
}

void put_fit_config(KeyValueConfig& kv, const std::string& section, const FitConfig& cfg) {
    kv.set(section, "kind", std::string(to_string(cfg.kind)));
    kv.set(section, "max_depth", std::to_string(cfg.max_depth));
    kv.set(section, "min_leaf", std::to_string(cfg.min_leaf));
    kv.set(section, "n_trees", std::to_string(cfg.n_trees));
    kv.set(section, "learning_rate", format_double(cfg.learning_rate));
    kv.set(section, "l2_penalty", format_double(cfg.l2_penalty));
    kv.set(section, "n_epochs", std::to_string(cfg.n_epochs));
    kv.set(section, "feature_fraction", format_double(cfg.feature_fraction));
    kv.set(section, "bootstrap", cfg.bootstrap ? "true" : "false");
}

MetricConfig metric_config_from(const KeyValueConfig& kv, const std::string& section, const std::string& propensity) {
    MetricConfig cfg;
    for (const auto& [key, value] : section_or_empty(kv, section)) {
        if (key == "hellinger_bins") cfg.hellinger_bins = to_count(key, value);
        else if (key == "correlation_encoding") cfg.correlation_encoding = categorical_encoding_from_string(value);
        else if (key == "cluster_divisor") cfg.cluster_divisor = to_count(key, value);
        else if (key == "lc_floor") cfg.lc_floor = to_double(key, value);
        else if (key == "cluster_gamma") {
            if (value == "auto") cfg.cluster.gamma.reset();
            else cfg.cluster.gamma = to_double(key, value);
        } else if (key == "cluster_max_iterations") cfg.cluster.max_iterations = to_count(key, value);
        else throw ParseError("unknown metric setting '" + key + "'");
    }
    const auto& model = section_or_empty(kv, propensity);
    if (auto kind = model.find("kind"); kind != model.end()) {
        cfg.propensity_model = FitConfig::defaults(classifier_kind_from_string(kind->second));
    }
    apply_fit_overrides(cfg.propensity_model, model);
    if (cfg.hellinger_bins == 0) throw PreconditionError("hellinger_bins must be positive");
    if (cfg.cluster_divisor == 0) throw PreconditionError("cluster_divisor must be positive");
    return cfg;
}

void put_metric_config(KeyValueConfig& kv, const MetricConfig& cfg, const std::string& section,
                       const std::string& propensity) {
    kv.set(section, "hellinger_bins", std::to_string(cfg.hellinger_bins));
    kv.set(section, "correlation_encoding", std::string(to_string(cfg.correlation_encoding)));
    kv.set(section, "cluster_divisor", std::to_string(cfg.cluster_divisor));
    kv.set(section, "lc_floor", format_double(cfg.lc_floor));
    kv.set(section, "cluster_gamma", cfg.cluster.gamma ? format_double(*cfg.cluster.gamma) : "auto");
    kv.set(section, "cluster_max_iterations", std::to_string(cfg.cluster.max_iterations));
    put_fit_config(kv, propensity, cfg.propensity_model);
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw PreconditionError("experiment needs at least one dataset");
    if (generators.empty()) throw PreconditionError("experiment needs at least one generator");
    if (classifiers.empty()) throw PreconditionError("experiment needs at least one classifier");
    if (n_splits < 1) throw PreconditionError("n_splits must be at least 1");
    if (ensemble_size < 1) throw PreconditionError("ensemble_size must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw PreconditionError("train_fraction must lie in (0, 1)");
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        if (datasets[i].label.empty()) throw PreconditionError("dataset '" + datasets[i].name + "' names no label column");
        for (std::size_t j = 0; j < i; ++j) {
            if (datasets[i].name == datasets[j].name) throw PreconditionError("duplicate dataset '" + datasets[i].name + "'");
        }
    }
}

KeyValueConfig ExperimentConfig::to_key_values() const {
    KeyValueConfig kv;
    kv.set("", "seed", std::to_string(seed));
    kv.set("", "n_splits", std::to_string(n_splits));
    kv.set("", "ensemble_size", std::to_string(ensemble_size));
    kv.set("", "train_fraction", format_double(train_fraction));
    kv.set("", "imputer", std::string(to_string(imputer)));
    std::string names;
    for (std::size_t g = 0; g < generators.size(); ++g) names += (g ? ", " : "") + std::string(to_string(generators[g]));
    kv.set("", "generators", names);
    names.clear();
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
        names += (c ? ", " : "") + std::string(to_string(classifiers[c].kind));
        put_fit_config(kv, "classifier." + std::string(to_string(classifiers[c].kind)), classifiers[c]);
    }
    kv.set("", "classifiers", names);
    names.clear();
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        const auto& ds = datasets[d];
        names += (d ? ", " : "") + ds.name;
        const std::string sec = "dataset." + ds.name;
        kv.set(sec, "path", ds.path.string());
        kv.set(sec, "label", ds.label);
        kv.set(sec, "role", std::string(to_string(ds.role)));
        if (ds.manifest) kv.set(sec, "manifest", ds.manifest->string());
    }
    kv.set("", "datasets", names);
    put_metric_config(kv, metrics);
    kv.set("generator", "max_depth", std::to_string(generator.cart.max_depth));
    kv.set("generator", "min_leaf", std::to_string(generator.cart.min_leaf));
    kv.set("generator", "min_split", std::to_string(generator.cart.min_split));
    kv.set("impute", "max_depth", std::to_string(impute.cart.max_depth));
    kv.set("impute", "min_leaf", std::to_string(impute.cart.min_leaf));
    kv.set("impute", "min_split", std::to_string(impute.cart.min_split));
    return kv;
}

namespace {

TreeParams tree_params_from(const KeyValueConfig& kv, const std::string& section, TreeParams p) {
    for (const auto& [key, value] : section_or_empty(kv, section)) {
        if (key == "max_depth") p.max_depth = static_cast<int>(to_count(key, value));
        else if (key == "min_leaf") p.min_leaf = to_count(key, value);
        else if (key == "min_split") p.min_split = to_count(key, value);
        else throw ParseError("unknown tree setting [" + section + "] " + key);
    }
    return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    static const std::vector<std::string> top_keys = {"seed",       "n_splits",    "ensemble_size", "train_fraction",
                                                      "imputer",    "generators",  "classifiers",   "datasets",
                                                      "jobs"};
    for (const auto& [key, value] : section_or_empty(kv, "")) {
        if (std::find(top_keys.begin(), top_keys.end(), key) == top_keys.end()) {
            throw ParseError("unknown experiment setting '" + key + "'");
        }
    }
    if (auto v = kv.get("", "seed")) cfg.seed = parse_seed(*v);
    if (auto v = kv.get("", "n_splits")) cfg.n_splits = to_count("n_splits", *v);
    if (auto v = kv.get("", "ensemble_size")) cfg.ensemble_size = to_count("ensemble_size", *v);
    if (auto v = kv.get("", "train_fraction")) cfg.train_fraction = to_double("train_fraction", *v);
    if (auto v = kv.get("", "imputer")) cfg.imputer = imputer_kind_from_string(*v);
    if (auto v = kv.get("", "jobs")) cfg.jobs = std::max<std::size_t>(1, to_count("jobs", *v));
    if (auto v = kv.get("", "generators")) {
        cfg.generators.clear();
        for (const auto& name : split_list(*v)) cfg.generators.push_back(generator_kind_from_string(name));
    }
    if (auto v = kv.get("", "classifiers")) {
        cfg.classifiers.clear();
        for (const auto& name : split_list(*v)) cfg.classifiers.push_back(FitConfig::defaults(classifier_kind_from_string(name)));
    }
    for (auto& fit : cfg.classifiers) {
        const auto& sec = section_or_empty(kv, "classifier." + std::string(to_string(fit.kind)));
        apply_fit_overrides(fit, sec);
    }
    cfg.metrics = metric_config_from(kv);
    cfg.generator.cart = tree_params_from(kv, "generator", cfg.generator.cart);
    cfg.impute.cart = tree_params_from(kv, "impute", cfg.impute.cart);

    std::vector<std::string> names;
    if (auto v = kv.get("", "datasets")) {
        names = split_list(*v);
    } else {
        for (const auto& sec : kv.sections()) {
            if (sec.rfind("dataset.", 0) == 0) names.push_back(sec.substr(8));
        }
    }
    for (const auto& name : names) {
        const std::string sec = "dataset." + name;
        if (!kv.has_section(sec)) throw ParseError("dataset '" + name + "' has no [" + sec + "] section");
        DatasetSpec ds;
        ds.name = name;
        const auto path = kv.get(sec, "path");
        if (!path) throw ParseError("[" + sec + "] needs a path");
        ds.path = std::filesystem::path(*path).is_absolute() ? std::filesystem::path(*path) : base_dir / *path;
        ds.path = ds.path.lexically_normal();
        ds.label = kv.get_or(sec, "label", "");
        ds.role = dataset_role_from_string(kv.get_or(sec, "role", "both"));
        if (auto m = kv.get(sec, "manifest")) {
            std::filesystem::path mp(*m);
            ds.manifest = (mp.is_absolute() ? mp : base_dir / mp).lexically_normal();
        }
        cfg.datasets.push_back(std::move(ds));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    const auto kv = KeyValueConfig::load(path);
    return from_key_values(kv, path.parent_path());
}

namespace {

// Frequency encoding and standardization learned from a training table and
// applied unchanged to any table with the same schema.
class FeatureEncoder {
public:
    FeatureEncoder(const Table& train, std::size_t label) {
        for (std::size_t c = 0; c < train.n_cols(); ++c) {
            if (c == label) continue;
            columns_.push_back(c);
            std::map<std::string, double> freq;
            const Column& col = train.column(c);
            if (col.is_categorical()) {
                for (std::size_t r = 0; r < col.size(); ++r) freq[col.label(r)] += 1.0;
                for (auto& [level, f] : freq) f /= static_cast<double>(col.size());
            }
            frequencies_.push_back(std::move(freq));
        }
        const Matrix raw = encode_raw(train);
        const Standardized z = standardize_columns(raw);
        means_ = z.means;
        stddevs_ = z.stddevs;
        constant_ = z.constant;
    }

    Matrix transform(const Table& t) const {
        Matrix m = encode_raw(t);
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t k = 0; k < m.cols(); ++k) {
                m(r, k) = constant_[k] ? 0.0 : (m(r, k) - means_[k]) / stddevs_[k];
            }
        }
        return m;
    }

private:
    Matrix encode_raw(const Table& t) const {
        Matrix m(t.n_rows(), columns_.size());
        for (std::size_t k = 0; k < columns_.size(); ++k) {
            const Column& col = t.column(columns_[k]);
            for (std::size_t r = 0; r < t.n_rows(); ++r) {
                if (col.is_numeric()) {
                    m(r, k) = col.number(r);
                } else {
                    const auto it = frequencies_[k].find(col.label(r));
                    m(r, k) = it == frequencies_[k].end() ? 0.0 : it->second;
                }
            }
        }
        return m;
    }

    std::vector<std::size_t> columns_;
    std::vector<std::map<std::string, double>> frequencies_;
    std::vector<double> means_;
    std::vector<double> stddevs_;
    std::vector<bool> constant_;
};

std::vector<int> label_indices(const Column& col, const std::vector<std::string>& levels) {
    std::vector<int> y(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) {
        if (col.is_missing(r)) throw PreconditionError("label column '" + col.name() + "' has a missing cell");
        const auto it = std::lower_bound(levels.begin(), levels.end(), col.label(r));
        if (it == levels.end() || *it != col.label(r)) throw SchemaError("label '" + col.label(r) + "' not in the dataset");
        y[r] = static_cast<int>(it - levels.begin());
    }
    return y;
}

// Accuracy on the test table of each classifier trained on the train table.
std::vector<double> evaluate_classifiers(const Table& train, const Table& test, std::size_t label,
                                         const std::vector<std::string>& levels, const std::vector<FitConfig>& models,
                                         const std::function<std::uint64_t(std::size_t)>& seed_of) {
    const FeatureEncoder encoder(train, label);
    const Matrix x_train = encoder.transform(train);
    const Matrix x_test = encoder.transform(test);
    const auto y_train = label_indices(train.column(label), levels);
    const auto y_test = label_indices(test.column(label), levels);
    std::vector<double> acc;
    for (std::size_t c = 0; c < models.size(); ++c) {
        FitConfig fit = models[c];
        fit.seed = seed_of(c);
        const auto model = train_classifier(x_train, y_train, fit, static_cast<int>(levels.size()));
        acc.push_back(accuracy(model, x_test, y_test));
    }
    return acc;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
    for (auto& w : workers) w.join();
}

struct SplitData {
    bool ok = false;
    std::string error;
    Table train_raw;
    Table train;  // imputed
    Table test;   // imputed
    std::vector<double> baseline;
    std::vector<std::string> warnings;
};

struct DatapointOutcome {
    bool ok = false;
    std::string error;
    DatapointResult result;
};

struct LoadedDataset {
    Table table;
    std::size_t label = 0;
    std::vector<std::string> levels;
};

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.config = cfg.to_key_values().to_json();
    for (auto g : cfg.generators) report.generator_names.emplace_back(to_string(g));
    for (const auto& c : cfg.classifiers) report.classifier_names.emplace_back(to_string(c.kind));

    const std::size_t n_data = cfg.datasets.size();
    const std::size_t n_gen = cfg.generators.size();
    const std::size_t n_split = cfg.n_splits;
    const std::size_t n_dp = cfg.ensemble_size;
    const std::size_t n_clf = cfg.classifiers.size();

    std::vector<LoadedDataset> data;
    for (const auto& spec : cfg.datasets) {
        std::optional<Manifest> manifest;
        if (spec.manifest) manifest = Manifest::load(*spec.manifest);
        LoadedDataset ds;
        ds.table = load_csv(spec.path, manifest);
        const auto label = ds.table.index_of(spec.label);
        if (!label) throw SchemaError("dataset '" + spec.name + "' has no column '" + spec.label + "'");
        if (!ds.table.column(*label).is_categorical()) {
            throw SchemaError("label column '" + spec.label + "' of '" + spec.name + "' must be categorical");
        }
        ds.label = *label;
        ds.levels = ds.table.column(*label).levels();
        if (ds.levels.size() < 2) throw DegenerateError("label column of '" + spec.name + "' has a single class");
        DatasetSummary summary;
        summary.name = spec.name;
        summary.role = spec.role;
        summary.n_rows = ds.table.n_rows();
        summary.n_cols = ds.table.n_cols();
        report.datasets.push_back(std::move(summary));
        data.push_back(std::move(ds));
    }

    // Splits, independent imputation of both halves and the real baselines.
    std::vector<SplitData> splits(n_data * n_split);
    parallel_for(splits.size(), cfg.jobs, [&](std::size_t job) {
        const std::size_t d = job / n_split;
        const std::size_t s = job % n_split;
        SplitData& out = splits[job];
        try {
            SplitSpec spec{cfg.train_fraction, derive_seed(cfg.seed, {seed_tag::split, d}), static_cast<int>(s)};
            auto [train, test] = split_train_test(data[d].table, spec);
            auto train_imp = impute(cfg.imputer, train, derive_seed(cfg.seed, {seed_tag::impute_real, d, s, 0}), cfg.impute);
            auto test_imp = impute(cfg.imputer, test, derive_seed(cfg.seed, {seed_tag::impute_real, d, s, 1}), cfg.impute);
            out.warnings = train_imp.warnings;
            out.warnings.insert(out.warnings.end(), test_imp.warnings.begin(), test_imp.warnings.end());
            out.train_raw = std::move(train);
            out.train = std::move(train_imp.table);
            out.test = std::move(test_imp.table);
            out.baseline = evaluate_classifiers(out.train, out.test, data[d].label, data[d].levels, cfg.classifiers,
                                                [&](std::size_t c) { return derive_seed(cfg.seed, {seed_tag::classifier, d, s, c}); });
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    for (std::size_t d = 0; d < n_data; ++d) {
        auto& summary = report.datasets[d];
        summary.baseline.assign(n_clf, 0.0);
        summary.baseline_ok = true;
        for (std::size_t s = 0; s < n_split; ++s) {
            const auto& sp = splits[d * n_split + s];
            for (const auto& w : sp.warnings) summary.impute_warnings.push_back("split " + std::to_string(s) + ": " + w);
            if (!sp.ok) {
                if (summary.baseline_ok) summary.baseline_error = "split " + std::to_string(s) + ": " + sp.error;
                summary.baseline_ok = false;
                continue;
            }
            summary.baseline_per_split.push_back(sp.baseline);
            for (std::size_t c = 0; c < n_clf; ++c) summary.baseline[c] += sp.baseline[c];
        }
        if (summary.baseline_ok) {
            for (auto& v : summary.baseline) v /= static_cast<double>(n_split);
        } else {
            summary.baseline.clear();
        }
    }

    // Datapoints: generate, impute, score, train on synthetic, test on real.
    std::vector<DatapointOutcome> points(n_data * n_gen * n_split * n_dp);
    parallel_for(points.size(), cfg.jobs, [&](std::size_t job) {
        const std::size_t i = job % n_dp;
        const std::size_t s = (job / n_dp) % n_split;
        const std::size_t g = (job / (n_dp * n_split)) % n_gen;
        const std::size_t d = job / (n_dp * n_split * n_gen);
        const SplitData& sp = splits[d * n_split + s];
        DatapointOutcome& out = points[job];
        if (!sp.ok) {
            out.error = "split unavailable: " + sp.error;
            return;
        }
        try {
            const Table synth = generate(cfg.generators[g], sp.train_raw, sp.train_raw.n_rows(),
                                         derive_seed(cfg.seed, {seed_tag::generate, d, g, s, i}), cfg.generator);
            const Table synth_imp =
                impute(cfg.imputer, synth, derive_seed(cfg.seed, {seed_tag::impute_synth, d, g, s, i}), cfg.impute).table;
            MetricConfig mc = cfg.metrics;
            mc.seed = derive_seed(cfg.seed, {seed_tag::datapoint, d, g, s, i});
            out.result.metrics = metric_vector(sp.train, synth_imp, mc).metrics;
            out.result.accuracy = evaluate_classifiers(
                synth_imp, sp.test, data[d].label, data[d].levels, cfg.classifiers,
                [&](std::size_t c) { return derive_seed(cfg.seed, {seed_tag::classifier, d, g, s, i, c}); });
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    for (std::size_t d = 0; d < n_data; ++d) {
        for (std::size_t g = 0; g < n_gen; ++g) {
            for (std::size_t s = 0; s < n_split; ++s) {
                EnsembleReport rep;
                rep.dataset = d;
                rep.generator = g;
                rep.split = s;
                const std::size_t base = ((d * n_gen + g) * n_split + s) * n_dp;
                rep.ok = true;
                for (std::size_t i = 0; i < n_dp; ++i) {
                    const auto& p = points[base + i];
                    if (!p.ok) {
                        rep.ok = false;
                        rep.error = "datapoint " + std::to_string(i) + ": " + p.error;
                        break;
                    }
                    rep.datapoints.push_back(p.result);
                }
                if (rep.ok && !report.datasets[d].baseline_ok) {
                    rep.ok = false;
                    rep.error = "real baseline unavailable: " + report.datasets[d].baseline_error;
                }
                if (!rep.ok) {
                    rep.datapoints.clear();
                    report.ensembles.push_back(std::move(rep));
                    continue;
                }
                std::vector<MetricVector> mv;
                for (const auto& p : rep.datapoints) mv.push_back(p.metrics);
                rep.metrics = mean_of(mv);
                rep.accuracy.assign(n_clf, 0.0);
                for (const auto& p : rep.datapoints) {
                    for (std::size_t c = 0; c < n_clf; ++c) rep.accuracy[c] += p.accuracy[c];
                }
                for (auto& a : rep.accuracy) a /= static_cast<double>(n_dp);
                for (std::size_t c = 0; c < n_clf; ++c) {
                    rep.relative_accuracy.push_back(relative_accuracy(rep.accuracy[c], report.datasets[d].baseline[c]));
                }
                rep.ara = std::accumulate(rep.relative_accuracy.begin(), rep.relative_accuracy.end(), 0.0) /
                          static_cast<double>(n_clf);
                if (n_dp >= 2) {
                    std::vector<double> p;
                    for (const auto& dp : rep.datapoints) p.push_back(dp.metrics.propensity);
                    rep.ci_width_p = ci_width(p);
                }
                report.ensembles.push_back(std::move(rep));
            }
        }
    }

    // Corpus roles, with every dataset standing in for an empty role.
    for (std::size_t d = 0; d < n_data; ++d) {
        const auto role = cfg.datasets[d].role;
        if (role != DatasetRole::PcaTesting) report.pca_training.push_back(d);
        if (role != DatasetRole::PcaTraining) report.pca_testing.push_back(d);
    }
    if (report.pca_training.empty()) {
        report.pca_training.resize(n_data);
        std::iota(report.pca_training.begin(), report.pca_training.end(), 0);
    }
    if (report.pca_testing.empty()) {
        report.pca_testing.resize(n_data);
        std::iota(report.pca_testing.begin(), report.pca_testing.end(), 0);
    }

    std::vector<MetricVector> corpus;
    for (const auto& rep : report.ensembles) {
        const bool training =
            std::find(report.pca_training.begin(), report.pca_training.end(), rep.dataset) != report.pca_training.end();
        if (rep.ok && training) corpus.push_back(rep.metrics);
    }
    try {
        report.upca = fit_upca(corpus);
    } catch (const std::exception& e) {
        report.upca_error = e.what();
    }
    if (report.upca) {
        for (auto& rep : report.ensembles) {
            if (!rep.ok) continue;
            rep.u_pca = report.upca->project(rep.metrics);
            std::vector<double> u;
            for (auto& dp : rep.datapoints) {
                dp.u_pca = report.upca->project(dp.metrics);
                u.push_back(*dp.u_pca);
            }
            if (u.size() >= 2) rep.ci_width_upca = ci_width(u);
        }
    }
    return report;
}

std::size_t ExperimentReport::failed_cells() const {
    return static_cast<std::size_t>(std::count_if(ensembles.begin(), ensembles.end(), [](const auto& r) { return !r.ok; }));
}

}  // namespace synthval
