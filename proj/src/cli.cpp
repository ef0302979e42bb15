#include "synthval/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthval/config.hpp"
#include "synthval/csv.hpp"
#include "synthval/error.hpp"
#include "synthval/generators.hpp"
#include "synthval/imputation.hpp"
#include "synthval/metrics.hpp"
#include "synthval/pipeline.hpp"
#include "synthval/rng.hpp"
#include "synthval/upca.hpp"

namespace synthval {

namespace {

using nlohmann::json;

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
    if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
    if (dynamic_cast<const DegenerateError*>(&e)) return "DegenerateError";
    if (dynamic_cast<const UnsupportedError*>(&e)) return "UnsupportedError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    if (dynamic_cast<const json::exception*>(&e)) return "ParseError";
    return "InternalError";
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// CSV outputs carry their resolved settings in a sidecar next to them.
void write_sidecar(const std::filesystem::path& csv, const json& config) {
    write_json(std::filesystem::path(csv.string() + ".config.json"), config);
}

std::optional<Manifest> manifest_from(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return Manifest::load(path);
}

MetricVector metric_vector_from(const json& j) {
    return MetricVector::from_json(j.contains("metrics") ? j.at("metrics") : j);
}

struct Options {
    std::string method;
    std::string manifest;
    std::string input;
    std::string input2;
    std::string output;
    std::string config;
    std::string model;
    std::string imputer = "cart";
    std::uint64_t seed = 0;
    std::size_t n_rows = 0;
    std::size_t repeats = 20;
    double fraction = 0.1;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed_override;
};

KeyValueConfig read_overrides(const std::string& path) {
    return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

int run_impute(const Options& o, std::ostream& out) {
    const ImputerKind kind = imputer_kind_from_string(o.method);
    const Table t = load_csv(o.input, manifest_from(o.manifest));
    const ImputeResult r = impute(kind, t, o.seed);
    write_csv(std::filesystem::path(o.output), r.table);
    write_sidecar(o.output, {{"command", "impute"}, {"method", std::string(to_string(kind))}, {"seed", o.seed},
                             {"input", o.input}, {"manifest", o.manifest}, {"warnings", r.warnings}});
    for (const auto& w : r.warnings) out << "warning: " << w << "\n";
    return 0;
}

int run_impute_compare(const Options& o) {
    const Table t = load_csv(o.input, manifest_from(o.manifest));
    const KeyValueConfig kv = read_overrides(o.config);
    const MetricConfig mc = metric_config_from(kv);
    const auto rows = impute_compare(t, o.repeats, o.fraction, o.seed, mc);
    std::vector<std::vector<std::string>> records = {
        {"method", "repeat", "out_of_range_real", "out_of_range_synth", "hellinger", "propensity"}};
    for (const auto& r : rows) {
        records.push_back({std::string(to_string(r.method)), std::to_string(r.repeat), std::to_string(r.out_of_range_real),
                           std::to_string(r.out_of_range_synth), format_double(r.hellinger), format_double(r.propensity)});
    }
    std::ofstream file(o.output, std::ios::binary);
    if (!file) throw Error("cannot write " + o.output);
    write_csv_records(file, records);
    KeyValueConfig resolved;
    put_metric_config(resolved, mc);
    write_sidecar(o.output, {{"command", "impute-compare"}, {"seed", o.seed}, {"repeats", o.repeats},
                             {"fraction", o.fraction}, {"input", o.input}, {"manifest", o.manifest},
                             {"settings", resolved.to_json()}});
    return 0;
}

int run_generate(const Options& o) {
    const GeneratorKind kind = generator_kind_from_string(o.method);
    const Table train = load_csv(o.input, manifest_from(o.manifest));
    const std::size_t n = o.n_rows > 0 ? o.n_rows : train.n_rows();
    const Table synth = generate(kind, train, n, o.seed);
    write_csv(std::filesystem::path(o.output), synth);
    write_sidecar(o.output, {{"command", "generate"}, {"method", std::string(to_string(kind))}, {"n", n},
                             {"seed", o.seed}, {"input", o.input}, {"manifest", o.manifest}});
    return 0;
}

int run_evaluate(const Options& o) {
    const auto manifest = manifest_from(o.manifest);
    const Table real = load_csv(o.input, manifest);
    const Table synth = load_csv(o.input2, manifest);
    const KeyValueConfig kv = read_overrides(o.config);
    MetricConfig mc = metric_config_from(kv);
    mc.seed = o.seed;
    const ImputerKind imputer = imputer_kind_from_string(o.imputer);
    // Both inputs share one imputation seed so that identical files stay identical.
    const std::uint64_t impute_seed = derive_seed(o.seed, {seed_tag::impute_real});
    const Table real_imp = impute(imputer, real, impute_seed).table;
    const Table synth_imp = impute(imputer, synth, impute_seed).table;
    const MetricResult r = metric_vector(real_imp, synth_imp, mc);
    KeyValueConfig resolved;
    put_metric_config(resolved, mc);
    resolved.set("", "seed", std::to_string(o.seed));
    resolved.set("", "imputer", std::string(to_string(imputer)));
    write_json(o.output, {{"metrics", r.metrics.to_json()},
                          {"config", resolved.to_json()},
                          {"inputs", {{"real", o.input}, {"synthetic", o.input2}, {"manifest", o.manifest}}},
                          {"provenance", r.provenance}});
    return 0;
}

int run_fit_upca(const Options& o) {
    std::ifstream in(o.input);
    if (!in) throw Error("cannot open " + o.input);
    std::vector<MetricVector> corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            corpus.push_back(metric_vector_from(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(o.input + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    const UpcaModel model = fit_upca(corpus);
    json j = model.to_json();
    j["config"] = {{"command", "fit-upca"}, {"corpus", o.input}};
    write_json(o.output, j);
    return 0;
}

int run_score(const Options& o, std::ostream& out) {
    const UpcaModel model = UpcaModel::from_json(read_json(o.model));
    MetricVector v;
    try {
        v = metric_vector_from(read_json(o.input));
    } catch (const json::exception& e) {
        throw ParseError(o.input + ": " + e.what());
    }
    out << format_double(model.project(v)) << "\n";
    return 0;
}

int run_experiment_cmd(const Options& o, std::ostream& out) {
    ExperimentConfig cfg = ExperimentConfig::load(o.config);
    if (o.seed_override) cfg.seed = *o.seed_override;
    cfg.jobs = o.jobs;
    const ExperimentReport report = run_experiment(cfg);
    write_report(report, o.output);
    out << "ensembles: " << report.ensembles.size() << ", failed: " << report.failed_cells() << "\n";
    return report.failed_cells() > 0 ? 1 : 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Utility scoring of synthetic tabular data", "synthval"};
    app.require_subcommand(1);
    Options o;

    auto* imp = app.add_subcommand("impute", "Fill missing cells of a CSV table");
    imp->add_option("--method", o.method, "si, ri or cart")->required();
    imp->add_option("--seed", o.seed, "Random seed");
    imp->add_option("--manifest", o.manifest, "Schema manifest");
    imp->add_option("input", o.input)->required();
    imp->add_option("output", o.output)->required();

    auto* cmp = app.add_subcommand("impute-compare", "Compare the imputers on masked copies of a table");
    cmp->add_option("--seed", o.seed, "Random seed");
    cmp->add_option("--repeats", o.repeats, "Masking repeats");
    cmp->add_option("--fraction", o.fraction, "Share of cells masked per repeat");
    cmp->add_option("--manifest", o.manifest, "Schema manifest");
    cmp->add_option("--config", o.config, "Metric settings ([metrics], [propensity])");
    cmp->add_option("input", o.input)->required();
    cmp->add_option("output", o.output)->required();

    auto* gen = app.add_subcommand("generate", "Draw a synthetic table from a training table");
    gen->add_option("--method", o.method, "bootstrap, independent or seqcart")->required();
    gen->add_option("--n", o.n_rows, "Rows to generate (default: training rows)");
    gen->add_option("--seed", o.seed, "Random seed");
    gen->add_option("--manifest", o.manifest, "Schema manifest");
    gen->add_option("input", o.input)->required();
    gen->add_option("output", o.output)->required();

    auto* ev = app.add_subcommand("evaluate", "Compute the four utility metrics of a synthetic table");
    ev->add_option("--seed", o.seed, "Random seed");
    ev->add_option("--manifest", o.manifest, "Schema manifest shared by both tables");
    ev->add_option("--config", o.config, "Metric settings ([metrics], [propensity])");
    ev->add_option("--impute", o.imputer, "Imputer for incomplete inputs: si, ri or cart");
    ev->add_option("--out", o.output, "Output JSON")->default_val("metrics.json");
    ev->add_option("real", o.input)->required();
    ev->add_option("synthetic", o.input2)->required();

    auto* fit = app.add_subcommand("fit-upca", "Fit the principal-component aggregator on a metric corpus");
    fit->add_option("--out", o.output, "Model JSON")->default_val("model.json");
    fit->add_option("corpus", o.input, "JSON lines of metric vectors")->required();

    auto* sc = app.add_subcommand("score", "Project a metric vector with a fitted model");
    sc->add_option("--model", o.model, "Model JSON")->required();
    sc->add_option("metrics", o.input, "Metric vector JSON")->required();

    auto* ex = app.add_subcommand("experiment", "Run the full evaluation protocol");
    ex->add_option("--config", o.config, "Experiment config (key-value text or JSON)")->required();
    ex->add_option("--out", o.output, "Output directory")->required();
    ex->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    ex->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed_override = s; },
                                           "Override the master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (imp->parsed()) return run_impute(o, out);
        if (cmp->parsed()) return run_impute_compare(o);
        if (gen->parsed()) return run_generate(o);
        if (ev->parsed()) return run_evaluate(o);
        if (fit->parsed()) return run_fit_upca(o);
        if (sc->parsed()) return run_score(o, out);
        if (ex->parsed()) return run_experiment_cmd(o, out);
    } catch (const std::exception& e) {
        err << json{{"error", {{"type", error_type(e)}, {"message", e.what()}}}}.dump() << "\n";
        return 1;
    }
    return 2;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("synthval");
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace synthval
