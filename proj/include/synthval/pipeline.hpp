#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthval/config.hpp"
#include "synthval/csv.hpp"
#include "synthval/generators.hpp"
#include "synthval/imputation.hpp"
#include "synthval/metrics.hpp"
#include "synthval/models.hpp"
#include "synthval/upca.hpp"

namespace synthval {

// Which part of the corpus a dataset belongs to. PCA is fitted on the
// training datasets and the analyses are run on the testing datasets; a
// dataset marked Both is used for each. When no dataset is marked for
// training (or testing) every dataset is used for it.
enum class DatasetRole { Both, PcaTraining, PcaTesting };

std::string_view to_string(DatasetRole role);
DatasetRole dataset_role_from_string(std::string_view text);

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    std::optional<std::filesystem::path> manifest;
    std::string label;
    DatasetRole role = DatasetRole::Both;
};

// Applies the FitConfig fields present in a config section
// (max_depth, min_leaf, n_trees, learning_rate, l2_penalty, n_epochs,
// feature_fraction, bootstrap).
void apply_fit_overrides(FitConfig& cfg, const std::map<std::string, std::string>& section);
// Reads hellinger_bins, correlation_encoding, cluster_divisor, lc_floor,
// cluster_gamma, cluster_max_iterations from `section` and the propensity
// model from `propensity` (key "kind" plus FitConfig fields).
MetricConfig metric_config_from(const KeyValueConfig& kv, const std::string& section = "metrics",
                                const std::string& propensity = "propensity");
void put_metric_config(KeyValueConfig& kv, const MetricConfig& cfg, const std::string& section = "metrics",
                       const std::string& propensity = "propensity");
void put_fit_config(KeyValueConfig& kv, const std::string& section, const FitConfig& cfg);

std::string format_double(double v);
std::uint64_t parse_seed(const std::string& text);

struct ExperimentConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<GeneratorKind> generators = {GeneratorKind::Bootstrap, GeneratorKind::Independent,
                                             GeneratorKind::SequentialCart};
    std::size_t n_splits = 4;
    std::size_t ensemble_size = 5;
    double train_fraction = 0.7;
    // Evaluation classifiers in tie-break order; their seeds are derived per use.
    std::vector<FitConfig> classifiers = {
        FitConfig::defaults(ClassifierKind::Logistic), FitConfig::defaults(ClassifierKind::CartTree),
        FitConfig::defaults(ClassifierKind::LinearSvm), FitConfig::defaults(ClassifierKind::RandomForest)};
    ImputerKind imputer = ImputerKind::Cart;
    ImputeOptions impute;
    GeneratorConfig generator;
    MetricConfig metrics;  // its seed field is replaced per datapoint
    std::uint64_t seed = 0;
    std::size_t jobs = 1;  // worker threads; does not change results

    // Throws PreconditionError on an unusable configuration.
    void validate() const;

    // Every resolved setting, in the form read back by from_key_values.
    // `jobs` is left out so that outputs do not depend on it.
    KeyValueConfig to_key_values() const;
    // Relative dataset paths resolve against `base_dir`.
    static ExperimentConfig from_key_values(const KeyValueConfig& kv, const std::filesystem::path& base_dir);
    static ExperimentConfig load(const std::filesystem::path& path);
};

struct DatapointResult {
    MetricVector metrics;
    std::vector<double> accuracy;  // per classifier, on the real test split
    std::optional<double> u_pca;
};

// One (dataset, generator, split) cell.
struct EnsembleReport {
    std::size_t dataset = 0;
    std::size_t generator = 0;
    std::size_t split = 0;
    bool ok = false;
    std::string error;

    std::vector<DatapointResult> datapoints;
    MetricVector metrics;  // mean over datapoints
    std::optional<double> u_pca;
    std::vector<double> accuracy;           // mean synthetic-trained accuracy per classifier
    std::vector<double> relative_accuracy;  // |accuracy - real baseline| per classifier
    double ara = 0.0;                       // mean of relative_accuracy
    std::optional<double> ci_width_p;
    std::optional<double> ci_width_upca;
};

struct DatasetSummary {
    std::string name;
    DatasetRole role = DatasetRole::Both;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    bool baseline_ok = false;
    std::string baseline_error;
    std::vector<std::vector<double>> baseline_per_split;  // [split][classifier]
    std::vector<double> baseline;                         // mean over splits
    std::vector<std::string> impute_warnings;
};

enum class QualityMetric { Propensity, Upca };
std::string_view to_string(QualityMetric q);
std::optional<double> quality_value(const EnsembleReport& r, QualityMetric q);

enum class SelectionScope { PerDataset, PerDatasetGenerator };

struct Winner {
    std::size_t dataset = 0;
    std::optional<std::size_t> generator;  // set for PerDatasetGenerator
    std::size_t ensemble = 0;              // index into the report list
};

double relative_accuracy(double pa_synth, double pa_real);

// Argmin of the quality value within each group of successful ensembles that
// carry it; ties go to the lower generator index, then the lower split.
// Groups come out ordered by (dataset, generator). Throws PreconditionError
// when no ensemble qualifies.
std::vector<Winner> select_optimal(std::span<const EnsembleReport> reports, QualityMetric q, SelectionScope scope);

// Index of the highest accuracy; ties go to the earlier classifier.
std::size_t winning_classifier(std::span<const double> accuracies);

// Minimum of every metric over the dataset's successful ensembles.
std::vector<std::optional<MetricVector>> dataset_minima(std::span<const EnsembleReport> reports, std::size_t n_datasets);

struct SummaryColumn {
    // Mean over the evaluated datasets of |X(winner) - X_min|, per metric.
    MetricVector avg_abs_diff;
    double overall = 0.0;             // mean of the four entries
    double overall_normalized = 0.0;  // same after dividing each by its corpus range
    std::size_t n_datasets = 0;
};

// How far the winners of one quality metric sit from the per-dataset best
// metric values, over the datasets in `datasets`. Metric ranges are taken over all successful ensembles.
SummaryColumn corpus_summary(std::span<const EnsembleReport> reports, std::span<const Winner> winners,
                             std::span<const std::size_t> datasets);

// Range of the quality values of each generator's ensembles on each dataset,
// averaged over datasets. Empty when the generator has no qualifying ensemble.
std::vector<std::optional<double>> stability(std::span<const EnsembleReport> reports, QualityMetric q,
                                             std::size_t n_generators);

struct MatchTally {
    std::size_t matches = 0;
    std::size_t total = 0;
    std::string text() const;  // "m/n"
};

struct CorrelationEntry {
    std::string group;  // generator name or "overall"
    std::string quality;
    std::size_t n = 0;
    std::optional<double> r;
    std::optional<double> p_value;
    std::string note;
};

struct ExperimentReport {
    nlohmann::json config;
    std::vector<std::string> generator_names;
    std::vector<std::string> classifier_names;
    std::vector<DatasetSummary> datasets;
    std::vector<EnsembleReport> ensembles;  // ordered by (dataset, generator, split)
    std::optional<UpcaModel> upca;
    std::string upca_error;
    std::vector<std::size_t> pca_training;
    std::vector<std::size_t> pca_testing;

    std::size_t failed_cells() const;
    nlohmann::json to_json() const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// How many testing datasets' winners under `q` share the real data's winning
// classifier.
MatchTally winner_matches(const ExperimentReport& report, QualityMetric q);
// The same tally per generator, over all its ensembles on testing datasets.
std::vector<MatchTally> generator_matches(const ExperimentReport& report);
// Correlation of each quality metric with ARA per generator
// and over all generators, on testing datasets.
std::vector<CorrelationEntry> quality_correlations(const ExperimentReport& report);

// report.json plus the CSV tables listed in the README.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

struct ImputeCompareRow {
    ImputerKind method = ImputerKind::Cart;
    std::size_t repeat = 0;
    std::size_t out_of_range_real = 0;   // imputed masked table vs its observed cells
    std::size_t out_of_range_synth = 0;  // imputed synthetic table vs the same
    double hellinger = 0.0;              // imputed real vs imputed synthetic
    double propensity = 0.0;
};

// Imputer comparison on one table: every repeat masks `fraction` of the
// cells, imputes the masked table with each method, draws a sequential-CART
// synthetic table from the masked table, imputes that with the same method
// and scores the pair.
std::vector<ImputeCompareRow> impute_compare(const Table& t, std::size_t repeats, double fraction, std::uint64_t seed,
                                             const MetricConfig& metrics = {}, const ImputeOptions& options = {});

}  // namespace synthval
