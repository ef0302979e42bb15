#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "synthval/matrix.hpp"
#include "synthval/models.hpp"
#include "synthval/table.hpp"

namespace synthval {

// The four broad utility metrics of one synthetic table (or the average over
// an ensemble). All four are lower-is-better.
//   hellinger    attribute fidelity, mean per-column Hellinger distance, in [0, 1]
//   pcd          bivariate fidelity, Frobenius norm of the correlation difference, >= 0
//   log_cluster  population fidelity, log mean squared cluster imbalance, <= ln(1/4)
//   propensity   population fidelity, mean squared distance of p-hat from 1/2, in [0, 1/4]
struct MetricVector {
    double hellinger = 0.0;
    double pcd = 0.0;
    double log_cluster = 0.0;
    double propensity = 0.0;

    static constexpr std::size_t size = 4;
    std::array<double, 4> as_array() const { return {hellinger, pcd, log_cluster, propensity}; }
    static MetricVector from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

    nlohmann::json to_json() const;
    static MetricVector from_json(const nlohmann::json& j);

    bool operator==(const MetricVector&) const = default;
};

inline constexpr std::array<const char*, 4> kMetricNames = {"hellinger", "pcd", "log_cluster", "propensity"};

// Componentwise arithmetic mean; requires a non-empty span.
MetricVector mean_of(std::span<const MetricVector> vectors);

// Hellinger distance between two discrete distributions of equal length.
double hellinger_distributions(std::span<const double> p, std::span<const double> q);

// Categorical columns compare category frequencies over the union of levels.
// Numeric columns are histogrammed on `bins` equal-width bins over the
// union range of both columns first.
double hellinger_column(const Column& real, const Column& synth, std::size_t bins = 20);
double hellinger_overall(const Table& real, const Table& synth, std::size_t bins = 20);

// Pearson correlation of the columns of a matrix. The diagonal is 1; any
// off-diagonal entry involving a single-valued column is 0.
Matrix pearson_correlation(const Matrix& m);
Matrix correlation_matrix(const Table& t, CategoricalEncoding encoding = CategoricalEncoding::Frequency);
double pcd(const Table& real, const Table& synth, CategoricalEncoding encoding = CategoricalEncoding::Frequency);

// Merged real + synthetic rows for mixed-type clustering.
struct MixedData {
    Matrix numeric;                 // raw numeric columns
    std::vector<int> categorical;   // row-major codes, n_rows x n_categorical
    std::size_t n_categorical = 0;
    std::vector<bool> is_real;

    std::size_t n_rows() const { return is_real.size(); }
    // Stacks real over synth (canonical row order within each), with
    // categorical levels unified by label text. No missing cells allowed.
    static MixedData merge(const Table& real, const Table& synth);
};

struct ClusterOptions {
    // Weight of a categorical mismatch; default 0.5 x mean standard deviation
    // of the raw numeric columns, or 1 when there are none.
    std::optional<double> gamma;
    std::size_t max_iterations = 100;
};

struct ClusterStats {
    std::size_t k = 0;
    std::vector<std::size_t> sizes;        // n_i
    std::vector<std::size_t> real_counts;  // n_i^R
    std::vector<std::size_t> assignment;   // cluster per merged row
    std::size_t iterations = 0;
    bool converged = false;
    double gamma = 0.0;
};

// k-prototypes: squared Euclidean distance on standardized numeric parts plus
// gamma times the categorical mismatch count. Seeded distinct-row initial
// prototypes, Lloyd alternation until the assignment stops changing or
// max_iterations. An empty cluster takes the point farthest from its own
// prototype (from a cluster with more than one member).
ClusterStats cluster_mixed(const MixedData& data, std::size_t k, std::uint64_t seed, const ClusterOptions& options = {});

// ln((1/k) sum_i (n_i^R / n_i - 1/2)^2), argument floored at `floor`.
double log_cluster_from_stats(const ClusterStats& stats, double floor = 1e-12);

// Cluster count for a merged table of n rows: max(2, floor(n / divisor)).
std::size_t log_cluster_k(std::size_t n, std::size_t divisor = 10);

double log_cluster(const Table& real, const Table& synth, std::uint64_t seed, const ClusterOptions& options = {},
                   double floor = 1e-12, std::size_t divisor = 10);

// (1/N) sum_i (p_i - 1/2)^2.
double propensity_from_scores(std::span<const double> scores);

// Trains `model` (its seed is used as given) on the merged, encoded,
// standardized table with indicator 1 = real and scores it in-sample.
double propensity(const Table& real, const Table& synth, const FitConfig& model);

struct MetricConfig {
    std::size_t hellinger_bins = 20;
    CategoricalEncoding correlation_encoding = CategoricalEncoding::Frequency;
    FitConfig propensity_model = FitConfig::defaults(ClassifierKind::GradientBoostedTrees);
    std::size_t cluster_divisor = 10;
    double lc_floor = 1e-12;
    ClusterOptions cluster;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

struct MetricResult {
    MetricVector metrics;
    nlohmann::json provenance;  // settings and derived sub-seeds
};

// All four metrics for an (imputed real, imputed synthetic) pair. Each metric
// draws its own sub-seed from `config.seed` and a fixed tag.
MetricResult metric_vector(const Table& real, const Table& synth, const MetricConfig& config);

}  // namespace synthval
