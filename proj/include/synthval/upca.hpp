#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>

#include <json.hpp>

#include "synthval/metrics.hpp"

namespace synthval {

// First-principal-component aggregator of the four utility metrics.
//
// Each metric is standardized with the corpus mean and population standard
// deviation; `loadings` is the unit eigenvector of the largest eigenvalue of
// the standardized covariance, oriented so that its components sum to a
// non-negative value. All four inputs are lower-is-better, so the projected
// score is lower-is-better as well.
struct UpcaModel {
    std::array<double, 4> means{};
    std::array<double, 4> stddevs{};
    std::array<double, 4> loadings{};
    std::array<double, 4> eigenvalues{};  // descending
    double explained_variance_ratio = 0.0;
    bool orientation_flipped = false;
    std::size_t corpus_size = 0;

    // sum_d loadings[d] * (v[d] - means[d]) / stddevs[d]
    double project(const MetricVector& v) const;

    nlohmann::json to_json() const;
    static UpcaModel from_json(const nlohmann::json& j);
    static UpcaModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

inline constexpr std::size_t kMinUpcaCorpus = 8;

// Throws PreconditionError for fewer than kMinUpcaCorpus vectors and
// DegenerateError when a metric is constant over the corpus.
UpcaModel fit_upca(std::span<const MetricVector> corpus);

inline double project(const UpcaModel& model, const MetricVector& v) { return model.project(v); }

}  // namespace synthval
