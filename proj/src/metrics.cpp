#include "synthval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "synthval/error.hpp"
#include "synthval/rng.hpp"

namespace synthval {

nlohmann::json MetricVector::to_json() const {
    return {{"hellinger", hellinger}, {"pcd", pcd}, {"log_cluster", log_cluster}, {"propensity", propensity}};
}

MetricVector MetricVector::from_json(const nlohmann::json& j) {
    MetricVector v;
    v.hellinger = j.at("hellinger").get<double>();
    v.pcd = j.at("pcd").get<double>();
    v.log_cluster = j.at("log_cluster").get<double>();
    v.propensity = j.at("propensity").get<double>();
    return v;
}

MetricVector mean_of(std::span<const MetricVector> vectors) {
    if (vectors.empty()) throw PreconditionError("mean of zero metric vectors");
    std::array<double, 4> sum{};
    for (const auto& v : vectors) {
        const auto a = v.as_array();
        for (std::size_t d = 0; d < 4; ++d) sum[d] += a[d];
    }
    for (double& s : sum) s /= static_cast<double>(vectors.size());
    return MetricVector::from_array(sum);
}

double hellinger_distributions(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw PreconditionError("distributions differ in support size");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        s += d * d;
    }
    return std::clamp(std::sqrt(s) / std::numbers::sqrt2, 0.0, 1.0);
}

namespace {

void require_complete(const Column& c) {
    if (c.size() == 0) throw PreconditionError("column '" + c.name() + "' is empty");
    if (c.missing_count() > 0) throw PreconditionError("column '" + c.name() + "' has missing cells; impute first");
}

}  // namespace

double hellinger_column(const Column& real, const Column& synth, std::size_t bins) {
    if (real.kind() != synth.kind()) throw SchemaError("column '" + real.name() + "' differs in kind");
    require_complete(real);
    require_complete(synth);
    std::vector<double> p;
    std::vector<double> q;
    if (real.is_categorical()) {
        std::vector<std::string> levels;
        std::set_union(real.levels().begin(), real.levels().end(), synth.levels().begin(), synth.levels().end(),
                       std::back_inserter(levels));
        auto frequencies = [&](const Column& c) {
            std::vector<double> f(levels.size(), 0.0);
            std::vector<std::size_t> map(c.levels().size());
            for (std::size_t l = 0; l < c.levels().size(); ++l) {
                map[l] = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), c.levels()[l]) - levels.begin());
            }
            for (int code : c.codes()) f[map[static_cast<std::size_t>(code)]] += 1.0;
            for (double& v : f) v /= static_cast<double>(c.size());
            return f;
        };
        p = frequencies(real);
        q = frequencies(synth);
    } else {
        if (bins == 0) throw PreconditionError("histogram needs at least one bin");
        const auto [rmin, rmax] = std::minmax_element(real.numbers().begin(), real.numbers().end());
        const auto [smin, smax] = std::minmax_element(synth.numbers().begin(), synth.numbers().end());
        const double lo = std::min(*rmin, *smin);
        const double hi = std::max(*rmax, *smax);
        auto histogram = [&](const Column& c) {
            std::vector<double> h(bins, 0.0);
            for (double v : c.numbers()) {
                std::size_t b = 0;
                if (hi > lo) {
                    const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
                    b = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, pos)));
                }
                h[b] += 1.0;
            }
            for (double& v : h) v /= static_cast<double>(c.size());
            return h;
        };
        p = histogram(real);
        q = histogram(synth);
    }
    return hellinger_distributions(p, q);
}

double hellinger_overall(const Table& real, const Table& synth, std::size_t bins) {
    require_same_schema(real, synth);
    if (real.n_cols() == 0) throw PreconditionError("tables have no columns");
    double sum = 0.0;
    for (std::size_t c = 0; c < real.n_cols(); ++c) sum += hellinger_column(real.column(c), synth.column(c), bins);
    return sum / static_cast<double>(real.n_cols());
}

Matrix pearson_correlation(const Matrix& m) {
    const std::size_t d = m.cols();
    const double n = static_cast<double>(m.rows());
    std::vector<double> mean(d, 0.0);
    std::vector<bool> constant(d, true);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            mean[c] += m(r, c);
            if (m(r, c) != m(0, c)) constant[c] = false;
        }
        mean[c] /= n;
    }
    Matrix cov(d, d);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t a = 0; a < d; ++a) {
            const double da = m(r, a) - mean[a];
            for (std::size_t b = a; b < d; ++b) cov(a, b) += da * (m(r, b) - mean[b]);
        }
    }
    Matrix corr(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < d; ++b) {
            double v = 0.0;
            if (!constant[a] && !constant[b] && cov(a, a) > 0.0 && cov(b, b) > 0.0) {
                v = std::clamp(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)), -1.0, 1.0);
            }
            corr(a, b) = v;
            corr(b, a) = v;
        }
    }
    return corr;
}

Matrix correlation_matrix(const Table& t, CategoricalEncoding encoding) {
    if (t.n_rows() == 0) throw PreconditionError("correlation of an empty table");
    return pearson_correlation(encode_numeric(t, encoding));
}

double pcd(const Table& real, const Table& synth, CategoricalEncoding encoding) {
    require_same_schema(real, synth);
    const Matrix a = correlation_matrix(real, encoding);
    const Matrix b = correlation_matrix(synth, encoding);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

MixedData MixedData::merge(const Table& real, const Table& synth) {
    require_same_schema(real, synth);
    if (real.has_missing() || synth.has_missing()) throw PreconditionError("clustering input has missing cells; impute first");
    const Table merged = concat_rows(canonical_row_order(real), canonical_row_order(synth));
    MixedData data;
    std::vector<std::size_t> numeric_cols;
    std::vector<std::size_t> categorical_cols;
    for (std::size_t c = 0; c < merged.n_cols(); ++c) {
        (merged.column(c).is_numeric() ? numeric_cols : categorical_cols).push_back(c);
    }
    const std::size_t n = merged.n_rows();
    data.numeric = Matrix(n, numeric_cols.size());
    for (std::size_t j = 0; j < numeric_cols.size(); ++j) {
        const auto& col = merged.column(numeric_cols[j]);
        for (std::size_t r = 0; r < n; ++r) data.numeric(r, j) = col.number(r);
    }
    data.n_categorical = categorical_cols.size();
    data.categorical.resize(n * data.n_categorical);
    for (std::size_t j = 0; j < categorical_cols.size(); ++j) {
        const auto& col = merged.column(categorical_cols[j]);
        for (std::size_t r = 0; r < n; ++r) data.categorical[r * data.n_categorical + j] = col.code(r);
    }
    data.is_real.assign(n, false);
    std::fill(data.is_real.begin(), data.is_real.begin() + static_cast<std::ptrdiff_t>(real.n_rows()), true);
    return data;
}

ClusterStats cluster_mixed(const MixedData& data, std::size_t k, std::uint64_t seed, const ClusterOptions& options) {
    const std::size_t n = data.n_rows();
    if (k < 2 || 2 * k > n) {
        throw PreconditionError("cluster count " + std::to_string(k) + " out of range for " + std::to_string(n) + " rows");
    }
    const std::size_t dn = data.numeric.cols();
    const std::size_t dc = data.n_categorical;
    const Standardized z = standardize_columns(data.numeric.rows() == n ? data.numeric : Matrix(n, 0));

    double gamma = 1.0;
    if (options.gamma) {
        gamma = *options.gamma;
    } else if (dn > 0) {
        gamma = 0.5 * std::accumulate(z.stddevs.begin(), z.stddevs.end(), 0.0) / static_cast<double>(dn);
    }

    std::vector<int> n_levels(dc, 0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < dc; ++j) n_levels[j] = std::max(n_levels[j], data.categorical[r * dc + j] + 1);
    }

    // Prototypes: k x dn numeric centres and k x dc modes.
    Matrix centres(k, dn);
    std::vector<int> modes(k * dc, 0);
    {
        std::vector<std::size_t> pick(n);
        std::iota(pick.begin(), pick.end(), 0);
        Rng rng(seed);
        for (std::size_t c = 0; c < k; ++c) {
            std::swap(pick[c], pick[c + rng.index(n - c)]);
            const std::size_t r = pick[c];
            for (std::size_t j = 0; j < dn; ++j) centres(c, j) = z.values(r, j);
            for (std::size_t j = 0; j < dc; ++j) modes[c * dc + j] = data.categorical[r * dc + j];
        }
    }

    auto distance = [&](std::size_t r, std::size_t c) {
        double s = 0.0;
        for (std::size_t j = 0; j < dn; ++j) {
            const double d = z.values(r, j) - centres(c, j);
            s += d * d;
        }
        std::size_t mismatches = 0;
        for (std::size_t j = 0; j < dc; ++j) mismatches += data.categorical[r * dc + j] != modes[c * dc + j] ? 1 : 0;
        return s + gamma * static_cast<double>(mismatches);
    };

    ClusterStats stats;
    stats.k = k;
    stats.gamma = gamma;
    std::vector<std::size_t> assignment(n, 0);
    std::vector<std::size_t> previous(n, k);
    std::vector<std::size_t> sizes(k, 0);

    for (std::size_t iter = 0; iter < std::max<std::size_t>(options.max_iterations, 1); ++iter) {
        stats.iterations = iter + 1;
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t r = 0; r < n; ++r) {
            std::size_t best = 0;
            double best_d = distance(r, 0);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = distance(r, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assignment[r] = best;
            ++sizes[best];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t r = 0; r < n; ++r) {
                if (sizes[assignment[r]] < 2) continue;
                const double d = distance(r, assignment[r]);
                if (d > far_d) {
                    far_d = d;
                    far = r;
                }
            }
            --sizes[assignment[far]];
            assignment[far] = c;
            sizes[c] = 1;
            for (std::size_t j = 0; j < dn; ++j) centres(c, j) = z.values(far, j);
            for (std::size_t j = 0; j < dc; ++j) modes[c * dc + j] = data.categorical[far * dc + j];
        }
        if (assignment == previous) {
            stats.converged = true;
            break;
        }
        previous = assignment;

        centres = Matrix(k, dn);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < dn; ++j) centres(assignment[r], j) += z.values(r, j);
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < dn; ++j) centres(c, j) /= static_cast<double>(sizes[c]);
        }
        for (std::size_t j = 0; j < dc; ++j) {
            const auto levels = static_cast<std::size_t>(n_levels[j]);
            std::vector<std::size_t> counts(k * levels, 0);
            for (std::size_t r = 0; r < n; ++r) {
                ++counts[assignment[r] * levels + static_cast<std::size_t>(data.categorical[r * dc + j])];
            }
            for (std::size_t c = 0; c < k; ++c) {
                const auto begin = counts.begin() + static_cast<std::ptrdiff_t>(c * levels);
                modes[c * dc + j] = static_cast<int>(std::max_element(begin, begin + static_cast<std::ptrdiff_t>(levels)) - begin);
            }
        }
    }

    stats.sizes = sizes;
    stats.real_counts.assign(k, 0);
    for (std::size_t r = 0; r < n; ++r) {
        if (data.is_real[r]) ++stats.real_counts[assignment[r]];
    }
    stats.assignment = std::move(assignment);
    return stats;
}

double log_cluster_from_stats(const ClusterStats& stats, double floor) {
    double sum = 0.0;
    for (std::size_t c = 0; c < stats.k; ++c) {
        const double share = static_cast<double>(stats.real_counts[c]) / static_cast<double>(stats.sizes[c]);
        sum += (share - 0.5) * (share - 0.5);
    }
    return std::log(std::max(floor, sum / static_cast<double>(stats.k)));
}

std::size_t log_cluster_k(std::size_t n, std::size_t divisor) {
    return std::max<std::size_t>(2, n / std::max<std::size_t>(divisor, 1));
}

double log_cluster(const Table& real, const Table& synth, std::uint64_t seed, const ClusterOptions& options, double floor,
                   std::size_t divisor) {
    const MixedData data = MixedData::merge(real, synth);
    const ClusterStats stats = cluster_mixed(data, log_cluster_k(data.n_rows(), divisor), seed, options);
    return log_cluster_from_stats(stats, floor);
}

double propensity_from_scores(std::span<const double> scores) {
    if (scores.empty()) throw PreconditionError("propensity of zero records");
    double s = 0.0;
    for (double p : scores) s += (p - 0.5) * (p - 0.5);
    return s / static_cast<double>(scores.size());
}

namespace {

std::vector<double> propensity_scores(const Table& real, const Table& synth, const FitConfig& model) {
    if (model.kind == ClassifierKind::LinearSvm) throw UnsupportedError("propensity needs a probabilistic classifier");
    require_same_schema(real, synth);
    if (real.n_rows() == 0 || synth.n_rows() == 0) throw PreconditionError("propensity needs non-empty tables");
    const Table merged = concat_rows(canonical_row_order(real), canonical_row_order(synth));
    const Standardized x = standardize_columns(encode_numeric(merged));
    std::vector<int> indicator(merged.n_rows(), 0);
    std::fill(indicator.begin(), indicator.begin() + static_cast<std::ptrdiff_t>(real.n_rows()), 1);
    const TrainedModel fitted = train_classifier(x.values, indicator, model, 2);
    const Matrix proba = fitted.predict_proba(x.values);
    return proba.column(1);
}

}  // namespace

double propensity(const Table& real, const Table& synth, const FitConfig& model) {
    return propensity_from_scores(propensity_scores(real, synth, model));
}

nlohmann::json MetricConfig::to_json() const {
    nlohmann::json j = {{"hellinger_bins", hellinger_bins},
                        {"correlation_encoding", std::string(to_string(correlation_encoding))},
                        {"propensity_model", propensity_model.to_json()},
                        {"cluster_divisor", cluster_divisor},
                        {"lc_floor", lc_floor},
                        {"cluster_max_iterations", cluster.max_iterations},
                        {"seed", seed}};
    j["cluster_gamma"] = cluster.gamma ? nlohmann::json(*cluster.gamma) : nlohmann::json("auto");
    return j;
}

MetricResult metric_vector(const Table& real_in, const Table& synth_in, const MetricConfig& config) {
    require_same_schema(real_in, synth_in);
    if (real_in.has_missing() || synth_in.has_missing()) {
        throw PreconditionError("metric inputs must be imputed before scoring");
    }
    const Table real = canonical_row_order(real_in);
    const Table synth = canonical_row_order(synth_in);

    MetricResult out;
    out.metrics.hellinger = hellinger_overall(real, synth, config.hellinger_bins);
    out.metrics.pcd = pcd(real, synth, config.correlation_encoding);

    const std::uint64_t lc_seed = derive_seed(config.seed, {seed_tag::log_cluster});
    const MixedData merged = MixedData::merge(real, synth);
    const std::size_t k = log_cluster_k(merged.n_rows(), config.cluster_divisor);
    const ClusterStats clusters = cluster_mixed(merged, k, lc_seed, config.cluster);
    out.metrics.log_cluster = log_cluster_from_stats(clusters, config.lc_floor);

    FitConfig model = config.propensity_model;
    model.seed = derive_seed(config.seed, {seed_tag::propensity});
    out.metrics.propensity = propensity(real, synth, model);

    out.provenance = config.to_json();
    out.provenance["log_cluster_seed"] = lc_seed;
    out.provenance["log_cluster_k"] = k;
    out.provenance["log_cluster_gamma"] = clusters.gamma;
    out.provenance["log_cluster_iterations"] = clusters.iterations;
    out.provenance["log_cluster_converged"] = clusters.converged;
    out.provenance["propensity_seed"] = model.seed;
    out.provenance["n_real"] = real.n_rows();
    out.provenance["n_synthetic"] = synth.n_rows();
    return out;
}

}  // namespace synthval
