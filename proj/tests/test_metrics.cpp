#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "synthval/error.hpp"
#include "synthval/metrics.hpp"

using namespace synthval;
using fixtures::cat;

namespace {

// Two-pass textbook Pearson correlation.
double naive_corr(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

Table shifted(const Table& t, double by) {
    std::vector<Column> cols;
    for (const auto& c : t.columns()) {
        if (c.is_numeric()) {
            auto v = c.numbers();
            for (auto& x : v) x += by;
            cols.push_back(c.with_numbers(v));
        } else {
            cols.push_back(c);
        }
    }
    return Table(cols);
}

}  // namespace

TEST_CASE("hellinger of two point distributions") {
    const std::vector<double> p = {1.0, 0.0};
    const std::vector<double> q = {0.5, 0.5};
    CHECK(hellinger_distributions(p, q) == doctest::Approx(std::sqrt(1.0 - std::sqrt(0.5))).epsilon(1e-12));
    CHECK(hellinger_distributions(p, p) == 0.0);
    const std::vector<double> r = {0.0, 1.0};
    CHECK(hellinger_distributions(p, r) == doctest::Approx(1.0));
    CHECK_THROWS_AS(hellinger_distributions(p, std::vector<double>{1.0}), PreconditionError);
}

TEST_CASE("categorical hellinger uses the union of levels") {
    const Column a = cat("c", {"x", "x"});
    const Column b = cat("c", {"x", "y"});
    CHECK(hellinger_column(a, b) == doctest::Approx(std::sqrt(1.0 - std::sqrt(0.5))));
    const Column c = cat("c", {"z", "z"});
    CHECK(hellinger_column(a, c) == doctest::Approx(1.0));
}

TEST_CASE("numeric hellinger bins over the union range") {
    const Column real = Column::numeric("x", {0.0, 1.0});
    const Column synth = Column::numeric("x", {0.0, 0.0});
    // Two bins over [0, 1]: real (1/2, 1/2), synthetic (1, 0).
    CHECK(hellinger_column(real, synth, 2) == doctest::Approx(std::sqrt(1.0 - std::sqrt(0.5))));
    const Column disjoint = Column::numeric("x", {10.0, 11.0});
    CHECK(hellinger_column(real, disjoint, 20) == doctest::Approx(1.0));
    const Column constant = Column::numeric("x", {3.0, 3.0});
    CHECK(hellinger_column(constant, constant, 20) == 0.0);
}

TEST_CASE("pearson correlation matrix matches a two-pass oracle") {
    const Table t = fixtures::random_mixed(60, 4, 0, 2, 17);
    const Matrix m = encode_numeric(t);
    const Matrix c = pearson_correlation(m);
    for (std::size_t a = 0; a < 4; ++a) {
        CHECK(c(a, a) == 1.0);
        for (std::size_t b = 0; b < 4; ++b) {
            if (a != b) CHECK(c(a, b) == doctest::Approx(naive_corr(m.column(a), m.column(b))).epsilon(1e-12));
        }
    }
}

TEST_CASE("correlation with a constant column is zero") {
    const Table t({Column::numeric("a", {1, 2, 3}), Column::numeric("b", {5, 5, 5})});
    const Matrix c = correlation_matrix(t);
    CHECK(c(0, 1) == 0.0);
    CHECK(c(1, 1) == 1.0);
}

TEST_CASE("pcd of opposite correlations is two root two") {
    const Table pos({Column::numeric("a", {1, 2, 3, 4}), Column::numeric("b", {2, 4, 6, 8})});
    const Table neg({Column::numeric("a", {1, 2, 3, 4}), Column::numeric("b", {8, 6, 4, 2})});
    CHECK(pcd(pos, neg) == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-12));
    CHECK(pcd(pos, pos) == 0.0);
}

TEST_CASE("log cluster from hand-made cluster statistics") {
    ClusterStats pure;
    pure.k = 2;
    pure.sizes = {10, 10};
    pure.real_counts = {10, 0};
    CHECK(log_cluster_from_stats(pure) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    ClusterStats balanced;
    balanced.k = 2;
    balanced.sizes = {10, 6};
    balanced.real_counts = {5, 3};
    CHECK(log_cluster_from_stats(balanced) == doctest::Approx(std::log(1e-12)));
    ClusterStats mixed;
    mixed.k = 2;
    mixed.sizes = {4, 4};
    mixed.real_counts = {3, 1};
    CHECK(log_cluster_from_stats(mixed) == doctest::Approx(std::log(0.0625)));
}

TEST_CASE("cluster count follows the divisor rule") {
    CHECK(log_cluster_k(10) == 2);
    CHECK(log_cluster_k(39) == 3);
    CHECK(log_cluster_k(400) == 40);
    CHECK(log_cluster_k(400, 100) == 4);
}

TEST_CASE("separated real and synthetic blobs form pure clusters") {
    Rng rng(3);
    std::vector<double> a(100), b(100);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 100.0 + rng.normal();
    const Table real({Column::numeric("x", a)});
    const Table synth({Column::numeric("x", b)});
    const double lc = log_cluster(real, synth, 1, {}, 1e-12, 100);
    CHECK(lc == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("k-prototypes result is a fixed point of the assignment step") {
    const Table real = fixtures::random_mixed(80, 2, 2, 3, 5);
    const Table synth = fixtures::random_mixed(80, 2, 2, 3, 6);
    const MixedData data = MixedData::merge(real, synth);
    const ClusterStats s = cluster_mixed(data, 6, 2);
    REQUIRE(s.converged);
    CHECK(s.assignment.size() == 160);
    std::size_t total = 0;
    for (std::size_t i = 0; i < s.k; ++i) {
        CHECK(s.sizes[i] > 0);
        CHECK(s.real_counts[i] <= s.sizes[i]);
        total += s.sizes[i];
    }
    CHECK(total == 160);
    std::size_t real_total = 0;
    for (auto c : s.real_counts) real_total += c;
    CHECK(real_total == 80);
}

TEST_CASE("cluster preconditions") {
    const Table t = fixtures::random_mixed(4, 1, 0, 2, 1);
    const MixedData d = MixedData::merge(t, t);
    CHECK_THROWS_AS(cluster_mixed(d, 1, 0), PreconditionError);
    CHECK_THROWS_AS(cluster_mixed(d, 5, 0), PreconditionError);
}

TEST_CASE("propensity of exact indicator scores is one quarter") {
    const std::vector<double> exact = {1, 1, 0, 0};
    CHECK(propensity_from_scores(exact) == 0.25);
    const std::vector<double> half = {0.5, 0.5};
    CHECK(propensity_from_scores(half) == 0.0);
}

TEST_CASE("identical tables give zero distance and near-zero propensity") {
    const Table t = fixtures::random_mixed(500, 2, 2, 4, 9);
    MetricConfig cfg;
    cfg.seed = 4;
    const MetricVector v = metric_vector(t, t, cfg).metrics;
    CHECK(v.hellinger == 0.0);
    CHECK(v.pcd == 0.0);
    CHECK(v.propensity <= 0.02);
    CHECK(v.log_cluster <= std::log(0.25) + 1e-9);
}

TEST_CASE("metrics are invariant to row order") {
    const Table real = fixtures::random_mixed(120, 2, 1, 3, 31);
    const Table synth = fixtures::random_mixed(120, 2, 1, 3, 32);
    std::vector<std::size_t> perm(120);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(1);
    rng.shuffle(std::span<std::size_t>(perm));
    MetricConfig cfg;
    cfg.seed = 8;
    CHECK(metric_vector(real, synth, cfg).metrics == metric_vector(real.take_rows(perm), synth.take_rows(perm), cfg).metrics);
}

TEST_CASE("shifting the synthetic data worsens every metric") {
    const Table real = fixtures::random_mixed(300, 2, 1, 3, 41);
    MetricConfig cfg;
    cfg.seed = 2;
    const auto near = metric_vector(real, shifted(real, 0.05), cfg).metrics;
    const auto far = metric_vector(real, shifted(real, 3.0), cfg).metrics;
    CHECK(far.hellinger > near.hellinger);
    CHECK(far.propensity > near.propensity);
    CHECK(far.log_cluster > near.log_cluster);
}

TEST_CASE("metric inputs must be complete and share a schema") {
    const Table a({Column::numeric("x", {1, 2, 3})});
    const Table b({Column::numeric("y", {1, 2, 3})});
    const Table gap({Column::numeric("x", {1, fixtures::NA, 3})});
    CHECK_THROWS_AS(metric_vector(a, b, {}), SchemaError);
    CHECK_THROWS_AS(metric_vector(a, gap, {}), PreconditionError);
}

TEST_CASE("metric vector JSON and averaging") {
    const MetricVector a{0.1, 0.2, -3.0, 0.01};
    CHECK(MetricVector::from_json(a.to_json()) == a);
    const MetricVector b{0.3, 0.4, -1.0, 0.03};
    const std::vector<MetricVector> both = {a, b};
    const MetricVector m = mean_of(both);
    CHECK(m.hellinger == doctest::Approx(0.2));
    CHECK(m.log_cluster == doctest::Approx(-2.0));
    CHECK_THROWS_AS(mean_of(std::span<const MetricVector>{}), PreconditionError);
}
