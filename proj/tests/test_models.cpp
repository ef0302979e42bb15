#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "synthval/cart.hpp"
#include "synthval/error.hpp"
#include "synthval/models.hpp"

using namespace synthval;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

// Repeated XOR corners.
void xor_data(Matrix& x, std::vector<int>& y, std::size_t copies) {
    const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const int lab[4] = {0, 0, 1, 1};
    x = Matrix(4 * copies, 2);
    y.assign(4 * copies, 0);
    for (std::size_t k = 0; k < copies; ++k) {
        for (std::size_t i = 0; i < 4; ++i) {
            x(4 * k + i, 0) = pts[i][0];
            x(4 * k + i, 1) = pts[i][1];
            y[4 * k + i] = lab[i];
        }
    }
}

// Two Gaussian blobs separated along the first axis.
void blobs(Matrix& x, std::vector<int>& y, std::size_t n, double gap, std::uint64_t seed) {
    Rng rng(seed);
    x = Matrix(n, 3);
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 2);
        x(i, 0) = rng.normal() + (y[i] ? gap : -gap);
        x(i, 1) = rng.normal();
        x(i, 2) = rng.normal();
    }
}

}  // namespace

TEST_CASE("classification tree finds the obvious threshold") {
    const Matrix x = from_rows({{1}, {2}, {3}, {10}, {11}, {12}});
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    const auto tree = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{});
    CHECK(tree.n_leaves() == 2);
    CHECK(tree.depth() == 1);
    const double lo[] = {2.5};
    const double hi[] = {9.0};
    const auto l = tree.leaf_of(lo);
    const auto h = tree.leaf_of(hi);
    CHECK(tree.leaf_rows(l) == std::vector<std::size_t>{0, 1, 2});
    CHECK(tree.leaf_rows(h) == std::vector<std::size_t>{3, 4, 5});
    CHECK(tree.leaf_distribution(l)[0] == 1.0);
}

TEST_CASE("regression tree leaves hold target means") {
    const Matrix x = from_rows({{0}, {0}, {1}, {1}});
    const std::vector<double> y = {1.0, 3.0, 10.0, 14.0};
    const auto tree = CartTree::fit_regression(TreeFeatures::all_numeric(x), y, TreeParams{});
    const double a[] = {0.0};
    const double b[] = {1.0};
    // A depth-1 tree on x alone cannot separate rows with equal x.
    CHECK(tree.leaf_mean(tree.leaf_of(a)) == doctest::Approx(2.0));
    CHECK(tree.leaf_mean(tree.leaf_of(b)) == doctest::Approx(12.0));
    CHECK(tree.n_leaves() == 2);
}

TEST_CASE("a pure node is not split") {
    const Matrix x = from_rows({{1}, {2}, {3}});
    const std::vector<int> y = {1, 1, 1};
    const auto tree = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{});
    CHECK(tree.n_leaves() == 1);
}

TEST_CASE("categorical splits group levels by target") {
    TreeFeatures f;
    f.values = from_rows({{0}, {1}, {2}, {3}, {0}, {1}, {2}, {3}});
    f.kinds = {FeatureKind::Categorical};
    // Levels 0 and 2 are class 1, levels 1 and 3 class 0: not a threshold split.
    const std::vector<int> y = {1, 0, 1, 0, 1, 0, 1, 0};
    const auto tree = CartTree::fit_classification(f, y, 2, TreeParams{});
    CHECK(tree.n_leaves() == 2);
    const double l0[] = {0};
    const double l2[] = {2};
    const double l1[] = {1};
    CHECK(tree.leaf_of(l0) == tree.leaf_of(l2));
    CHECK(tree.leaf_of(l0) != tree.leaf_of(l1));
}

TEST_CASE("missing predictor values are routed to a side") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const Matrix x = from_rows({{1}, {2}, {nan}, {10}, {11}, {nan}});
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    const auto tree = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{});
    const double m[] = {nan};
    CHECK(tree.leaf_of(m) < tree.n_leaves());
}

TEST_CASE("min_leaf and max_depth limit growth") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 200, 0.3, 3);
    const auto deep = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{30, 1, 2});
    const auto shallow = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{2, 1, 2});
    const auto coarse = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{30, 20, 40});
    CHECK(shallow.depth() <= 2);
    CHECK(coarse.n_leaves() < deep.n_leaves());
    for (std::size_t l = 0; l < coarse.n_leaves(); ++l) CHECK(coarse.leaf_rows(l).size() >= 20);
}

TEST_CASE("restricted rows and features are honoured") {
    const Matrix x = from_rows({{1, 0}, {2, 1}, {3, 0}, {4, 1}});
    const std::vector<int> y = {0, 1, 0, 1};
    const std::vector<std::size_t> rows = {0, 1, 1, 3};
    const std::vector<std::size_t> feats = {0};
    const auto tree = CartTree::fit_classification(TreeFeatures::all_numeric(x), y, 2, TreeParams{}, rows, feats);
    std::size_t total = 0;
    for (std::size_t l = 0; l < tree.n_leaves(); ++l) total += tree.leaf_rows(l).size();
    CHECK(total == 4);
}

TEST_CASE("logistic gradient matches central differences") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 20;
        const std::size_t d = 3;
        const int k = 3;
        Matrix x(n, d);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
            y[i] = static_cast<int>(rng.index(k));
        }
        std::vector<double> w(k * (d + 1));
        for (auto& v : w) v = rng.normal();
        std::vector<double> g(w.size());
        logistic_objective(x, y, k, w, 0.1, g);
        std::vector<double> tmp(w.size());
        for (std::size_t p = 0; p < w.size(); ++p) {
            const double h = 1e-6;
            auto wp = w;
            auto wm = w;
            wp[p] += h;
            wm[p] -= h;
            const double fd = (logistic_objective(x, y, k, wp, 0.1, tmp) - logistic_objective(x, y, k, wm, 0.1, tmp)) / (2 * h);
            CHECK(std::fabs(fd - g[p]) <= 1e-6 * std::max(1.0, std::fabs(fd)));
        }
    }
}

TEST_CASE("xor separates trees from linear models") {
    Matrix x;
    std::vector<int> y;
    xor_data(x, y, 5);
    const auto dt = train_classifier(x, y, FitConfig::defaults(ClassifierKind::CartTree));
    const auto lr = train_classifier(x, y, FitConfig::defaults(ClassifierKind::Logistic));
    CHECK(accuracy(dt, x, y) == 1.0);
    CHECK(accuracy(lr, x, y) == 0.5);
}

TEST_CASE("every classifier learns separable blobs") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 200, 3.0, 8);
    for (auto kind : {ClassifierKind::Logistic, ClassifierKind::CartTree, ClassifierKind::RandomForest,
                      ClassifierKind::LinearSvm, ClassifierKind::GradientBoostedTrees}) {
        CAPTURE(to_string(kind));
        const auto m = train_classifier(x, y, FitConfig::defaults(kind, 3));
        CHECK(accuracy(m, x, y) >= 0.97);
        CHECK(m.n_classes() == 2);
        CHECK(m.n_features() == 3);
    }
}

TEST_CASE("multiclass probabilities sum to one") {
    Rng rng(4);
    Matrix x(150, 2);
    std::vector<int> y(150);
    for (std::size_t i = 0; i < 150; ++i) {
        y[i] = static_cast<int>(i % 3);
        x(i, 0) = rng.normal() + 3.0 * y[i];
        x(i, 1) = rng.normal();
    }
    for (auto kind : {ClassifierKind::Logistic, ClassifierKind::CartTree, ClassifierKind::RandomForest,
                      ClassifierKind::GradientBoostedTrees}) {
        CAPTURE(to_string(kind));
        const auto m = train_classifier(x, y, FitConfig::defaults(kind, 1));
        const Matrix p = m.predict_proba(x);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            double s = 0.0;
            for (double v : p.row(i)) s += v;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
        CHECK(accuracy(m, x, y) > 0.8);
    }
}

TEST_CASE("boosting loss never increases") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 300, 0.7, 21);
    const auto m = train_classifier(x, y, FitConfig::defaults(ClassifierKind::GradientBoostedTrees, 2));
    const auto& h = m.training_loss_history();
    REQUIRE(h.size() == 101);
    CHECK(h.front() == doctest::Approx(std::log(2.0)));
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
}

TEST_CASE("training is deterministic under a fixed seed") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 120, 0.5, 5);
    for (auto kind : {ClassifierKind::RandomForest, ClassifierKind::LinearSvm}) {
        const auto a = train_classifier(x, y, FitConfig::defaults(kind, 9));
        const auto b = train_classifier(x, y, FitConfig::defaults(kind, 9));
        CHECK(a.decision_scores(x) == b.decision_scores(x));
    }
}

TEST_CASE("classifier preconditions") {
    Matrix x(4, 1);
    const std::vector<int> same = {1, 1, 1, 1};
    CHECK_THROWS_AS(train_classifier(x, same, FitConfig::defaults(ClassifierKind::Logistic)), DegenerateError);
    Matrix bad(2, 1);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    const std::vector<int> y2 = {0, 1};
    CHECK_THROWS_AS(train_classifier(bad, y2, FitConfig::defaults(ClassifierKind::Logistic)), PreconditionError);
    Matrix ok(2, 1);
    ok(1, 0) = 1.0;
    const auto svm = train_classifier(ok, y2, FitConfig::defaults(ClassifierKind::LinearSvm));
    CHECK_THROWS_AS(svm.predict_proba(ok), UnsupportedError);
    CHECK_THROWS_AS(svm.decision_scores(Matrix(1, 3)), SchemaError);
}

TEST_CASE("ties in scores go to the lowest class") {
    Matrix x;
    std::vector<int> y;
    xor_data(x, y, 1);
    const auto lr = train_classifier(x, y, FitConfig::defaults(ClassifierKind::Logistic));
    for (int label : lr.predict_labels(x)) CHECK(label == 0);
}

TEST_CASE("fit config JSON round-trip") {
    FitConfig c = FitConfig::defaults(ClassifierKind::RandomForest, 77);
    c.n_trees = 12;
    const FitConfig back = FitConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(classifier_kind_from_string("svm") == ClassifierKind::LinearSvm);
}
