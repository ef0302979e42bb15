#include "synthval/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "synthval/cart.hpp"
#include "synthval/error.hpp"
#include "synthval/rng.hpp"

namespace synthval {

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
    case ClassifierKind::Logistic: return "lr";
    case ClassifierKind::CartTree: return "dt";
    case ClassifierKind::RandomForest: return "rf";
    case ClassifierKind::LinearSvm: return "svm";
    case ClassifierKind::GradientBoostedTrees: return "gbt";
    }
    return "?";
}

ClassifierKind classifier_kind_from_string(std::string_view text) {
    if (text == "lr" || text == "logistic") return ClassifierKind::Logistic;
    if (text == "dt" || text == "cart" || text == "tree") return ClassifierKind::CartTree;
    if (text == "rf" || text == "forest" || text == "random_forest") return ClassifierKind::RandomForest;
    if (text == "svm" || text == "linear_svm") return ClassifierKind::LinearSvm;
    if (text == "gbt" || text == "gbm" || text == "boosting") return ClassifierKind::GradientBoostedTrees;
    throw ParseError("unknown classifier '" + std::string(text) + "'");
}

FitConfig FitConfig::defaults(ClassifierKind kind, std::uint64_t seed) {
    FitConfig c;
    c.kind = kind;
    c.seed = seed;
    switch (kind) {
    case ClassifierKind::Logistic:
        c.n_epochs = 500;
        c.learning_rate = 0.5;
        c.l2_penalty = 1e-3;
        break;
    case ClassifierKind::CartTree:
        c.max_depth = 30;
        break;
    case ClassifierKind::RandomForest:
        c.max_depth = 30;
        c.n_trees = 100;
        break;
    case ClassifierKind::LinearSvm:
        c.n_epochs = 50;
        c.l2_penalty = 1e-3;
        break;
    case ClassifierKind::GradientBoostedTrees:
        c.max_depth = 3;
        c.n_trees = 100;
        c.learning_rate = 0.1;
        break;
    }
    return c;
}

nlohmann::json FitConfig::to_json() const {
    return {{"kind", std::string(to_string(kind))},
            {"seed", seed},
            {"max_depth", max_depth},
            {"min_leaf", min_leaf},
            {"n_trees", n_trees},
            {"learning_rate", learning_rate},
            {"l2_penalty", l2_penalty},
            {"n_epochs", n_epochs},
            {"feature_fraction", feature_fraction},
            {"bootstrap", bootstrap}};
}

FitConfig FitConfig::from_json(const nlohmann::json& j) {
    FitConfig c = defaults(classifier_kind_from_string(j.at("kind").get<std::string>()));
    c.seed = j.value("seed", c.seed);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.min_leaf = j.value("min_leaf", c.min_leaf);
    c.n_trees = j.value("n_trees", c.n_trees);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.l2_penalty = j.value("l2_penalty", c.l2_penalty);
    c.n_epochs = j.value("n_epochs", c.n_epochs);
    c.feature_fraction = j.value("feature_fraction", c.feature_fraction);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    return c;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct TrainedModel::Impl {
    ClassifierKind kind{};
    std::size_t n_features = 0;
    int n_classes = 0;
    std::vector<double> history;

    virtual ~Impl() = default;
    virtual void score_row(std::span<const double> x, std::span<double> out) const = 0;
};

TrainedModel::TrainedModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

ClassifierKind TrainedModel::kind() const { return impl_->kind; }
std::size_t TrainedModel::n_features() const { return impl_->n_features; }
int TrainedModel::n_classes() const { return impl_->n_classes; }
const std::vector<double>& TrainedModel::training_loss_history() const { return impl_->history; }

Matrix TrainedModel::decision_scores(const Matrix& x) const {
    if (x.rows() > 0 && x.cols() != impl_->n_features) {
        throw SchemaError("model expects " + std::to_string(impl_->n_features) + " features, got " + std::to_string(x.cols()));
    }
    Matrix out(x.rows(), static_cast<std::size_t>(impl_->n_classes));
    for (std::size_t r = 0; r < x.rows(); ++r) impl_->score_row(x.row(r), out.row(r));
    return out;
}

std::vector<int> TrainedModel::predict_labels(const Matrix& x) const {
    const Matrix scores = decision_scores(x);
    std::vector<int> labels(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = scores.row(r);
        labels[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return labels;
}

Matrix TrainedModel::predict_proba(const Matrix& x) const {
    if (impl_->kind == ClassifierKind::LinearSvm) throw UnsupportedError("linear SVM does not produce probabilities");
    return decision_scores(x);
}

double logistic_objective(const Matrix& x, std::span<const int> y, int n_classes, std::span<const double> weights,
                          double l2, std::span<double> gradient) {
    const std::size_t d = x.cols();
    const std::size_t stride = d + 1;
    const auto k = static_cast<std::size_t>(n_classes);
    std::fill(gradient.begin(), gradient.end(), 0.0);
    std::vector<double> z(k);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            const double* w = weights.data() + c * stride;
            double s = w[d];
            for (std::size_t j = 0; j < d; ++j) s += w[j] * row[j];
            z[c] = s;
        }
        const double zmax = *std::max_element(z.begin(), z.end());
        double norm = 0.0;
        for (double& v : z) {
            v = std::exp(v - zmax);
            norm += v;
        }
        const auto yi = static_cast<std::size_t>(y[i]);
        loss -= std::log(z[yi] / norm);
        for (std::size_t c = 0; c < k; ++c) {
            const double residual = z[c] / norm - (c == yi ? 1.0 : 0.0);
            double* g = gradient.data() + c * stride;
            for (std::size_t j = 0; j < d; ++j) g[j] += residual * row[j];
            g[d] += residual;
        }
    }
    const double n = static_cast<double>(x.rows());
    loss /= n;
    for (double& g : gradient) g /= n;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            const double w = weights[c * stride + j];
            loss += 0.5 * l2 * w * w;
            gradient[c * stride + j] += l2 * w;
        }
    }
    return loss;
}

namespace {

struct LogisticImpl final : TrainedModel::Impl {
    std::vector<double> weights;

    void score_row(std::span<const double> x, std::span<double> out) const override {
        const std::size_t d = n_features;
        for (std::size_t c = 0; c < out.size(); ++c) {
            const double* w = weights.data() + c * (d + 1);
            double s = w[d];
            for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j];
            out[c] = s;
        }
        const double zmax = *std::max_element(out.begin(), out.end());
        double norm = 0.0;
        for (double& v : out) {
            v = std::exp(v - zmax);
            norm += v;
        }
        for (double& v : out) v /= norm;
    }
};

struct TreeImpl final : TrainedModel::Impl {
    CartTree tree;

    explicit TreeImpl(CartTree t) : tree(std::move(t)) {}

    void score_row(std::span<const double> x, std::span<double> out) const override {
        const auto dist = tree.leaf_distribution(tree.leaf_of(x));
        std::copy(dist.begin(), dist.end(), out.begin());
    }
};

struct ForestImpl final : TrainedModel::Impl {
    std::vector<CartTree> trees;

    void score_row(std::span<const double> x, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
        for (const auto& t : trees) {
            const auto dist = t.leaf_distribution(t.leaf_of(x));
            const auto vote = std::max_element(dist.begin(), dist.end()) - dist.begin();
            out[static_cast<std::size_t>(vote)] += 1.0;
        }
        for (double& v : out) v /= static_cast<double>(trees.size());
    }
};

struct SvmImpl final : TrainedModel::Impl {
    // One weight vector (d coefficients, bias) per machine. Two classes use a
    // single machine for class 1.
    std::vector<std::vector<double>> machines;

    double margin(std::size_t m, std::span<const double> x) const {
        const auto& w = machines[m];
        double s = w[n_features];
        for (std::size_t j = 0; j < n_features; ++j) s += w[j] * x[j];
        return s;
    }

    void score_row(std::span<const double> x, std::span<double> out) const override {
        if (machines.size() == 1) {
            const double m = margin(0, x);
            out[0] = -m;
            out[1] = m;
            return;
        }
        for (std::size_t c = 0; c < machines.size(); ++c) out[c] = margin(c, x);
    }
};

struct Booster {
    double base = 0.0;
    std::vector<CartTree> trees;
    std::vector<std::vector<double>> leaf_values;  // already scaled by the shrinkage

    double raw(std::span<const double> x) const {
        double f = base;
        for (std::size_t t = 0; t < trees.size(); ++t) f += leaf_values[t][trees[t].leaf_of(x)];
        return f;
    }
};

struct GbtImpl final : TrainedModel::Impl {
    std::vector<Booster> boosters;  // one for two classes (class 1), else one per class

    void score_row(std::span<const double> x, std::span<double> out) const override {
        if (boosters.size() == 1) {
            const double p = sigmoid(boosters[0].raw(x));
            out[0] = 1.0 - p;
            out[1] = p;
            return;
        }
        double total = 0.0;
        for (std::size_t c = 0; c < boosters.size(); ++c) {
            out[c] = sigmoid(boosters[c].raw(x));
            total += out[c];
        }
        for (double& v : out) v /= total;
    }
};

double binary_log_loss(std::span<const double> raw, std::span<const double> target) {
    double loss = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // log(1 + e^-z) for y=1 and log(1 + e^z) for y=0, computed stably
        const double z = target[i] > 0.5 ? raw[i] : -raw[i];
        loss += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
    return loss / static_cast<double>(raw.size());
}

Booster fit_booster(const TreeFeatures& features, std::span<const double> target, const FitConfig& cfg,
                    std::vector<double>& history) {
    const std::size_t n = target.size();
    Booster b;
    const double prior = std::clamp(std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n), 1e-6, 1 - 1e-6);
    b.base = std::log(prior / (1.0 - prior));
    std::vector<double> raw(n, b.base);
    std::vector<double> residual(n);
    std::vector<double> hess(n);
    history.push_back(binary_log_loss(raw, target));
    const TreeParams params{cfg.max_depth, std::max<std::size_t>(cfg.min_leaf, 1), 2};
    for (std::size_t round = 0; round < cfg.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(raw[i]);
            residual[i] = target[i] - p;
            hess[i] = p * (1.0 - p);
        }
        CartTree tree = CartTree::fit_regression(features, residual, params);
        std::vector<double> values(tree.n_leaves(), 0.0);
        for (std::size_t leaf = 0; leaf < tree.n_leaves(); ++leaf) {
            double g = 0.0;
            double h = 0.0;
            for (std::size_t r : tree.leaf_rows(leaf)) {
                g += residual[r];
                h += hess[r];
            }
            values[leaf] = cfg.learning_rate * g / std::max(h, 1e-12);
            for (std::size_t r : tree.leaf_rows(leaf)) raw[r] += values[leaf];
        }
        b.trees.push_back(std::move(tree));
        b.leaf_values.push_back(std::move(values));
        history.push_back(binary_log_loss(raw, target));
    }
    return b;
}

std::vector<double> pegasos(const Matrix& x, std::span<const double> sign, const FitConfig& cfg, std::uint64_t seed) {
    const std::size_t d = x.cols();
    const double lambda = cfg.l2_penalty > 0.0 ? cfg.l2_penalty : 1e-3;
    std::vector<double> w(d + 1, 0.0);
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const auto row = x.row(i);
            double m = w[d];
            for (std::size_t j = 0; j < d; ++j) m += w[j] * row[j];
            const double decay = 1.0 - eta * lambda;
            for (double& v : w) v *= decay;
            if (sign[i] * m < 1.0) {
                for (std::size_t j = 0; j < d; ++j) w[j] += eta * sign[i] * row[j];
                w[d] += eta * sign[i];
            }
        }
    }
    return w;
}

std::vector<std::size_t> forest_features(std::size_t d, const FitConfig& cfg, Rng& rng) {
    std::size_t count = cfg.feature_fraction > 0.0
                            ? static_cast<std::size_t>(std::lround(cfg.feature_fraction * static_cast<double>(d)))
                            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    count = std::clamp<std::size_t>(count, 1, d);
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (count == d) return all;
    for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.index(d - i)]);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

TrainedModel train_classifier(const Matrix& x, std::span<const int> y, const FitConfig& cfg, int n_classes) {
    if (x.rows() != y.size()) throw PreconditionError("feature rows and labels differ in length");
    if (x.rows() == 0) throw PreconditionError("cannot train on an empty matrix");
    for (double v : x.data()) {
        if (!std::isfinite(v)) throw PreconditionError("non-finite feature value");
    }
    const int max_label = *std::max_element(y.begin(), y.end());
    if (*std::min_element(y.begin(), y.end()) < 0) throw PreconditionError("negative class label");
    if (n_classes == 0) n_classes = max_label + 1;
    if (max_label >= n_classes) throw PreconditionError("class label exceeds n_classes");
    if (std::set<int>(y.begin(), y.end()).size() < 2) throw DegenerateError("training labels hold a single class");

    const std::size_t d = x.cols();
    const auto k = static_cast<std::size_t>(n_classes);
    auto fill = [&](TrainedModel::Impl& impl) {
        impl.kind = cfg.kind;
        impl.n_features = d;
        impl.n_classes = n_classes;
    };

    switch (cfg.kind) {
    case ClassifierKind::Logistic: {
        auto impl = std::make_shared<LogisticImpl>();
        fill(*impl);
        impl->weights.assign(k * (d + 1), 0.0);
        std::vector<double> grad(impl->weights.size());
        for (std::size_t epoch = 0; epoch < cfg.n_epochs; ++epoch) {
            logistic_objective(x, y, n_classes, impl->weights, cfg.l2_penalty, grad);
            for (std::size_t i = 0; i < grad.size(); ++i) impl->weights[i] -= cfg.learning_rate * grad[i];
        }
        return TrainedModel(impl);
    }
    case ClassifierKind::CartTree: {
        const auto features = TreeFeatures::all_numeric(x);
        const TreeParams params{cfg.max_depth, std::max<std::size_t>(cfg.min_leaf, 1), 2};
        auto impl = std::make_shared<TreeImpl>(CartTree::fit_classification(features, y, n_classes, params));
        fill(*impl);
        return TrainedModel(impl);
    }
    case ClassifierKind::RandomForest: {
        const auto features = TreeFeatures::all_numeric(x);
        const TreeParams params{cfg.max_depth, std::max<std::size_t>(cfg.min_leaf, 1), 2};
        auto impl = std::make_shared<ForestImpl>();
        fill(*impl);
        const std::size_t n_trees = std::max<std::size_t>(cfg.n_trees, 1);
        for (std::size_t t = 0; t < n_trees; ++t) {
            Rng rng(derive_seed(cfg.seed, {seed_tag::tree, t}));
            std::vector<std::size_t> rows(x.rows());
            if (cfg.bootstrap) {
                for (auto& r : rows) r = rng.index(x.rows());
            } else {
                std::iota(rows.begin(), rows.end(), 0);
            }
            const auto subset = forest_features(d, cfg, rng);
            impl->trees.push_back(CartTree::fit_classification(features, y, n_classes, params, rows, subset));
        }
        return TrainedModel(impl);
    }
    case ClassifierKind::LinearSvm: {
        auto impl = std::make_shared<SvmImpl>();
        fill(*impl);
        const std::size_t machines = k == 2 ? 1 : k;
        std::vector<double> sign(x.rows());
        for (std::size_t m = 0; m < machines; ++m) {
            const int positive = k == 2 ? 1 : static_cast<int>(m);
            for (std::size_t i = 0; i < x.rows(); ++i) sign[i] = y[i] == positive ? 1.0 : -1.0;
            impl->machines.push_back(pegasos(x, sign, cfg, derive_seed(cfg.seed, {seed_tag::classifier, m})));
        }
        return TrainedModel(impl);
    }
    case ClassifierKind::GradientBoostedTrees: {
        auto impl = std::make_shared<GbtImpl>();
        fill(*impl);
        const auto features = TreeFeatures::all_numeric(x);
        const std::size_t boosters = k == 2 ? 1 : k;
        std::vector<std::vector<double>> histories;
        std::vector<double> target(x.rows());
        for (std::size_t b = 0; b < boosters; ++b) {
            const int positive = k == 2 ? 1 : static_cast<int>(b);
            for (std::size_t i = 0; i < x.rows(); ++i) target[i] = y[i] == positive ? 1.0 : 0.0;
            histories.emplace_back();
            impl->boosters.push_back(fit_booster(features, target, cfg, histories.back()));
        }
        impl->history.assign(histories.front().size(), 0.0);
        for (const auto& h : histories) {
            for (std::size_t i = 0; i < h.size(); ++i) impl->history[i] += h[i] / static_cast<double>(boosters);
        }
        return TrainedModel(impl);
    }
    }
    throw UnsupportedError("unknown classifier kind");
}

double accuracy(const TrainedModel& model, const Matrix& x, std::span<const int> y) {
    if (x.rows() != y.size()) throw PreconditionError("feature rows and labels differ in length");
    if (y.empty()) throw PreconditionError("accuracy of an empty sample is undefined");
    const auto predicted = model.predict_labels(x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += predicted[i] == y[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace synthval
