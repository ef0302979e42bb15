#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthval/matrix.hpp"

namespace synthval {

enum class ClassifierKind { Logistic, CartTree, RandomForest, LinearSvm, GradientBoostedTrees };

// Short names: "lr", "dt", "rf", "svm", "gbt".
std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view text);

// Training settings. Every field has a fixed per-kind default (see
// FitConfig::defaults); fields a kind does not use are ignored by it.
struct FitConfig {
    ClassifierKind kind = ClassifierKind::GradientBoostedTrees;
    std::uint64_t seed = 0;
    int max_depth = 3;
    std::size_t min_leaf = 1;
    std::size_t n_trees = 100;       // forest size or boosting rounds
    double learning_rate = 0.1;      // gradient step (logistic) or shrinkage (boosting)
    double l2_penalty = 0.0;         // weight decay (logistic, svm)
    std::size_t n_epochs = 0;        // passes over the data (logistic, svm)
    double feature_fraction = 0.0;   // per-tree feature share (forest); 0 means ceil(sqrt(d)) features
    bool bootstrap = true;           // forest row resampling

    // Logistic:    500 full-batch epochs, step 0.5, l2 1e-3
    // CartTree:    depth 30, min leaf 1
    // RandomForest 100 trees, depth 30, min leaf 1, ceil(sqrt(d)) features per tree, bootstrap
    // LinearSvm:   50 Pegasos epochs, lambda 1e-3
    // GBT:         100 rounds, depth 3, shrinkage 0.1
    static FitConfig defaults(ClassifierKind kind, std::uint64_t seed = 0);

    nlohmann::json to_json() const;
    static FitConfig from_json(const nlohmann::json& j);
};

// Fitted classifier; immutable and cheap to copy (shared state).
class TrainedModel {
public:
    struct Impl;

    ClassifierKind kind() const;
    std::size_t n_features() const;
    int n_classes() const;

    // Class scores per row: probabilities for every kind except LinearSvm,
    // whose scores are one-vs-rest margins.
    Matrix decision_scores(const Matrix& x) const;
    // Argmax of decision_scores; ties go to the lowest class index.
    std::vector<int> predict_labels(const Matrix& x) const;
    // Throws UnsupportedError for LinearSvm.
    Matrix predict_proba(const Matrix& x) const;

    // Boosting only: mean training log-loss before round 1 and after every
    // round. Empty for other kinds.
    const std::vector<double>& training_loss_history() const;

    explicit TrainedModel(std::shared_ptr<const Impl> impl);

private:
    std::shared_ptr<const Impl> impl_;
};

// Labels are class indices in [0, n_classes). n_classes = 0 infers max(y)+1.
// Throws DegenerateError when y holds fewer than two distinct labels and
// PreconditionError on non-finite features or size mismatch.
TrainedModel train_classifier(const Matrix& x, std::span<const int> y, const FitConfig& cfg, int n_classes = 0);

// Fraction of rows where predict_labels matches y.
double accuracy(const TrainedModel& model, const Matrix& x, std::span<const int> y);

double sigmoid(double z);

// Multinomial logistic objective
//   (1/n) sum_i -log softmax(W x_i + b)[y_i] + (l2/2) ||W||^2   (bias unpenalized)
// with weights laid out as n_classes rows of (d coefficients, bias).
// Writes the analytic gradient into `gradient` (same layout) and returns the objective.
double logistic_objective(const Matrix& x, std::span<const int> y, int n_classes, std::span<const double> weights,
                          double l2, std::span<double> gradient);

}  // namespace synthval
