#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "synthval/matrix.hpp"
#include "synthval/table.hpp"

namespace synthval {

enum class FeatureKind { Numeric, Categorical };

// Predictor matrix for tree fitting. Numeric features hold raw values,
// categorical features hold non-negative level codes; NaN marks a missing
// cell in either kind.
struct TreeFeatures {
    Matrix values;
    std::vector<FeatureKind> kinds;

    static TreeFeatures all_numeric(Matrix m);
    // Selected columns of a table, in the given order.
    static TreeFeatures from_table(const Table& t, std::span<const std::size_t> columns);
};

struct TreeParams {
    int max_depth = 30;
    std::size_t min_leaf = 1;   // minimum rows in each child of a split
    std::size_t min_split = 2;  // minimum rows in a node considered for splitting
};

// Greedy binary CART. Classification uses Gini impurity, regression uses the
// sum of squared errors. Numeric splits are `x <= threshold`; categorical
// splits send a subset of levels left, found by ordering the node's levels by
// their mean target (regression), class-1 share (two classes) or
// majority-class share (more classes) and scanning prefixes. Missing
// predictor values are routed to whichever side scores better during the
// search; at prediction time unseen levels and unplaced missing values follow
// the larger child.
//
// Every leaf remembers the training rows that reached it, which is what the
// leaf-sampling imputer and the sequential generator draw from.
class CartTree {
public:
    // `rows` selects training rows of X (repeats allowed, as in bootstrap
    // samples); empty means all rows. `features` restricts the candidate
    // split features; empty means all.
    static CartTree fit_classification(const TreeFeatures& x, std::span<const int> y, int n_classes,
                                       const TreeParams& params, std::span<const std::size_t> rows = {},
                                       std::span<const std::size_t> features = {});
    static CartTree fit_regression(const TreeFeatures& x, std::span<const double> y, const TreeParams& params,
                                   std::span<const std::size_t> rows = {}, std::span<const std::size_t> features = {});

    std::size_t leaf_of(std::span<const double> x) const;

    std::size_t n_leaves() const { return leaves_.size(); }
    std::size_t n_nodes() const { return nodes_.size(); }
    int depth() const { return depth_; }
    bool is_classifier() const { return n_classes_ > 0; }
    int n_classes() const { return n_classes_; }

    // Training rows routed to the leaf, in ascending row order.
    const std::vector<std::size_t>& leaf_rows(std::size_t leaf) const { return leaves_[leaf].rows; }
    // Class fractions of the leaf (classification trees).
    std::span<const double> leaf_distribution(std::size_t leaf) const { return leaves_[leaf].distribution; }
    // Mean target of the leaf (regression trees).
    double leaf_mean(std::size_t leaf) const { return leaves_[leaf].mean; }

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::vector<signed char> routes;  // categorical: 0 unseen, 1 left, 2 right
        bool missing_left = false;
        bool fallback_left = false;  // larger child, for unseen levels
        int left = -1;
        int right = -1;
        int leaf = -1;
    };
    struct Leaf {
        std::vector<std::size_t> rows;
        std::vector<double> distribution;
        double mean = 0.0;
    };

    friend class CartBuilder;

    std::vector<Node> nodes_;
    std::vector<Leaf> leaves_;
    int n_classes_ = 0;
    int depth_ = 0;
};

}  // namespace synthval
