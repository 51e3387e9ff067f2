#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace popgrid {

// Gradient-boosted regression trees under squared error, built from scratch:
// exact greedy variance-reduction splits over all (feature, midpoint)
// candidates, mean-residual leaves, shrinkage. Fully deterministic: split
// ties break toward (lower feature index, lower threshold) and row order is
// canonicalized, so permuting training rows cannot change the model.

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    int depth() const;
    bool operator==(const RegressionTree&) const = default;
};

struct GBRTConfig {
    int n_rounds = 100;
    int max_depth = 3;
    double shrinkage = 0.1;
    bool log_target = false;  // fit on log1p(y), invert with expm1
};

struct GBRTModel {
    double base_score = 0.0;
    double shrinkage = 0.1;
    bool log_target = false;
    int n_features = 0;
    std::vector<RegressionTree> trees;
    std::vector<double> train_mse;  // internal-scale MSE after each round

    // base + shrinkage * sum of trees, back-transformed, clamped >= 0
    // (populations are nonnegative).
    double predict(std::span<const double> x) const;
    // Internal-scale partial prediction after `rounds` trees, no clamp; this
    // is the quantity whose training MSE is nonincreasing by construction.
    double predict_internal(std::span<const double> x, int rounds) const;

    bool operator==(const GBRTModel&) const = default;
};

// features: n x d row-major. Throws DataError on empty or non-finite input.
GBRTModel gbrt_fit(std::span<const double> features, int n, int d,
                   std::span<const double> targets, const GBRTConfig& cfg);

// JSON codec (auditable model dump); round-trips exactly.
void save_gbrt_json(const std::filesystem::path& path, const GBRTModel& model);
GBRTModel load_gbrt_json(const std::filesystem::path& path);

}  // namespace popgrid
