#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chda/field.hpp"
#include "chda/rng.hpp"

namespace chda::proxy {

enum class Kind { Linear, RandomForest, GradientBoosting };

std::string kind_name(Kind k);
Kind kind_from_name(const std::string& name);

/// Pinned tree hyperparameters (the library defaults frozen to numbers).
struct ForestConfig {
    int n_trees = 100;
    int max_depth = -1;  // unlimited
    int min_leaf = 2;
    bool bootstrap = true;
    int mtry = 0;  // 0 = floor(sqrt(n_features))
};

struct GbtConfig {
    int n_rounds = 100;
    int max_depth = 6;
    double learning_rate = 0.3;
    int min_leaf = 1;
    double reg_lambda = 1.0;  // L2 on leaf values, the booster-library default
};

struct FitConfig {
    Kind kind = Kind::Linear;
    double ridge_lambda = 1e-8;
    double validation_fraction = 0.2;
    ForestConfig forest;
    GbtConfig gbt;
};

struct ValidationReport {
    double rmse_total = 0.0;
    std::vector<double> rmse_per_output;
    double fit_seconds = 0.0;
};

/// Axis-aligned regression tree stored as a flat node array.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Fast surrogate f: z -> d fitted per output component (trees) or jointly
/// (linear ridge via the dual normal equations). Fitting uses a seeded
/// 80/20 train-validation split; the validation RMSE per output is kept.
/// Tree-ensemble predictions are clamped to the training-target range per
/// output, making the no-extrapolation property structural.
class ProxyModel {
public:
    static ProxyModel fit(const FitConfig& cfg, const Eigen::MatrixXd& X, const Eigen::MatrixXd& D,
                          RngStream& rng);

    Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    Eigen::VectorXd predict(const LogPermField& z) const;
    Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& Z) const;

    Kind kind() const { return kind_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t n_outputs() const { return n_outputs_; }
    const ValidationReport& validation_report() const { return report_; }
    std::uint64_t split_seed() const { return split_seed_; }
    const std::vector<int>& train_rows() const { return train_rows_; }
    const std::vector<int>& validation_rows() const { return validation_rows_; }

    void save(const std::filesystem::path& path) const;
    static ProxyModel load(const std::filesystem::path& path);

private:
    Kind kind_ = Kind::Linear;
    std::size_t n_features_ = 0;
    std::size_t n_outputs_ = 0;
    std::uint64_t split_seed_ = 0;
    std::vector<int> train_rows_;
    std::vector<int> validation_rows_;
    ValidationReport report_;

    // linear state
    Eigen::VectorXd x_mean_;
    Eigen::VectorXd y_mean_;
    Eigen::MatrixXd weights_;  // n_features x n_outputs

    // tree state: per output, an ensemble of trees plus target bounds
    std::vector<std::vector<Tree>> trees_;
    Eigen::VectorXd target_lo_, target_hi_;
    Eigen::VectorXd gbt_base_;
    double gbt_lr_ = 0.0;
};

}  // namespace chda::proxy
