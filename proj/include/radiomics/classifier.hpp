#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace radiomics {

struct Dataset {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // 0 or 1
    std::vector<std::string> feature_names;

    std::size_t size() const { return rows.size(); }
    std::size_t dims() const { return rows.empty() ? 0 : rows.front().size(); }
    Dataset subset(std::span<const std::size_t> indices) const;
    /// Row count, equal widths, labels in {0,1} and matching id count.
    void validate() const;
    bool has_both_classes() const;
};

struct Hyperparams {
    int n_trees = 100;
    int min_leaf = 1;
    int mtry = 0;  // 0 selects floor(sqrt(d))

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct HyperparamGrid {
    std::vector<int> n_trees{100, 300, 500};
    std::vector<int> min_leaf{1, 3, 5};
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double p1 = 0.0;  // leaf probability of class 1
    int rows = 0;

    bool leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::vector<std::size_t> out_of_bag;

    int leaf_for(std::span<const double> row) const;
    /// 1 for a class-1 majority leaf, 0 for class 0, 0.5 on a tie.
    double vote(std::span<const double> row) const;
};

struct RfModel {
    std::vector<Tree> trees;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;
    std::size_t dims = 0;
};

/// Tree t is grown from seed + t, so a forest of N trees is always the
/// first N trees of any larger forest trained with the same seed.
RfModel rf_train(const Dataset& train, const Hyperparams& hp, std::uint64_t seed);
double rf_predict(const RfModel& model, std::span<const double> row);
/// Mean vote over trees that did not see the row; NaN if every tree did.
std::vector<double> rf_oob_scores(const RfModel& model, const Dataset& train);

struct ScoredLabel {
    double score = 0.0;
    int label = 0;
};

/// Mann-Whitney AUC, ties count one half.
double compute_auc(std::span<const ScoredLabel> scored);

struct Confusion {
    long tn = 0;
    long fp = 0;
    long fn = 0;
    long tp = 0;

    long total() const { return tn + fp + fn + tp; }
    double accuracy() const { return total() ? static_cast<double>(tn + tp) / static_cast<double>(total()) : 0.0; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// score >= threshold counts as a positive prediction.
Confusion confusion_matrix(std::span<const ScoredLabel> scored, double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

std::vector<RocPoint> roc_curve(std::span<const ScoredLabel> scored);

struct PatientScore {
    std::string id;
    double score = 0.0;
    int label = 0;

    friend bool operator==(const PatientScore&, const PatientScore&) = default;
};

struct FoldRecord {
    std::string held_out;
    std::vector<std::string> inner_train;
    std::vector<std::string> validation;
    Hyperparams chosen;
    double validation_auc = 0.5;
};

struct EvalReport {
    double auc = 0.5;
    double accuracy = 0.0;
    Confusion confusion;
    std::vector<PatientScore> scores;
    std::vector<FoldRecord> folds;
};

/// Leave-one-out with an inner 80/20 stratified split for grid selection.
EvalReport loocv(const Dataset& data, const HyperparamGrid& grid, std::uint64_t seed);

}  // namespace radiomics
