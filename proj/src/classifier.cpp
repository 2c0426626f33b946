#include "radiomics/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "radiomics/error.hpp"
#include "radiomics/parallel.hpp"

namespace radiomics {

namespace {

constexpr std::uint64_t kFoldStride = 10007;
constexpr double kImpurityEps = 1e-12;

// Unbiased draw from [0, n) that does not depend on the standard library's
// distribution implementation.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r < limit) return static_cast<std::size_t>(r % bound);
    }
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

double gini(double c0, double c1) {
    const double n = c0 + c1;
    if (n <= 0) return 0.0;
    const double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

class TreeGrower {
public:
    TreeGrower(const Dataset& data, int min_leaf, int mtry, std::uint64_t seed)
        : data_(data), min_leaf_(min_leaf), mtry_(mtry), rng_(seed) {}

    Tree grow() {
        const std::size_t n = data_.size();
        std::vector<std::size_t> bag(n);
        std::vector<char> in_bag(n, 0);
        for (auto& b : bag) {
            b = uniform_index(rng_, n);
            in_bag[b] = 1;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!in_bag[i]) tree_.out_of_bag.push_back(i);
        tree_.nodes.emplace_back();
        split(0, std::move(bag));
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double impurity = std::numeric_limits<double>::infinity();
    };

    void split(int node, std::vector<std::size_t> rows) {
        double c1 = 0;
        for (auto r : rows) c1 += data_.labels[r];
        const double c0 = static_cast<double>(rows.size()) - c1;
        tree_.nodes[node].rows = static_cast<int>(rows.size());
        tree_.nodes[node].p1 = c1 / static_cast<double>(rows.size());

        if (c0 == 0 || c1 == 0 || rows.size() < 2 * static_cast<std::size_t>(min_leaf_)) return;
        const Split best = best_split(rows, gini(c0, c1));
        if (best.feature < 0) return;

        std::vector<std::size_t> left, right;
        for (auto r : rows) (data_.rows[r][best.feature] <= best.threshold ? left : right).push_back(r);
        rows = {};
        const int l = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const int r = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes[node].feature = best.feature;
        tree_.nodes[node].threshold = best.threshold;
        tree_.nodes[node].left = l;
        tree_.nodes[node].right = r;
        split(l, std::move(left));
        split(r, std::move(right));
    }

    Split best_split(const std::vector<std::size_t>& rows, double parent) {
        const std::size_t d = data_.dims();
        std::vector<int> candidates(d);
        std::iota(candidates.begin(), candidates.end(), 0);
        const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(mtry_), d);
        for (std::size_t i = 0; i < m; ++i) std::swap(candidates[i], candidates[i + uniform_index(rng_, d - i)]);
        candidates.resize(m);
        std::sort(candidates.begin(), candidates.end());

        const std::size_t n = rows.size();
        const double total1 = [&] {
            double s = 0;
            for (auto r : rows) s += data_.labels[r];
            return s;
        }();
        Split best;
        std::vector<std::pair<double, int>> column(n);
        for (int f : candidates) {
            for (std::size_t i = 0; i < n; ++i) column[i] = {data_.rows[rows[i]][f], data_.labels[rows[i]]};
            std::sort(column.begin(), column.end());
            double left1 = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left1 += column[i].second;
                if (column[i].first == column[i + 1].first) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < static_cast<std::size_t>(min_leaf_) || nr < static_cast<std::size_t>(min_leaf_)) continue;
                const double right1 = total1 - left1;
                const double impurity =
                    (static_cast<double>(nl) * gini(static_cast<double>(nl) - left1, left1) +
                     static_cast<double>(nr) * gini(static_cast<double>(nr) - right1, right1)) /
                    static_cast<double>(n);
                if (impurity < best.impurity - kImpurityEps) {
                    const double a = column[i].first, b = column[i + 1].first;
                    double threshold = a + (b - a) / 2;
                    if (!(threshold < b)) threshold = a;
                    best = {f, threshold, impurity};
                }
            }
        }
        if (best.feature >= 0 && !(best.impurity < parent - kImpurityEps)) return {};
        return best;
    }

    const Dataset& data_;
    int min_leaf_;
    int mtry_;
    std::mt19937_64 rng_;
    Tree tree_;
};

std::vector<ScoredLabel> scored_of(const std::vector<PatientScore>& s) {
    std::vector<ScoredLabel> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(), [](const PatientScore& p) { return ScoredLabel{p.score, p.label}; });
    return out;
}

bool both_classes(std::span<const ScoredLabel> s) {
    bool pos = false, neg = false;
    for (const auto& x : s) (x.label ? pos : neg) = true;
    return pos && neg;
}

struct InnerSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// 80/20 per class, each class shuffled with the fold's generator.
InnerSplit stratified_split(const Dataset& data, const std::vector<std::size_t>& pool, std::mt19937_64& rng) {
    InnerSplit out;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (auto i : pool)
            if (data.labels[i] == cls) members.push_back(i);
        shuffle(members, rng);
        std::size_t n_val = 0;
        if (members.size() >= 2)
            n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(members.size()))), 1,
                                            members.size() - 1);
        out.validation.insert(out.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
        out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

std::vector<std::string> ids_of(const Dataset& data, const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(data.ids[i]);
    return out;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_names = feature_names;
    for (auto i : indices) {
        out.ids.push_back(ids.at(i));
        out.rows.push_back(rows.at(i));
        out.labels.push_back(labels.at(i));
    }
    return out;
}

void Dataset::validate() const {
    if (ids.size() != rows.size() || labels.size() != rows.size())
        throw Error(ErrorCode::LengthMismatch, "dataset ids, rows and labels differ in length");
    for (const auto& r : rows)
        if (r.size() != dims()) throw Error(ErrorCode::DimMismatch, "dataset rows differ in width");
    for (int l : labels)
        if (l != 0 && l != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
}

bool Dataset::has_both_classes() const {
    const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
    return has0 && has1;
}

int Tree::leaf_for(std::span<const double> row) const {
    int node = 0;
    while (!nodes[node].leaf()) node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left : nodes[node].right;
    return node;
}

double Tree::vote(std::span<const double> row) const {
    const double p1 = nodes[leaf_for(row)].p1;
    return p1 > 0.5 ? 1.0 : (p1 < 0.5 ? 0.0 : 0.5);
}

RfModel rf_train(const Dataset& train, const Hyperparams& hp, std::uint64_t seed) {
    if (train.size() == 0) throw Error(ErrorCode::EmptyTraining, "no training rows");
    train.validate();
    if (!train.has_both_classes()) throw Error(ErrorCode::SingleClassTraining, "training labels contain one class");
    if (train.dims() == 0) throw Error(ErrorCode::DimMismatch, "training rows have no features");
    if (hp.n_trees < 1 || hp.min_leaf < 1) throw Error(ErrorCode::InvalidArgument, "n_trees and min_leaf must be >= 1");

    RfModel model;
    model.hyperparams = hp;
    model.seed = seed;
    model.dims = train.dims();
    const int mtry = hp.mtry > 0 ? hp.mtry
                                 : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(train.dims())))));
    model.hyperparams.mtry = mtry;
    model.trees.reserve(static_cast<std::size_t>(hp.n_trees));
    for (int t = 0; t < hp.n_trees; ++t)
        model.trees.push_back(TreeGrower(train, hp.min_leaf, mtry, seed + static_cast<std::uint64_t>(t)).grow());
    return model;
}

double rf_predict(const RfModel& model, std::span<const double> row) {
    if (row.size() != model.dims)
        throw Error(ErrorCode::DimMismatch,
                    "row has " + std::to_string(row.size()) + " features, model expects " + std::to_string(model.dims));
    double votes = 0.0;
    for (const auto& t : model.trees) votes += t.vote(row);
    return votes / static_cast<double>(model.trees.size());
}

std::vector<double> rf_oob_scores(const RfModel& model, const Dataset& train) {
    std::vector<double> votes(train.size(), 0.0), counts(train.size(), 0.0);
    for (const auto& t : model.trees)
        for (auto i : t.out_of_bag) {
            votes[i] += t.vote(train.rows[i]);
            counts[i] += 1.0;
        }
    std::vector<double> out(train.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = counts[i] > 0 ? votes[i] / counts[i] : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double compute_auc(std::span<const ScoredLabel> scored) {
    if (!both_classes(scored)) throw Error(ErrorCode::SingleClass, "AUC needs both labels");
    std::vector<ScoredLabel> s(scored.begin(), scored.end());
    std::sort(s.begin(), s.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
    // Walk tie groups in ascending score; each positive beats every negative
    // strictly below it and splits the tie group.
    double wins = 0.0, negatives_below = 0.0, positives = 0.0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        double pos = 0, neg = 0;
        for (; j < s.size() && s[j].score == s[i].score; ++j) (s[j].label ? pos : neg) += 1;
        wins += pos * negatives_below + 0.5 * pos * neg;
        negatives_below += neg;
        positives += pos;
        i = j;
    }
    return wins / (positives * negatives_below);
}

Confusion confusion_matrix(std::span<const ScoredLabel> scored, double threshold) {
    Confusion c;
    for (const auto& s : scored) {
        const bool predicted = s.score >= threshold;
        if (s.label)
            (predicted ? c.tp : c.fn) += 1;
        else
            (predicted ? c.fp : c.tn) += 1;
    }
    return c;
}

std::vector<RocPoint> roc_curve(std::span<const ScoredLabel> scored) {
    std::vector<ScoredLabel> s(scored.begin(), scored.end());
    std::sort(s.begin(), s.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
    double p = 0, n = 0;
    for (const auto& x : s) (x.label ? p : n) += 1;
    std::vector<RocPoint> out{{0.0, 0.0}};
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size();) {
        std::size_t j = i;
        for (; j < s.size() && s[j].score == s[i].score; ++j) (s[j].label ? tp : fp) += 1;
        out.push_back({n > 0 ? fp / n : 0.0, p > 0 ? tp / p : 0.0});
        i = j;
    }
    return out;
}

EvalReport loocv(const Dataset& data, const HyperparamGrid& grid, std::uint64_t seed) {
    data.validate();
    if (data.size() < 3) throw Error(ErrorCode::TooFewRows, "LOOCV needs at least 3 rows");
    if (!data.has_both_classes()) throw Error(ErrorCode::SingleClass, "LOOCV needs both classes");
    if (grid.n_trees.empty() || grid.min_leaf.empty()) throw Error(ErrorCode::InvalidArgument, "empty hyperparameter grid");

    std::vector<int> tree_counts = grid.n_trees;
    std::sort(tree_counts.begin(), tree_counts.end());
    tree_counts.erase(std::unique(tree_counts.begin(), tree_counts.end()), tree_counts.end());
    std::vector<int> leaf_sizes = grid.min_leaf;
    std::sort(leaf_sizes.begin(), leaf_sizes.end(), std::greater<>());
    leaf_sizes.erase(std::unique(leaf_sizes.begin(), leaf_sizes.end()), leaf_sizes.end());

    const std::size_t n = data.size();
    EvalReport report;
    report.scores.resize(n);
    report.folds.resize(n);

    parallel_for(n, [&](std::size_t held) {
        const std::uint64_t fold_seed = seed + held * kFoldStride;
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i)
            if (i != held) rest.push_back(i);

        std::mt19937_64 rng(fold_seed);
        const InnerSplit inner = stratified_split(data, rest, rng);
        const Dataset inner_train = data.subset(inner.train);
        const Dataset validation = data.subset(inner.validation);

        // Candidates visited in preference order (fewer trees, then larger
        // min_leaf); only a strictly better AUC displaces the incumbent.
        Hyperparams chosen{tree_counts.front(), leaf_sizes.front(), 0};
        double chosen_auc = -1.0;
        const bool trainable = inner_train.size() >= 2 && inner_train.has_both_classes();
        std::vector<std::vector<double>> auc_table(tree_counts.size(), std::vector<double>(leaf_sizes.size(), 0.5));
        if (trainable && validation.has_both_classes()) {
            for (std::size_t li = 0; li < leaf_sizes.size(); ++li) {
                const RfModel forest = rf_train(inner_train, {tree_counts.back(), leaf_sizes[li], 0}, fold_seed);
                std::vector<double> votes(validation.size(), 0.0);
                std::size_t grown = 0;
                for (std::size_t ti = 0; ti < tree_counts.size(); ++ti) {
                    for (; grown < static_cast<std::size_t>(tree_counts[ti]); ++grown)
                        for (std::size_t v = 0; v < validation.size(); ++v)
                            votes[v] += forest.trees[grown].vote(validation.rows[v]);
                    std::vector<ScoredLabel> s(validation.size());
                    for (std::size_t v = 0; v < validation.size(); ++v)
                        s[v] = {votes[v] / static_cast<double>(grown), validation.labels[v]};
                    auc_table[ti][li] = compute_auc(s);
                }
            }
        }
        for (std::size_t ti = 0; ti < tree_counts.size(); ++ti)
            for (std::size_t li = 0; li < leaf_sizes.size(); ++li)
                if (auc_table[ti][li] > chosen_auc) {
                    chosen_auc = auc_table[ti][li];
                    chosen = {tree_counts[ti], leaf_sizes[li], 0};
                }

        const Dataset fold_train = data.subset(rest);
        double score;
        if (fold_train.has_both_classes()) {
            const RfModel final_model = rf_train(fold_train, chosen, fold_seed);
            score = rf_predict(final_model, data.rows[held]);
            chosen = final_model.hyperparams;
        } else {
            // Every tree would be a single pure leaf.
            score = static_cast<double>(fold_train.labels.front());
        }
        report.scores[held] = {data.ids[held], score, data.labels[held]};
        report.folds[held] = {data.ids[held], ids_of(data, inner.train), ids_of(data, inner.validation), chosen,
                              chosen_auc};
    });

    const auto scored = scored_of(report.scores);
    report.auc = compute_auc(scored);
    report.confusion = confusion_matrix(scored, 0.5);
    report.accuracy = report.confusion.accuracy();
    return report;
}

}  // namespace radiomics
