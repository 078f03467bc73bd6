#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <queue>
#include <vector>

#include "loadid/common.hpp"
#include "loadid/scatter.hpp"

namespace loadid {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = -1;
    std::vector<int> histogram;  // training samples routed here, per class

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_splits = 0;
    int class_count = 0;
    int feature_count = 0;

    int internal_node_count() const {
        return static_cast<int>(
            std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
    }
};

namespace tree_detail {

inline double gini(const std::vector<int>& hist, int total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (int h : hist) {
        double p = static_cast<double>(h) / total;
        g -= p * p;
    }
    return g;
}

inline int majority_label(const std::vector<int>& hist) {
    int best = 0;
    for (size_t c = 1; c < hist.size(); ++c)
        if (hist[c] > hist[static_cast<size_t>(best)]) best = static_cast<int>(c);
    return best;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

// Exhaustive greedy search: every feature, every midpoint between adjacent
// distinct sorted values. Ties go to the lower feature index, then the lower
// threshold.
inline SplitChoice best_split(const Matrix& x, const std::vector<int>& y,
                              const std::vector<int>& indices, int class_count) {
    const int n = static_cast<int>(indices.size());
    std::vector<int> node_hist(static_cast<size_t>(class_count), 0);
    for (int i : indices) ++node_hist[static_cast<size_t>(y[static_cast<size_t>(i)])];
    const double node_gini = gini(node_hist, n);

    SplitChoice best;
    if (node_gini <= 0.0) return best;  // pure node
    std::vector<int> order(indices);
    for (int f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            double va = x(a, f), vb = x(b, f);
            return va < vb || (va == vb && a < b);
        });
        std::vector<int> left_hist(static_cast<size_t>(class_count), 0);
        for (int pos = 0; pos + 1 < n; ++pos) {
            ++left_hist[static_cast<size_t>(y[static_cast<size_t>(order[static_cast<size_t>(pos)])])];
            const double v = x(order[static_cast<size_t>(pos)], f);
            const double v_next = x(order[static_cast<size_t>(pos) + 1], f);
            if (v == v_next) continue;
            const int n_left = pos + 1;
            const int n_right = n - n_left;
            std::vector<int> right_hist(static_cast<size_t>(class_count));
            for (int c = 0; c < class_count; ++c)
                right_hist[static_cast<size_t>(c)] =
                    node_hist[static_cast<size_t>(c)] - left_hist[static_cast<size_t>(c)];
            const double weighted = (n_left * gini(left_hist, n_left) +
                                     n_right * gini(right_hist, n_right)) /
                                    n;
            const double decrease = node_gini - weighted;
            const double threshold = v + 0.5 * (v_next - v);
            // an impure node takes the best valid split even at zero gain
            // (a depth-2 XOR needs a zero-gain root split)
            if (!best.found || decrease > best.impurity_decrease + 1e-15) {
                best.found = true;
                best.feature = f;
                best.threshold = threshold;
                best.impurity_decrease = decrease;
            }
        }
    }
    return best;
}

}  // namespace tree_detail

// Greedy CART with best-first node expansion ordered by impurity decrease, so
// max_splits caps the total number of splits rather than the depth.
inline DecisionTree fit_tree(const Matrix& x, const std::vector<int>& y, int max_splits,
                             std::uint64_t /*rng_seed*/ = 0) {
    const long n = x.rows();
    if (n < 1) throw DataError("fit_tree: empty input");
    if (static_cast<long>(y.size()) != n) throw DataError("fit_tree: labels misaligned");
    if (max_splits < 1) throw DataError("fit_tree: max_splits must be >= 1");
    const int c = class_count_of(y);

    DecisionTree tree;
    tree.max_splits = max_splits;
    tree.class_count = c;
    tree.feature_count = static_cast<int>(x.cols());

    struct Pending {
        int node;
        std::vector<int> indices;
        tree_detail::SplitChoice split;
        int order;  // creation order, deterministic tie-break
    };
    auto cmp = [](const Pending& a, const Pending& b) {
        if (a.split.impurity_decrease != b.split.impurity_decrease)
            return a.split.impurity_decrease < b.split.impurity_decrease;
        return a.order > b.order;
    };
    std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> frontier(cmp);
    int created = 0;

    auto make_leaf = [&](std::vector<int> indices) -> int {
        TreeNode node;
        node.histogram.assign(static_cast<size_t>(c), 0);
        for (int i : indices) ++node.histogram[static_cast<size_t>(y[static_cast<size_t>(i)])];
        node.label = tree_detail::majority_label(node.histogram);
        tree.nodes.push_back(std::move(node));
        int id = static_cast<int>(tree.nodes.size()) - 1;
        auto split = tree_detail::best_split(x, y, indices, c);
        if (split.found) frontier.push({id, std::move(indices), split, created++});
        return id;
    };

    std::vector<int> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    make_leaf(std::move(all));

    int splits = 0;
    while (splits < max_splits && !frontier.empty()) {
        Pending p = frontier.top();
        frontier.pop();
        std::vector<int> left_idx, right_idx;
        for (int i : p.indices)
            (x(i, p.split.feature) < p.split.threshold ? left_idx : right_idx).push_back(i);
        tree.nodes[static_cast<size_t>(p.node)].feature = p.split.feature;
        tree.nodes[static_cast<size_t>(p.node)].threshold = p.split.threshold;
        tree.nodes[static_cast<size_t>(p.node)].left = make_leaf(std::move(left_idx));
        tree.nodes[static_cast<size_t>(p.node)].right = make_leaf(std::move(right_idx));
        ++splits;
    }
    return tree;
}

inline int predict_tree_one(const DecisionTree& t, Eigen::Ref<const Eigen::RowVectorXd> row) {
    int node = 0;
    while (!t.nodes[static_cast<size_t>(node)].is_leaf()) {
        const auto& n = t.nodes[static_cast<size_t>(node)];
        node = row(n.feature) < n.threshold ? n.left : n.right;
    }
    return t.nodes[static_cast<size_t>(node)].label;
}

inline std::vector<int> predict_tree(const DecisionTree& t, const Matrix& x) {
    if (static_cast<int>(x.cols()) != t.feature_count)
        throw DataError("predict_tree: feature count mismatch (" + std::to_string(x.cols()) +
                        " vs " + std::to_string(t.feature_count) + ")");
    std::vector<int> out(static_cast<size_t>(x.rows()));
    for (long i = 0; i < x.rows(); ++i) out[static_cast<size_t>(i)] = predict_tree_one(t, x.row(i));
    return out;
}

inline std::vector<int> bootstrap_sample(int n, std::mt19937_64& rng) {
    if (n < 1) throw DataError("bootstrap_sample: n must be >= 1");
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = pick(rng);
    return idx;
}

struct BaggedEnsemble {
    std::vector<DecisionTree> trees;
    std::vector<std::vector<int>> bootstrap_records;
    int n_learners = 0;
    std::uint64_t seed = 0;
    int class_count = 0;
};

inline constexpr int kDefaultLearners = 30;
inline constexpr int kDefaultMaxSplits = 42000;

inline BaggedEnsemble fit_bdt(const Matrix& x, const std::vector<int>& y, int n_learners,
                              int max_splits, std::uint64_t seed) {
    const int n = static_cast<int>(x.rows());
    if (n_learners < 1) throw DataError("fit_bdt: n_learners must be >= 1");
    if (n < 1) throw DataError("fit_bdt: empty input");
    const int splits = std::max(1, std::min(max_splits, n - 1));

    BaggedEnsemble ens;
    ens.n_learners = n_learners;
    ens.seed = seed;
    ens.class_count = class_count_of(y);
    ens.trees.resize(static_cast<size_t>(n_learners));
    ens.bootstrap_records.resize(static_cast<size_t>(n_learners));

    auto fit_one = [&](int t) {
        auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        auto idx = bootstrap_sample(n, rng);
        Matrix xb(n, x.cols());
        std::vector<int> yb(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            xb.row(i) = x.row(idx[static_cast<size_t>(i)]);
            yb[static_cast<size_t>(i)] = y[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        }
        auto tree = fit_tree(xb, yb, splits);
        tree.class_count = ens.class_count;  // bootstrap may miss the top class
        ens.bootstrap_records[static_cast<size_t>(t)] = std::move(idx);
        ens.trees[static_cast<size_t>(t)] = std::move(tree);
    };

    const unsigned workers = std::min<unsigned>(thread_cap(), static_cast<unsigned>(n_learners));
    if (workers <= 1) {
        for (int t = 0; t < n_learners; ++t) fit_one(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::future<void>> jobs;
        for (unsigned w = 0; w < workers; ++w)
            jobs.push_back(std::async(std::launch::async, [&] {
                for (int t = next.fetch_add(1); t < n_learners; t = next.fetch_add(1)) fit_one(t);
            }));
        for (auto& j : jobs) j.get();
    }
    return ens;
}

// Plurality vote; ties resolved toward the lowest class index.
inline std::vector<int> predict_bdt(const BaggedEnsemble& e, const Matrix& x) {
    if (e.trees.empty()) throw DataError("predict_bdt: empty ensemble");
    std::vector<int> out(static_cast<size_t>(x.rows()));
    std::vector<int> votes(static_cast<size_t>(e.class_count));
    for (long i = 0; i < x.rows(); ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& t : e.trees) ++votes[static_cast<size_t>(predict_tree_one(t, x.row(i)))];
        out[static_cast<size_t>(i)] = tree_detail::majority_label(votes);
    }
    return out;
}

// Out-of-bag accuracy: each sample voted on only by trees whose bootstrap
// missed it.
inline double oob_accuracy(const BaggedEnsemble& e, const Matrix& x, const std::vector<int>& y) {
    const long n = x.rows();
    std::vector<std::vector<char>> in_bag(e.trees.size(), std::vector<char>(static_cast<size_t>(n), 0));
    for (size_t t = 0; t < e.trees.size(); ++t)
        for (int i : e.bootstrap_records[t]) in_bag[t][static_cast<size_t>(i)] = 1;
    long scored = 0, correct = 0;
    std::vector<int> votes(static_cast<size_t>(e.class_count));
    for (long i = 0; i < n; ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        int voters = 0;
        for (size_t t = 0; t < e.trees.size(); ++t)
            if (!in_bag[t][static_cast<size_t>(i)]) {
                ++votes[static_cast<size_t>(predict_tree_one(e.trees[t], x.row(i)))];
                ++voters;
            }
        if (voters == 0) continue;
        ++scored;
        if (tree_detail::majority_label(votes) == y[static_cast<size_t>(i)]) ++correct;
    }
    return scored ? static_cast<double>(correct) / scored : 0.0;
}

enum class KnnWeighting { Uniform, InverseDistance };

struct KnnModel {
    Matrix train_x;
    std::vector<int> train_y;
    int k = 1;
    KnnWeighting weighting = KnnWeighting::Uniform;
    int class_count = 0;
};

inline KnnModel fit_knn(const Matrix& x, const std::vector<int>& y, int k,
                        KnnWeighting weighting = KnnWeighting::Uniform) {
    if (k < 1 || k > x.rows())
        throw DataError("knn: k must be in [1, n_train]");
    return KnnModel{x, y, k, weighting, class_count_of(y)};
}

inline std::vector<int> predict_knn(const KnnModel& m, const Matrix& x) {
    if (x.cols() != m.train_x.cols()) throw DataError("predict_knn: feature count mismatch");
    const long n_train = m.train_x.rows();
    std::vector<int> out(static_cast<size_t>(x.rows()));
    std::vector<std::pair<double, int>> dist(static_cast<size_t>(n_train));
    for (long i = 0; i < x.rows(); ++i) {
        for (long j = 0; j < n_train; ++j)
            dist[static_cast<size_t>(j)] = {(x.row(i) - m.train_x.row(j)).norm(),
                                            static_cast<int>(j)};
        std::partial_sort(dist.begin(), dist.begin() + m.k, dist.end());
        std::vector<double> votes(static_cast<size_t>(m.class_count), 0.0);
        for (int j = 0; j < m.k; ++j) {
            const auto& [d, idx] = dist[static_cast<size_t>(j)];
            const double w =
                m.weighting == KnnWeighting::Uniform ? 1.0 : 1.0 / (d + 1e-12);
            votes[static_cast<size_t>(m.train_y[static_cast<size_t>(idx)])] += w;
        }
        int best = 0;
        for (size_t c = 1; c < votes.size(); ++c)
            if (votes[c] > votes[static_cast<size_t>(best)]) best = static_cast<int>(c);
        out[static_cast<size_t>(i)] = best;
    }
    return out;
}

}  // namespace loadid
