#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "loadid/common.hpp"

namespace loadid {

struct NeighborhoodModel {
    int k = 0;
    Matrix within_affinity;    // n x n, symmetric, zero diagonal
    Matrix within_laplacian;   // L1 = D - W
    Matrix class_means;        // d x C
    Matrix between_affinity;   // C x C
    Matrix between_laplacian;  // L2 = E - B
    Matrix memberships;        // n x C, row-stochastic
};

struct ScatterPair {
    Matrix within;   // Yw, d x d
    Matrix between;  // Yb, d x d
};

inline int class_count_of(const std::vector<int>& labels) {
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    return c;
}

// Exact k-NN by Euclidean distance, self excluded, ties toward lower index.
inline std::vector<std::vector<int>> knn_indices(const Matrix& x, int k) {
    const long n = x.rows();
    if (k < 1 || k >= n)
        throw DataError("knn: k must satisfy 1 <= k <= n-1 (k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
    Matrix sq_norms = x.rowwise().squaredNorm();
    std::vector<std::vector<int>> nn(static_cast<size_t>(n));
    std::vector<std::pair<double, int>> dist(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j)
            dist[static_cast<size_t>(j)] = {(x.row(i) - x.row(j)).squaredNorm(),
                                            static_cast<int>(j)};
        dist[static_cast<size_t>(i)].first = std::numeric_limits<double>::infinity();
        std::stable_sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) {
            return a.first < b.first || (a.first == b.first && a.second < b.second);
        });
        auto& row = nn[static_cast<size_t>(i)];
        row.reserve(static_cast<size_t>(k));
        for (int j = 0; j < k; ++j) row.push_back(dist[static_cast<size_t>(j)].second);
    }
    return nn;
}

// Keller fuzzy k-NN memberships: own class gets 0.51 + 0.49 * n_ic/k, others
// 0.49 * n_ic/k, rows renormalized to sum one.
inline Matrix fuzzy_memberships(const Matrix& x, const std::vector<int>& labels, int k) {
    const long n = x.rows();
    const int c = class_count_of(labels);
    auto nn = knn_indices(x, k);
    Matrix u = Matrix::Zero(n, c);
    for (long i = 0; i < n; ++i) {
        std::vector<int> counts(static_cast<size_t>(c), 0);
        for (int j : nn[static_cast<size_t>(i)]) ++counts[static_cast<size_t>(labels[static_cast<size_t>(j)])];
        for (int cls = 0; cls < c; ++cls) {
            double frac = static_cast<double>(counts[static_cast<size_t>(cls)]) / k;
            u(i, cls) = 0.49 * frac + (labels[static_cast<size_t>(i)] == cls ? 0.51 : 0.0);
        }
        u.row(i) /= u.row(i).sum();
    }
    return u;
}

struct WithinScatterResult {
    Matrix affinity;   // W
    Matrix laplacian;  // L1
    Matrix scatter;    // Yw = X^T L1 X
    bool single_member_classes = false;
};

// W_ij = min(U_ic, U_jc) * exp(-||x_i - x_j||^2 / t) over same-class k-NN
// pairs; t is the mean squared distance among connected pairs.
inline WithinScatterResult within_scatter(const Matrix& x, const std::vector<int>& labels,
                                          const Matrix& u, int k) {
    const long n = x.rows();
    const long d = x.cols();
    if (static_cast<long>(labels.size()) != n || u.rows() != n)
        throw DataError("within_scatter: misaligned labels or memberships");
    auto nn = knn_indices(x, k);

    std::vector<std::pair<long, long>> edges;
    for (long i = 0; i < n; ++i)
        for (int j : nn[static_cast<size_t>(i)]) {
            long lj = j;
            if (labels[static_cast<size_t>(i)] != labels[static_cast<size_t>(lj)]) continue;
            long a = std::min(i, lj), b = std::max(i, lj);
            edges.emplace_back(a, b);
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    WithinScatterResult res;
    res.affinity = Matrix::Zero(n, n);

    double t = 0.0;
    for (auto [a, b] : edges) t += (x.row(a) - x.row(b)).squaredNorm();
    if (!edges.empty()) t /= static_cast<double>(edges.size());

    for (auto [a, b] : edges) {
        const int c = labels[static_cast<size_t>(a)];
        const double heat =
            t > 0.0 ? std::exp(-(x.row(a) - x.row(b)).squaredNorm() / t) : 1.0;
        const double w = std::min(u(a, c), u(b, c)) * heat;
        res.affinity(a, b) = w;
        res.affinity(b, a) = w;
    }

    std::vector<int> class_sizes(static_cast<size_t>(class_count_of(labels)), 0);
    for (int l : labels) ++class_sizes[static_cast<size_t>(l)];
    res.single_member_classes =
        std::any_of(class_sizes.begin(), class_sizes.end(), [](int s) { return s == 1; });

    Vector degree = res.affinity.rowwise().sum();
    res.laplacian = Matrix(degree.asDiagonal()) - res.affinity;
    res.scatter = x.transpose() * res.laplacian * x;
    res.scatter = 0.5 * (res.scatter + res.scatter.transpose().eval());
    (void)d;
    return res;
}

struct BetweenScatterResult {
    Matrix class_means;  // M, d x C
    Matrix affinity;     // B, C x C
    Matrix laplacian;    // L2 = E - B
    Matrix scatter;      // Yb = M L2 M^T
};

// Class-prior-weighted complete graph over class means: B_pq = n_p n_q / n^2.
// Equals the classical LDA between-class scatter divided by n in the crisp
// limit.
inline BetweenScatterResult between_scatter(const Matrix& x, const std::vector<int>& labels) {
    const long n = x.rows();
    const long d = x.cols();
    const int c = class_count_of(labels);
    if (c < 2) throw DataError("between_scatter: need at least 2 classes");

    std::vector<double> sizes(static_cast<size_t>(c), 0.0);
    BetweenScatterResult res;
    res.class_means = Matrix::Zero(d, c);
    for (long i = 0; i < n; ++i) {
        const int l = labels[static_cast<size_t>(i)];
        res.class_means.col(l) += x.row(i).transpose();
        sizes[static_cast<size_t>(l)] += 1.0;
    }
    for (int cls = 0; cls < c; ++cls) {
        if (sizes[static_cast<size_t>(cls)] == 0.0)
            throw DataError("between_scatter: empty class " + std::to_string(cls));
        res.class_means.col(cls) /= sizes[static_cast<size_t>(cls)];
    }

    res.affinity = Matrix::Zero(c, c);
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    for (int p = 0; p < c; ++p)
        for (int q = 0; q < c; ++q)
            if (p != q)
                res.affinity(p, q) =
                    sizes[static_cast<size_t>(p)] * sizes[static_cast<size_t>(q)] / n2;

    Vector colsum = res.affinity.colwise().sum();
    res.laplacian = Matrix(colsum.asDiagonal()) - res.affinity;
    res.scatter = res.class_means * res.laplacian * res.class_means.transpose();
    res.scatter = 0.5 * (res.scatter + res.scatter.transpose().eval());
    return res;
}

inline int default_neighbor_count(const std::vector<int>& labels) {
    const int c = class_count_of(labels);
    std::vector<int> sizes(static_cast<size_t>(c), 0);
    for (int l : labels) ++sizes[static_cast<size_t>(l)];
    int min_size = *std::min_element(sizes.begin(), sizes.end());
    int k = std::min(7, min_size - 1);
    return std::clamp(k, 1, static_cast<int>(labels.size()) - 1);
}

inline NeighborhoodModel build_neighborhood(const Matrix& x, const std::vector<int>& labels,
                                            int k) {
    NeighborhoodModel model;
    model.k = k;
    model.memberships = fuzzy_memberships(x, labels, k);
    auto ws = within_scatter(x, labels, model.memberships, k);
    auto bs = between_scatter(x, labels);
    model.within_affinity = std::move(ws.affinity);
    model.within_laplacian = std::move(ws.laplacian);
    model.class_means = std::move(bs.class_means);
    model.between_affinity = std::move(bs.affinity);
    model.between_laplacian = std::move(bs.laplacian);
    return model;
}

}  // namespace loadid
