#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "loadid/common.hpp"
#include "loadid/csv.hpp"
#include "loadid/features.hpp"
#include "loadid/scatter.hpp"

namespace loadid {

enum class ReducerMethod { FnpaQr, Pca, Lda, Flda };

inline std::string reducer_name(ReducerMethod m) {
    switch (m) {
        case ReducerMethod::FnpaQr: return "fnpa-qr";
        case ReducerMethod::Pca: return "pca";
        case ReducerMethod::Lda: return "lda";
        case ReducerMethod::Flda: return "flda";
    }
    return "?";
}

inline ReducerMethod reducer_from_name(const std::string& name) {
    if (name == "fnpa-qr") return ReducerMethod::FnpaQr;
    if (name == "pca") return ReducerMethod::Pca;
    if (name == "lda") return ReducerMethod::Lda;
    if (name == "flda") return ReducerMethod::Flda;
    throw DataError("unknown reduction method: " + name);
}

struct Projection {
    Matrix basis;  // d x r
    ReducerMethod method = ReducerMethod::Pca;
    int reduced_dim = 0;
    Vector eigenvalues;        // fit-time eigen/trace-ratio record
    Vector max_residuals;      // per-column generalized-eigenpair residuals
    Vector center;             // PCA mean; zero elsewhere

    long input_dim() const { return basis.rows(); }
};

namespace detail {

// Deterministic sign: make each column's largest-magnitude entry positive.
inline void fix_column_signs(Matrix& m) {
    for (long j = 0; j < m.cols(); ++j) {
        long idx = 0;
        m.col(j).cwiseAbs().maxCoeff(&idx);
        if (m(idx, j) < 0.0) m.col(j) = -m.col(j);
    }
}

inline double auto_ridge(const Matrix& yw) {
    const long d = yw.rows();
    double r = 1e-6 * yw.trace() / static_cast<double>(d);
    // keep the mass matrix positive definite even when Yw vanishes
    return std::max(r, 1e-12);
}

}  // namespace detail

struct TraceRatioResult {
    Matrix directions;  // H, d x r
    Vector eigenvalues;
    Vector residuals;  // relative per-column residuals
};

// Top-r generalized eigenvectors of Yb h = lambda (Yw + ridge I) h, descending
// eigenvalue, deterministic sign.
inline TraceRatioResult trace_ratio_directions(const Matrix& yw, const Matrix& yb, int r,
                                               double ridge) {
    const long d = yw.rows();
    if (yw.cols() != d || yb.rows() != d || yb.cols() != d)
        throw DataError("trace_ratio: scatter matrices must be square and same size");
    if (r < 1 || r > d)
        throw NumericalError("trace_ratio: r=" + std::to_string(r) +
                             " exceeds available rank (d=" + std::to_string(d) + ")");
    const double yb_norm = yb.norm();
    if (yb_norm < 1e-12) throw NumericalError("degenerate between-class scatter");
    if (ridge < 0.0) throw DataError("trace_ratio: ridge must be >= 0");

    Matrix mass = yw + ridge * Matrix::Identity(d, d);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(yb, mass);
    if (solver.info() != Eigen::Success)
        throw NumericalError("generalized eigensolve failed (is the within-scatter PSD?)");

    // Eigen returns ascending order; take the top r reversed.
    TraceRatioResult res;
    res.directions.resize(d, r);
    res.eigenvalues.resize(r);
    res.residuals.resize(r);
    for (int j = 0; j < r; ++j) {
        const long src = d - 1 - j;
        res.directions.col(j) = solver.eigenvectors().col(src);
        res.eigenvalues(j) = solver.eigenvalues()(src);
    }
    detail::fix_column_signs(res.directions);
    for (int j = 0; j < r; ++j) {
        Vector h = res.directions.col(j);
        double resid = (yb * h - res.eigenvalues(j) * (mass * h)).norm() / (yb_norm * h.norm());
        res.residuals(j) = resid;
        if (resid > 1e-6)
            throw NumericalError("generalized eigenpair residual " + std::to_string(resid) +
                                 " exceeds 1e-6 for column " + std::to_string(j));
    }
    return res;
}

// Thin QR with non-negative R diagonal; rejects rank-deficient input.
inline Matrix qr_orthogonalize(const Matrix& h) {
    const long d = h.rows();
    const long r = h.cols();
    Eigen::JacobiSVD<Matrix> svd(h);
    const auto& sv = svd.singularValues();
    long deficient = 0;
    for (long j = 0; j < sv.size(); ++j)
        if (sv(j) <= 1e-10 * sv(0)) ++deficient;
    if (deficient > 0)
        throw NumericalError("qr_orthogonalize: input is rank-deficient in " +
                             std::to_string(deficient) + " column(s)");

    Eigen::HouseholderQR<Matrix> qr(h);
    Matrix q = qr.householderQ() * Matrix::Identity(d, r);
    Matrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    for (long j = 0; j < r; ++j)
        if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

inline int default_reduced_dim(const FeatureMatrix& f) {
    return std::max(1, std::min(class_count_of(f.labels) - 1, static_cast<int>(f.cols())));
}

inline Projection fit_fnpa_qr(const FeatureMatrix& f, int r, int k,
                              std::optional<double> ridge = std::nullopt) {
    const Matrix& x = f.values;
    Matrix u = fuzzy_memberships(x, f.labels, k);
    auto ws = within_scatter(x, f.labels, u, k);
    auto bs = between_scatter(x, f.labels);
    double eps = ridge ? *ridge : detail::auto_ridge(ws.scatter);
    auto tr = trace_ratio_directions(ws.scatter, bs.scatter, r, eps);

    Projection p;
    p.method = ReducerMethod::FnpaQr;
    p.reduced_dim = r;
    p.basis = qr_orthogonalize(tr.directions);
    p.eigenvalues = tr.eigenvalues;
    p.max_residuals = tr.residuals;
    p.center = Vector::Zero(x.cols());
    return p;
}

inline Projection fit_pca(const FeatureMatrix& f, int r) {
    const Matrix& x = f.values;
    const long n = x.rows();
    const long d = x.cols();
    if (r < 1 || r > d) throw DataError("pca: r must be in [1, d]");
    Vector mean = x.colwise().mean();
    Matrix centered = x.rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * centered / static_cast<double>(std::max<long>(n - 1, 1));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericalError("pca eigensolve failed");

    Projection p;
    p.method = ReducerMethod::Pca;
    p.reduced_dim = r;
    p.basis.resize(d, r);
    p.eigenvalues.resize(r);
    for (int j = 0; j < r; ++j) {
        p.basis.col(j) = solver.eigenvectors().col(d - 1 - j);
        p.eigenvalues(j) = solver.eigenvalues()(d - 1 - j);
    }
    detail::fix_column_signs(p.basis);
    p.max_residuals = Vector::Zero(r);
    p.center = mean;
    return p;
}

namespace detail {

struct LdaScatters {
    Matrix within;
    Matrix between;
};

// Crisp Fisher scatters: Sw = sum_c sum_{i in c} (x_i - m_c)(x_i - m_c)^T,
// Sb = sum_c n_c (m_c - m)(m_c - m)^T.
inline LdaScatters crisp_lda_scatters(const Matrix& x, const std::vector<int>& labels) {
    const long d = x.cols();
    const int c = class_count_of(labels);
    auto bs = between_scatter(x, labels);  // reuse class means
    Vector grand = x.colwise().mean();
    std::vector<double> sizes(static_cast<size_t>(c), 0.0);
    for (int l : labels) sizes[static_cast<size_t>(l)] += 1.0;

    LdaScatters s;
    s.within = Matrix::Zero(d, d);
    s.between = Matrix::Zero(d, d);
    for (long i = 0; i < x.rows(); ++i) {
        Vector dev = x.row(i).transpose() - bs.class_means.col(labels[static_cast<size_t>(i)]);
        s.within += dev * dev.transpose();
    }
    for (int cls = 0; cls < c; ++cls) {
        Vector dev = bs.class_means.col(cls) - grand;
        s.between += sizes[static_cast<size_t>(cls)] * dev * dev.transpose();
    }
    return s;
}

// Fuzzy scatters with membership weights u^p; fuzzy class means.
inline LdaScatters fuzzy_lda_scatters(const Matrix& x, const std::vector<int>& labels,
                                      const Matrix& u, double exponent) {
    const long n = x.rows();
    const long d = x.cols();
    const int c = static_cast<int>(u.cols());
    (void)labels;
    Matrix w = u.array().pow(exponent).matrix();

    Matrix means(d, c);
    for (int cls = 0; cls < c; ++cls) {
        double total = w.col(cls).sum();
        if (total <= 0.0) throw NumericalError("flda: empty fuzzy class " + std::to_string(cls));
        means.col(cls) = (x.transpose() * w.col(cls)) / total;
    }
    Vector grand = x.colwise().mean();

    LdaScatters s;
    s.within = Matrix::Zero(d, d);
    s.between = Matrix::Zero(d, d);
    for (long i = 0; i < n; ++i)
        for (int cls = 0; cls < c; ++cls) {
            Vector dev = x.row(i).transpose() - means.col(cls);
            s.within += w(i, cls) * dev * dev.transpose();
        }
    for (int cls = 0; cls < c; ++cls) {
        Vector dev = means.col(cls) - grand;
        s.between += w.col(cls).sum() * dev * dev.transpose();
    }
    return s;
}

inline Projection fit_discriminant(const LdaScatters& s, ReducerMethod method, int r, int c,
                                   std::optional<double> ridge) {
    if (r > c - 1)
        throw DataError(reducer_name(method) + ": r must be <= C-1 = " + std::to_string(c - 1));
    double eps = ridge ? *ridge : auto_ridge(s.within);
    auto tr = trace_ratio_directions(s.within, s.between, r, eps);
    Projection p;
    p.method = method;
    p.reduced_dim = r;
    p.basis = tr.directions;
    p.eigenvalues = tr.eigenvalues;
    p.max_residuals = tr.residuals;
    p.center = Vector::Zero(s.within.rows());
    return p;
}

}  // namespace detail

inline Projection fit_lda(const FeatureMatrix& f, int r,
                          std::optional<double> ridge = std::nullopt) {
    auto s = detail::crisp_lda_scatters(f.values, f.labels);
    return detail::fit_discriminant(s, ReducerMethod::Lda, r, class_count_of(f.labels), ridge);
}

inline Projection fit_flda(const FeatureMatrix& f, int r, int k, double fuzz_exponent = 1.0,
                           std::optional<double> ridge = std::nullopt) {
    Matrix u = fuzzy_memberships(f.values, f.labels, k);
    auto s = detail::fuzzy_lda_scatters(f.values, f.labels, u, fuzz_exponent);
    return detail::fit_discriminant(s, ReducerMethod::Flda, r, class_count_of(f.labels), ridge);
}

inline FeatureMatrix project(const Projection& p, const FeatureMatrix& f) {
    if (f.cols() != p.input_dim())
        throw DataError("project: feature dim " + std::to_string(f.cols()) +
                        " != projection input dim " + std::to_string(p.input_dim()));
    FeatureMatrix out;
    out.labels = f.labels;
    out.descriptor = f.descriptor;
    out.window_length = f.window_length;
    out.values = (f.values.rowwise() - p.center.transpose()) * p.basis;
    return out;
}

// Versioned CSV bundle: metadata header lines, then basis rows.
inline void write_projection_csv(const Projection& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out.precision(17);
    out << "#loadid-projection,v1\n";
    out << "#method," << reducer_name(p.method) << "\n";
    out << "#dims," << p.input_dim() << "," << p.reduced_dim << "\n";
    out << "#eigenvalues";
    for (long j = 0; j < p.eigenvalues.size(); ++j) out << "," << p.eigenvalues(j);
    out << "\n#center";
    for (long j = 0; j < p.center.size(); ++j) out << "," << p.center(j);
    out << "\n";
    for (long i = 0; i < p.basis.rows(); ++i) {
        for (long j = 0; j < p.basis.cols(); ++j) out << (j ? "," : "") << p.basis(i, j);
        out << "\n";
    }
}

inline Projection read_projection_csv(const std::string& path) {
    auto lines = csv::read_lines(path);
    if (lines.size() < 5 || lines[0] != "#loadid-projection,v1")
        throw DataError("not a loadid projection bundle: " + path);
    Projection p;
    p.method = reducer_from_name(csv::split_row(lines[1]).at(1));
    auto dims = csv::split_row(lines[2]);
    const long d = static_cast<long>(csv::parse_double(dims.at(1), path));
    p.reduced_dim = static_cast<int>(csv::parse_double(dims.at(2), path));
    auto evs = csv::split_row(lines[3]);
    p.eigenvalues.resize(static_cast<long>(evs.size()) - 1);
    for (size_t j = 1; j < evs.size(); ++j)
        p.eigenvalues(static_cast<long>(j) - 1) = csv::parse_double(evs[j], path);
    auto ctr = csv::split_row(lines[4]);
    p.center.resize(static_cast<long>(ctr.size()) - 1);
    for (size_t j = 1; j < ctr.size(); ++j)
        p.center(static_cast<long>(j) - 1) = csv::parse_double(ctr[j], path);
    if (static_cast<long>(lines.size()) - 5 != d)
        throw DataError("projection bundle row count mismatch: " + path);
    p.basis.resize(d, p.reduced_dim);
    for (long i = 0; i < d; ++i) {
        auto row = csv::split_row(lines[static_cast<size_t>(i) + 5]);
        if (static_cast<int>(row.size()) != p.reduced_dim)
            throw DataError("projection bundle column count mismatch: " + path);
        for (int j = 0; j < p.reduced_dim; ++j)
            p.basis(i, j) = csv::parse_double(row[static_cast<size_t>(j)], path);
    }
    p.max_residuals = Vector::Zero(p.reduced_dim);
    return p;
}

}  // namespace loadid
