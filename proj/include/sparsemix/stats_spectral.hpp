#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sparsemix/core.hpp"
#include "sparsemix/sparse_search.hpp"

namespace sparsemix {

namespace detail {

inline void require_covariance_shape(const Dataset& d, const Matrix& sigma)
{
    if (sigma.rows() != d.p() || sigma.cols() != d.p())
        throw InvalidInput("covariance does not match the data dimension");
}

// Centered data mapped to standardized coordinates, Xc Sigma^{-1/2}.
inline Matrix standardized_centered(const Dataset& d, const Matrix& sigma)
{
    require_covariance_shape(d, sigma);
    Matrix xc = centered_data(d);
    if (is_diagonal(sigma)) {
        const Vector diag = sigma.diagonal();
        const double dmax = diag.maxCoeff();
        if (!(dmax > 0.0) || !(diag.minCoeff() > 1e-12 * dmax))
            throw SingularCovariance("diagonal covariance has a nonpositive entry");
        return xc * diag.cwiseSqrt().cwiseInverse().asDiagonal();
    }
    return xc * covariance_roots(sigma).inv_sqrt;
}

}  // namespace detail

/// Sigma^{-1/2} Sigmahat Sigma^{-1/2} with the 1/n sample covariance.
inline Matrix standardized_covariance(const Dataset& d, const Matrix& sigma)
{
    const Matrix y = detail::standardized_centered(d, sigma);
    Matrix c = (y.transpose() * y) / static_cast<double>(d.n());
    return 0.5 * (c + c.transpose());
}

/// Top eigenvalue of the standardized sample covariance, with its eigenvector.
inline StatValue top_eig_stat(const Dataset& d, const Matrix& sigma)
{
    const Matrix y = detail::standardized_centered(d, sigma);
    const double n = static_cast<double>(d.n());
    StatValue out;
    out.stat_id = StatId::top_eig;
    out.rejection_side = RejectionSide::upper;
    Vector u;
    if (d.n() < d.p()) {
        // nonzero spectrum of Y'Y/n equals that of the smaller Gram matrix YY'/n
        Matrix gram = (y * y.transpose()) / n;
        const auto solver = sym_eigen(0.5 * (gram + gram.transpose()));
        out.value = solver.eigenvalues()(d.n() - 1);
        u = y.transpose() * solver.eigenvectors().col(d.n() - 1);
        if (!(u.norm() > 0.0)) {
            u = Vector::Zero(d.p());
            u(0) = 1.0;
        }
    } else {
        Matrix c = (y.transpose() * y) / n;
        const auto solver = sym_eigen(0.5 * (c + c.transpose()));
        out.value = solver.eigenvalues()(d.p() - 1);
        u = solver.eigenvectors().col(d.p() - 1);
    }
    u.normalize();
    detail::canonicalize_sign(u);
    out.value = std::max(out.value, 0.0);
    out.direction = std::move(u);
    return out;
}

/// Reject when the top eigenvalue is >= 1 + p/n + 12 sqrt(p/n).
inline double top_eig_threshold(Index n, Index p)
{
    if (n < 1 || p < 1)
        throw InvalidInput("n and p must be positive");
    const double r = static_cast<double>(p) / static_cast<double>(n);
    return 1.0 + r + 12.0 * std::sqrt(r);
}

/// High-probability null bound 1 + 9 zeta + 6 sqrt(zeta) for sparse_eig_stat.
inline double sparse_eig_null_bound(Index n, Index p, Index s)
{
    const double z = zeta(s, n, p);
    return 1.0 + 9.0 * z + 6.0 * std::sqrt(z);
}

/*!
 * Sparse eigenvalue over directions u with Sigma^{1/2} u s-sparse.
 *
 * With w = Sigma^{1/2} u this is, per support S,
 *   max w_S' (Sigma^{-1} Sigmahat Sigma^{-1})_SS w_S  s.t.  w_S' (Sigma^{-1})_SS w_S = 1.
 * The returned direction is u = Sigma^{-1/2} w normalized to unit length and
 * `support` is supp(w).
 */
inline StatValue
sparse_eig_stat(const Dataset& d, const Matrix& sigma, Index s, const SearchConfig& cfg = {})
{
    detail::require_covariance_shape(d, sigma);
    const auto roots = covariance_roots(sigma);
    const Matrix sigma_inv = roots.inv_sqrt * roots.inv_sqrt;
    const Matrix cov = sample_moments(d).cov;
    Matrix a = sigma_inv * cov * sigma_inv;
    a = 0.5 * (a + a.transpose());
    const Matrix b = 0.5 * (sigma_inv + sigma_inv.transpose());
    SearchResult r = maximize_generalized(a, b, s, cfg);
    Vector u = roots.inv_sqrt * r.direction;
    u.normalize();
    detail::canonicalize_sign(u);
    StatValue out;
    out.stat_id = StatId::sparse_eig;
    out.value = r.value;
    out.direction = std::move(u);
    out.support = std::move(r.support);
    out.rejection_side = RejectionSide::upper;
    return out;
}

/// s-sparse top eigenvalue of the standardized sample covariance.
inline StatValue
sparse_eig_stat_plain(const Dataset& d, const Matrix& sigma, Index s, const SearchConfig& cfg = {})
{
    SearchResult r = maximize_quadratic(standardized_covariance(d, sigma), s, cfg);
    StatValue out;
    out.stat_id = StatId::sparse_eig_plain;
    out.value = r.value;
    out.direction = std::move(r.direction);
    out.support = std::move(r.support);
    out.rejection_side = RejectionSide::upper;
    return out;
}

/*!
 * max over s-sparse u of u'Sigmahat u / u'diag(Sigmahat) u, with 0/0 = 0.
 *
 * Equivalent to the s-sparse top eigenvalue of the sample correlation matrix
 * of the non-constant columns; constant columns contribute nothing.
 */
inline StatValue diag_ratio_stat(const Dataset& d, Index s, const SearchConfig& cfg = {})
{
    if (s < 1)
        throw InvalidInput("sparsity must be at least 1");
    const Matrix cov = sample_moments(d).cov;
    std::vector<Index> keep;
    for (Index j = 0; j < d.p(); ++j) {
        const double scale = d.data().col(j).cwiseAbs().maxCoeff();
        if (cov(j, j) > std::pow(1e-12 * scale, 2) && cov(j, j) > 0.0)
            keep.push_back(j);
    }
    if (keep.empty())
        throw DegenerateProjection("every column of the data is constant");
    const auto q = static_cast<Index>(keep.size());
    Vector inv_sd(q);
    for (Index a = 0; a < q; ++a)
        inv_sd(a) = 1.0 / std::sqrt(cov(keep[a], keep[a]));
    Matrix corr(q, q);
    for (Index a = 0; a < q; ++a) {
        for (Index b = 0; b < q; ++b)
            corr(a, b) = cov(keep[a], keep[b]) * inv_sd(a) * inv_sd(b);
        corr(a, a) = 1.0;
    }
    SearchResult r = maximize_quadratic(corr, std::min(s, q), cfg);
    StatValue out;
    out.stat_id = StatId::diag_ratio;
    out.value = r.value;
    out.rejection_side = RejectionSide::upper;
    Vector u = Vector::Zero(d.p());
    for (Index a = 0; a < q; ++a)
        u(keep[a]) = r.direction(a) * inv_sd(a);
    u.normalize();
    detail::canonicalize_sign(u);
    out.direction = std::move(u);
    for (Index idx : r.support)
        out.support.push_back(keep[idx]);
    return out;
}

//---------------------------------------------------------------------------//
// Canonical variances
//---------------------------------------------------------------------------//

struct CanonicalVariances
{
    Vector ratios;  // sigmahat_jj / sigma_jj
    double max = 0.0;
    Index argmax = 0;  // smallest j attaining the max
};

inline CanonicalVariances canonical_variance_stats(const Dataset& d, const Vector& sigma_diag)
{
    if (sigma_diag.size() != d.p())
        throw InvalidInput("sigma_diag does not match the data dimension");
    if (!(sigma_diag.minCoeff() > 0.0))
        throw InvalidInput("known variances must be strictly positive");
    const Matrix xc = centered_data(d);
    CanonicalVariances out;
    out.ratios = (xc.colwise().squaredNorm().transpose() / static_cast<double>(d.n()))
                     .cwiseQuotient(sigma_diag);
    out.max = out.ratios(0);
    for (Index j = 1; j < d.p(); ++j) {
        if (out.ratios(j) > out.max) {
            out.max = out.ratios(j);
            out.argmax = j;
        }
    }
    return out;
}

inline StatValue canonical_max_stat(const Dataset& d, const Vector& sigma_diag)
{
    const auto cv = canonical_variance_stats(d, sigma_diag);
    StatValue out;
    out.stat_id = StatId::canonical;
    out.value = cv.max;
    out.support = {cv.argmax};
    out.rejection_side = RejectionSide::upper;
    return out;
}

/// k-th largest canonical variance.
inline StatValue canonical_kth_stat(const Dataset& d, const Vector& sigma_diag, Index k)
{
    if (k < 1 || k > d.p())
        throw InvalidInput("k must satisfy 1 <= k <= p");
    const auto cv = canonical_variance_stats(d, sigma_diag);
    std::vector<Index> order(static_cast<std::size_t>(d.p()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return cv.ratios(a) > cv.ratios(b); });
    StatValue out;
    out.stat_id = StatId::canonical_kth;
    out.value = cv.ratios(order[static_cast<std::size_t>(k - 1)]);
    out.support.assign(order.begin(), order.begin() + k);
    std::sort(out.support.begin(), out.support.end());
    out.rejection_side = RejectionSide::upper;
    return out;
}

/// 1 + 5 * max(sqrt(log p / n), log p / n).
inline double canonical_variance_threshold(Index n, Index p)
{
    if (n < 1 || p < 1)
        throw InvalidInput("n and p must be positive");
    const double r = std::log(static_cast<double>(p)) / static_cast<double>(n);
    return 1.0 + 5.0 * std::max(std::sqrt(r), r);
}

//---------------------------------------------------------------------------//
// Minimum dual perturbation
//---------------------------------------------------------------------------//

/// Entry-wise soft thresholding sign(a) * max(|a| - z, 0).
inline Matrix soft_threshold_matrix(const Matrix& a, double z)
{
    if (!(z >= 0.0))
        throw InvalidInput("soft-threshold level must be nonnegative");
    return a.unaryExpr([z](double v) {
        const double m = std::abs(v) - z;
        return m > 0.0 ? std::copysign(m, v) : 0.0;
    });
}

struct MdpOptions
{
    int grid_points = 200;      // log-spaced points on [floor * zmax, zmax]
    double grid_floor = 1e-4;
    int refine_steps = 20;      // golden-section steps around the grid argmin
};

struct MdpResult
{
    double value = 0.0;
    double z = 0.0;
    int evaluations = 0;
};

/*!
 * MDP_s(A) = min_{z >= 0} lambda_max(tau_z(A)) + s z, by a grid over
 * z in {0} and [floor * zmax, zmax] (zmax = max |a_jk|) refined by golden
 * section. Every evaluated point bounds MDP_s from above, and the returned
 * value is the smallest one seen.
 *
 * Several sparsity levels share the grid evaluations of lambda_max; each
 * level gets its own refinement. Results are identical to one-at-a-time calls.
 */
inline std::vector<MdpResult>
mdp_values(const Matrix& a, const std::vector<Index>& levels, const MdpOptions& opts = {})
{
    if (a.rows() != a.cols() || a.rows() == 0)
        throw InvalidInput("MDP needs a non-empty square matrix");
    for (Index s : levels)
        if (s < 1)
            throw InvalidInput("sparsity must be at least 1");
    if (opts.grid_points < 2 || !(opts.grid_floor > 0.0 && opts.grid_floor < 1.0) ||
        opts.refine_steps < 0)
        throw InvalidInput("invalid MDP grid options");
    auto g = [&](double z) { return top_eigenvalue(soft_threshold_matrix(a, z)); };

    const double zmax = a.cwiseAbs().maxCoeff();
    std::vector<double> zs{0.0};
    if (zmax > 0.0) {
        const int m = opts.grid_points;
        for (int k = 0; k < m; ++k) {
            const double frac = static_cast<double>(k) / static_cast<double>(m - 1);
            zs.push_back(zmax * std::pow(opts.grid_floor, 1.0 - frac));
        }
    }
    std::vector<double> gs;
    gs.reserve(zs.size());
    for (double z : zs)
        gs.push_back(g(z));

    std::vector<MdpResult> out;
    out.reserve(levels.size());
    for (Index s : levels) {
        const double sd = static_cast<double>(s);
        MdpResult best;
        auto record = [&](double z, double v) {
            ++best.evaluations;
            if (best.evaluations == 1 || v < best.value) {
                best.value = v;
                best.z = z;
            }
            return v;
        };
        std::vector<double> vals;
        vals.reserve(zs.size());
        for (std::size_t k = 0; k < zs.size(); ++k)
            vals.push_back(record(zs[k], gs[k] + sd * zs[k]));
        if (zs.size() < 3 || opts.refine_steps == 0) {
            out.push_back(best);
            continue;
        }
        auto f = [&](double z) { return record(z, g(z) + sd * z); };
        const auto k = static_cast<std::size_t>(
            std::min_element(vals.begin(), vals.end()) - vals.begin());
        double lo = zs[k == 0 ? 0 : k - 1];
        double hi = zs[std::min(k + 1, zs.size() - 1)];
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - ratio * (hi - lo);
        double x2 = lo + ratio * (hi - lo);
        double f1 = f(x1);
        double f2 = f(x2);
        for (int it = 0; it < opts.refine_steps; ++it) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = f(x2);
            }
        }
        out.push_back(best);
    }
    return out;
}

inline MdpResult mdp_value(const Matrix& a, Index s, const MdpOptions& opts = {})
{
    return mdp_values(a, {s}, opts).front();
}

/// MDP_s of the standardized covariance for several s at once.
inline std::vector<double> mdp_stat_values(const Dataset& d, const Matrix& sigma,
                                           const std::vector<Index>& levels,
                                           const MdpOptions& opts = {})
{
    detail::require_covariance_shape(d, sigma);
    if (!is_diagonal(sigma, 1e-12))
        throw InvalidInput("MDP statistic requires a diagonal (known) covariance");
    Matrix diag = sigma.diagonal().asDiagonal();
    std::vector<double> out;
    for (const auto& r : mdp_values(standardized_covariance(d, diag), levels, opts))
        out.push_back(r.value);
    return out;
}

/// MDP_s of the standardized sample covariance; sigma must be diagonal.
inline StatValue
mdp_stat(const Dataset& d, const Matrix& sigma, Index s, const MdpOptions& opts = {})
{
    StatValue out;
    out.stat_id = StatId::mdp;
    out.value = mdp_stat_values(d, sigma, {s}, opts).front();
    out.rejection_side = RejectionSide::upper;
    return out;
}

}  // namespace sparsemix
