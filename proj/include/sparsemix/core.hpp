#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sparsemix/combinatorics.hpp"
#include "sparsemix/errors.hpp"

namespace sparsemix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

//---------------------------------------------------------------------------//
// Symmetric linear algebra
//---------------------------------------------------------------------------//

/// Largest absolute difference between a and a^T.
inline double max_asymmetry(const Matrix& a)
{
    if (a.rows() != a.cols())
        throw InvalidInput("matrix is not square");
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

inline Eigen::SelfAdjointEigenSolver<Matrix> sym_eigen(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw InvalidInput("symmetric eigendecomposition failed to converge");
    return solver;
}

inline double top_eigenvalue(const Matrix& a)
{
    if (a.rows() == 1)
        return a(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw InvalidInput("symmetric eigendecomposition failed to converge");
    return solver.eigenvalues()(a.rows() - 1);
}

/// Symmetric square root of a psd matrix. Negative eigenvalues are clipped
/// at zero; clipping beyond 1e-10 * lambda_max is reported through warn().
inline Matrix sym_sqrt(const Matrix& a)
{
    const auto solver = sym_eigen(a);
    Vector evals = solver.eigenvalues();
    const double lmax = std::max(evals.cwiseAbs().maxCoeff(), 0.0);
    const double most_negative = std::min(evals.minCoeff(), 0.0);
    if (-most_negative > 1e-10 * lmax)
        warn("clipped eigenvalue " + std::to_string(most_negative) +
             " to zero in matrix square root");
    evals = evals.cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * evals.asDiagonal() * solver.eigenvectors().transpose();
}

/// Pair of symmetric roots Sigma^{1/2} and Sigma^{-1/2}.
struct CovarianceRoots
{
    Matrix sqrt;
    Matrix inv_sqrt;
};

/// Roots of a strictly positive-definite covariance.
/// Throws SingularCovariance when lambda_min <= 1e-12 * lambda_max.
inline CovarianceRoots covariance_roots(const Matrix& sigma)
{
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
        throw InvalidInput("covariance must be a non-empty square matrix");
    const auto solver = sym_eigen(0.5 * (sigma + sigma.transpose()));
    const Vector& evals = solver.eigenvalues();
    const double lmax = evals.maxCoeff();
    if (!(lmax > 0.0) || !(evals.minCoeff() > 1e-12 * lmax))
        throw SingularCovariance("covariance is singular or indefinite (eigenvalues " +
                                 std::to_string(evals.minCoeff()) + " .. " +
                                 std::to_string(lmax) + ")");
    const Matrix& v = solver.eigenvectors();
    return {v * evals.cwiseSqrt().asDiagonal() * v.transpose(),
            v * evals.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose()};
}

inline bool is_diagonal(const Matrix& a, double rel_tol = 0.0)
{
    const double scale = a.diagonal().cwiseAbs().maxCoeff();
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (i != j && std::abs(a(i, j)) > rel_tol * scale)
                return false;
    return true;
}

//---------------------------------------------------------------------------//
// Domain types
//---------------------------------------------------------------------------//

/*!
 * Parameters (nu, mu0, mu1, Sigma) of the two-component mixture together with
 * the declared sparsity s of delta_mu = mu1 - mu0.
 */
struct MixtureParams
{
    double nu = 0.5;
    Vector mu0;
    Vector mu1;
    Matrix sigma;
    Index s = 1;

    Index dim() const { return mu0.size(); }
    Vector delta_mu() const { return mu1 - mu0; }

    void validate() const
    {
        const Index p = mu0.size();
        if (p < 1 || mu1.size() != p || sigma.rows() != p || sigma.cols() != p)
            throw InvalidInput("mixture parameters have inconsistent dimensions");
        if (!(nu > 0.0 && nu < 1.0))
            throw InvalidInput("mixing weight nu must lie in (0, 1)");
        if (s < 1 || s > p)
            throw InvalidInput("sparsity s must satisfy 1 <= s <= p");
        if (!sigma.allFinite() || !mu0.allFinite() || !mu1.allFinite())
            throw InvalidInput("mixture parameters must be finite");
        if (max_asymmetry(sigma) > 1e-10)
            throw InvalidInput("sigma is not symmetric");
        if (is_diagonal(sigma)) {
            if (sigma.diagonal().minCoeff() < 0.0)
                throw InvalidInput("sigma is not positive semidefinite");
        } else {
            Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma, Eigen::EigenvaluesOnly);
            const Vector& ev = solver.eigenvalues();
            if (ev.minCoeff() < -1e-10 * std::max(ev.maxCoeff(), 0.0))
                throw InvalidInput("sigma is not positive semidefinite");
        }
        const Index nnz = (delta_mu().array() != 0.0).count();
        if (nnz > s)
            throw InvalidInput("delta_mu has " + std::to_string(nnz) +
                               " nonzero entries, more than s = " + std::to_string(s));
    }
};

/*!
 * An n x p observation matrix (rows are observations) with an optional
 * known covariance.
 */
class Dataset
{
  public:
    explicit Dataset(Matrix data, std::optional<Matrix> known_sigma = std::nullopt)
        : data_(std::move(data)), known_sigma_(std::move(known_sigma))
    {
        if (data_.rows() < 2)
            throw InvalidInput("dataset needs at least 2 observations, got " +
                               std::to_string(data_.rows()));
        if (data_.cols() < 1)
            throw InvalidInput("dataset needs at least one variable");
        if (!data_.allFinite())
            throw InvalidInput("dataset contains non-finite entries");
        if (known_sigma_ &&
            (known_sigma_->rows() != p() || known_sigma_->cols() != p()))
            throw InvalidInput("known covariance does not match the data dimension");
    }

    const Matrix& data() const { return data_; }
    const std::optional<Matrix>& known_sigma() const { return known_sigma_; }
    Index n() const { return data_.rows(); }
    Index p() const { return data_.cols(); }

  private:
    Matrix data_;
    std::optional<Matrix> known_sigma_;
};

enum class StatId {
    top_eig,
    sparse_eig,
    sparse_eig_plain,
    diag_ratio,
    canonical,
    canonical_kth,
    mdp,
    kurtosis,
    abs1,
    skewness,
    signed2,
    coord_abs1,
    coord_signed2,
};

inline constexpr StatId kAllStats[] = {
    StatId::top_eig,  StatId::sparse_eig, StatId::sparse_eig_plain, StatId::diag_ratio,
    StatId::canonical, StatId::canonical_kth, StatId::mdp,          StatId::kurtosis,
    StatId::abs1,     StatId::skewness,   StatId::signed2,          StatId::coord_abs1,
    StatId::coord_signed2,
};

constexpr std::string_view to_string(StatId id)
{
    switch (id) {
        case StatId::top_eig: return "top-eig";
        case StatId::sparse_eig: return "sparse-eig";
        case StatId::sparse_eig_plain: return "sparse-eig-plain";
        case StatId::diag_ratio: return "diag-ratio";
        case StatId::canonical: return "canonical";
        case StatId::canonical_kth: return "canonical-kth";
        case StatId::mdp: return "mdp";
        case StatId::kurtosis: return "kurtosis";
        case StatId::abs1: return "abs1";
        case StatId::skewness: return "skewness";
        case StatId::signed2: return "signed2";
        case StatId::coord_abs1: return "coord-abs1";
        case StatId::coord_signed2: return "coord-signed2";
    }
    return "unknown";
}

inline StatId parse_stat_id(std::string_view name)
{
    for (StatId id : kAllStats)
        if (to_string(id) == name)
            return id;
    std::string valid;
    for (StatId id : kAllStats) {
        if (!valid.empty())
            valid += ", ";
        valid += to_string(id);
    }
    throw InvalidInput("unknown statistic '" + std::string(name) + "'; valid: " + valid);
}

enum class RejectionSide { upper, lower };

constexpr std::string_view to_string(RejectionSide side)
{
    return side == RejectionSide::upper ? "upper" : "lower";
}

inline RejectionSide parse_rejection_side(std::string_view s)
{
    if (s == "upper")
        return RejectionSide::upper;
    if (s == "lower")
        return RejectionSide::lower;
    throw InvalidInput("rejection side must be 'upper' or 'lower'");
}

/*!
 * Value of a named statistic.
 *
 * `direction` is the extremizing unit vector when the statistic is an
 * optimization over directions; `support` is the index set it lives on
 * (the argmax coordinate for coordinate-wise statistics).
 */
struct StatValue
{
    StatId stat_id = StatId::top_eig;
    double value = 0.0;
    std::optional<Vector> direction;
    Support support;
    RejectionSide rejection_side = RejectionSide::upper;
};

//---------------------------------------------------------------------------//
// Moments and standardization
//---------------------------------------------------------------------------//

struct SampleMoments
{
    Vector mean;
    Matrix cov;  // 1/n normalization
};

namespace detail {

// Rows sorted lexicographically; summing in this order makes the moments
// bitwise independent of the input row order.
inline Matrix canonical_row_order(const Matrix& x)
{
    std::vector<Index> order(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (Index j = 0; j < x.cols(); ++j) {
            if (x(a, j) != x(b, j))
                return x(a, j) < x(b, j);
        }
        return false;
    });
    Matrix sorted(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i)
        sorted.row(i) = x.row(order[static_cast<std::size_t>(i)]);
    return sorted;
}

}  // namespace detail

/// Sample mean and 1/n-normalized sample covariance.
inline SampleMoments sample_moments(const Dataset& d)
{
    const Matrix x = detail::canonical_row_order(d.data());
    const double n = static_cast<double>(d.n());
    SampleMoments m;
    m.mean = x.colwise().sum().transpose() / n;
    const Matrix centered = x.rowwise() - m.mean.transpose();
    m.cov = (centered.transpose() * centered) / n;
    m.cov = 0.5 * (m.cov + m.cov.transpose());
    return m;
}

/// Rows minus the sample mean.
inline Matrix centered_data(const Dataset& d)
{
    const Vector mean = d.data().colwise().mean().transpose();
    return d.data().rowwise() - mean.transpose();
}

/// Replace every row X_i by Sigma^{-1/2} X_i.
inline Dataset standardize(const Dataset& d, const Matrix& sigma)
{
    if (sigma.rows() != d.p() || sigma.cols() != d.p())
        throw InvalidInput("covariance does not match the data dimension");
    const Matrix inv_root = covariance_roots(sigma).inv_sqrt;
    return Dataset(d.data() * inv_root);
}

//---------------------------------------------------------------------------//
// Signal-to-noise functionals
//---------------------------------------------------------------------------//

struct SnrReport
{
    std::optional<double> r0;     // delta' Sigma^{-1} delta
    double r1 = 0.0;              // |delta|^4 / (delta' Sigma delta)
    std::optional<double> kappa;  // |delta_dd|_inf / |delta_dd|, delta_dd = Sigma^{-1/2} delta
    double zeta = 0.0;            // (s/n) log(e p / s)
    std::optional<double> dyn_range;
    std::optional<double> riesz_2s;
};

/// Largest |x_j| over smallest nonzero |x_j|; absent for the zero vector.
inline std::optional<double> effective_dynamic_range(const Vector& x)
{
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < x.size(); ++j) {
        const double a = std::abs(x(j));
        if (a > 0.0) {
            hi = std::max(hi, a);
            lo = std::min(lo, a);
        }
    }
    if (hi == 0.0)
        return std::nullopt;
    return hi / lo;
}

/// Ratio of the largest to the smallest k-sparse eigenvalue of sigma, by
/// enumerating all supports of size min(k, p). Absent beyond `cap` supports.
inline std::optional<double>
sparse_riesz_constant(const Matrix& sigma, Index k, std::uint64_t cap = 1'000'000)
{
    const Index p = sigma.rows();
    k = std::min(k, p);
    if (k < 1)
        throw InvalidInput("sparsity must be at least 1");
    if (binomial(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(k)) > cap)
        return std::nullopt;
    double lmax = -std::numeric_limits<double>::infinity();
    double lmin = std::numeric_limits<double>::infinity();
    Support s = first_combination(k);
    Matrix sub(k, k);
    do {
        for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b)
                sub(a, b) = sigma(s[a], s[b]);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(sub, Eigen::EigenvaluesOnly);
        lmax = std::max(lmax, solver.eigenvalues()(k - 1));
        lmin = std::min(lmin, solver.eigenvalues()(0));
    } while (next_combination(s, p));
    if (!(lmin > 0.0))
        return std::numeric_limits<double>::infinity();
    return lmax / lmin;
}

inline double zeta(Index s, Index n, Index p)
{
    const double sd = static_cast<double>(s);
    return sd / static_cast<double>(n) *
           std::log(std::numbers::e * static_cast<double>(p) / sd);
}

inline SnrReport
snr_report(const MixtureParams& theta, Index n, std::uint64_t riesz_cap = 1'000'000)
{
    theta.validate();
    if (n < 1)
        throw InvalidInput("sample size must be positive");
    const Vector delta = theta.delta_mu();
    SnrReport r;
    const double quad = delta.dot(theta.sigma * delta);
    const double norm2 = delta.squaredNorm();
    r.r1 = quad > 0.0 ? norm2 * norm2 / quad : 0.0;
    try {
        const auto roots = covariance_roots(theta.sigma);
        const Vector dd = roots.inv_sqrt * delta;
        r.r0 = dd.squaredNorm();
        const double dd_norm = dd.norm();
        r.kappa = dd_norm > 0.0 ? dd.cwiseAbs().maxCoeff() / dd_norm : 0.0;
    } catch (const SingularCovariance&) {
        // r0 and kappa need Sigma^{-1}; the other functionals do not
    }
    r.zeta = zeta(theta.s, n, theta.dim());
    r.dyn_range = effective_dynamic_range(delta);
    r.riesz_2s = sparse_riesz_constant(theta.sigma, 2 * theta.s, riesz_cap);
    return r;
}

}  // namespace sparsemix
