#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sparsemix/core.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/rng.hpp"

namespace sparsemix {

/*!
 * Controls for maximization over s-sparse unit directions.
 *
 * Supports are enumerated exhaustively; `restarts`, `grad_tol`, `max_iter`
 * and `seed` only affect non-quadratic objectives. Ties between supports go
 * to the lexicographically smallest support.
 */
struct SearchConfig
{
    std::uint64_t enumeration_cap = 200'000;
    int restarts = 8;
    double grad_tol = 1e-8;
    int max_iter = 500;
    std::uint64_t seed = 0x5eed;
    unsigned threads = 1;

    void validate() const
    {
        if (restarts < 1)
            throw InvalidInput("restarts must be >= 1");
        if (enumeration_cap < 1)
            throw InvalidInput("enumeration_cap must be >= 1");
        if (max_iter < 1)
            throw InvalidInput("max_iter must be >= 1");
    }
};

struct SearchResult
{
    double value = -std::numeric_limits<double>::infinity();
    Vector direction;  // unit vector in R^p supported on `support`
    Support support;
};

/// All size-min(s,p) subsets of {0..p-1} in lexicographic order.
/// Throws InfeasibleEnumeration instead of truncating when C(p,s) > cap.
inline std::vector<Support>
enumerate_supports(Index p, Index s, std::uint64_t cap = SearchConfig{}.enumeration_cap)
{
    if (p < 1 || s < 1)
        throw InvalidInput("enumerate_supports needs p >= 1 and s >= 1");
    s = std::min(s, p);
    const std::uint64_t count =
        binomial(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s));
    if (count > cap)
        throw InfeasibleEnumeration(
            "C(" + std::to_string(p) + "," + std::to_string(s) + ") supports exceed the " +
            "enumeration cap of " + std::to_string(cap) +
            "; use a coordinate-wise statistic (canonical, coord-abs1, coord-signed2) or "
            "the MDP relaxation instead");
    std::vector<Support> out;
    out.reserve(static_cast<std::size_t>(count));
    Support cur = first_combination(s);
    do {
        out.push_back(cur);
    } while (next_combination(cur, p));
    return out;
}

namespace detail {

inline Matrix principal_submatrix(const Matrix& m, const Support& s)
{
    const auto k = static_cast<Index>(s.size());
    Matrix sub(k, k);
    for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b)
            sub(a, b) = m(s[a], s[b]);
    return sub;
}

inline Vector embed(const Vector& w, const Support& s, Index p)
{
    Vector u = Vector::Zero(p);
    for (std::size_t a = 0; a < s.size(); ++a)
        u(s[a]) = w(static_cast<Index>(a));
    return u;
}

// Flip so the first nonzero coordinate is positive.
inline void canonicalize_sign(Vector& v)
{
    for (Index i = 0; i < v.size(); ++i) {
        if (v(i) != 0.0) {
            if (v(i) < 0.0)
                v = -v;
            return;
        }
    }
}

// Lexicographic reduction: a later support replaces only on a strictly
// larger value, so the result does not depend on evaluation order.
inline SearchResult reduce_results(std::vector<SearchResult>& per_support)
{
    SearchResult best;
    bool found = false;
    for (auto& r : per_support) {
        if (!std::isfinite(r.value))
            continue;
        if (!found || r.value > best.value) {
            best = std::move(r);
            found = true;
        }
    }
    if (!found)
        best.value = std::numeric_limits<double>::quiet_NaN();
    return best;
}

}  // namespace detail

/// max over supports S of lambda_max(M_SS), with its eigenvector.
inline SearchResult
maximize_quadratic(const Matrix& m, Index s, const SearchConfig& cfg = {})
{
    cfg.validate();
    if (m.rows() != m.cols())
        throw InvalidInput("maximize_quadratic needs a square matrix");
    const Index p = m.rows();
    const auto supports = enumerate_supports(p, s, cfg.enumeration_cap);
    std::vector<SearchResult> results(supports.size());
    parallel_for(supports.size(), cfg.threads, [&](std::size_t k) {
        const Support& sup = supports[k];
        SearchResult& r = results[k];
        r.support = sup;
        if (sup.size() == 1) {
            r.value = m(sup[0], sup[0]);
            r.direction = Vector::Zero(p);
            r.direction(sup[0]) = 1.0;
            return;
        }
        const auto solver = sym_eigen(detail::principal_submatrix(m, sup));
        const Index top = static_cast<Index>(sup.size()) - 1;
        r.value = solver.eigenvalues()(top);
        r.direction = detail::embed(solver.eigenvectors().col(top), sup, p);
        r.direction.normalize();
        detail::canonicalize_sign(r.direction);
    });
    return detail::reduce_results(results);
}

/*!
 * max over supports S of the generalized top eigenvalue of (A_SS, B_SS),
 * i.e. max w'A_SS w subject to w'B_SS w = 1.
 *
 * The returned direction is the generalized eigenvector embedded in R^p and
 * rescaled to unit Euclidean norm. Supports whose B_SS is not positive
 * definite are skipped with a warning.
 */
inline SearchResult
maximize_generalized(const Matrix& a, const Matrix& b, Index s, const SearchConfig& cfg = {})
{
    cfg.validate();
    if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() != a.cols())
        throw InvalidInput("maximize_generalized needs square matrices of equal size");
    const Index p = a.rows();
    const auto supports = enumerate_supports(p, s, cfg.enumeration_cap);
    std::vector<SearchResult> results(supports.size());
    std::vector<char> skipped(supports.size(), 0);
    parallel_for(supports.size(), cfg.threads, [&](std::size_t k) {
        const Support& sup = supports[k];
        SearchResult& r = results[k];
        r.support = sup;
        const Matrix bs = detail::principal_submatrix(b, sup);
        Eigen::LLT<Matrix> llt(bs);
        const double bscale = bs.diagonal().cwiseAbs().maxCoeff();
        if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() >
                                              1e-14 * std::sqrt(std::max(bscale, 0.0)))) {
            skipped[k] = 1;
            r.value = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        const Matrix as = detail::principal_submatrix(a, sup);
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(as, bs);
        if (solver.info() != Eigen::Success) {
            skipped[k] = 1;
            r.value = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        const Index top = static_cast<Index>(sup.size()) - 1;
        r.value = solver.eigenvalues()(top);
        r.direction = detail::embed(solver.eigenvectors().col(top), sup, p);
        r.direction.normalize();
        detail::canonicalize_sign(r.direction);
    });
    std::size_t n_skipped = 0;
    for (char c : skipped)
        n_skipped += static_cast<std::size_t>(c);
    if (n_skipped == supports.size())
        throw SingularCovariance("B_SS is singular on every support");
    if (n_skipped > 0)
        warn("maximize_generalized skipped " + std::to_string(n_skipped) +
             " supports with singular B_SS");
    return detail::reduce_results(results);
}

//---------------------------------------------------------------------------//
// Smooth objectives on the sphere
//---------------------------------------------------------------------------//

/*!
 * An objective over sparse directions. `bind(S)` returns a callable
 * f(w, grad) -> value for w in R^|S| (the coordinates on S) that writes the
 * Euclidean gradient into grad. Non-finite values mark invalid points.
 */
template <class T>
concept SparseObjective = requires(const T& obj, const Support& s) {
    obj.bind(s);
};

namespace detail {

template <class Bound>
struct AscentResult
{
    double value;
    Vector w;
};

// Projected gradient ascent on the unit sphere: step along the tangential
// gradient, renormalize, adapt the step on success/failure.
template <class Bound>
AscentResult<Bound> sphere_ascent(const Bound& f, Vector w, double value, Vector grad,
                                  const SearchConfig& cfg)
{
    const Index k = w.size();
    Vector trial(k);
    Vector trial_grad(k);
    Vector tangent = grad - grad.dot(w) * w;
    double tnorm = tangent.norm();
    double step = tnorm > 0.0 ? 0.1 / tnorm : 0.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (tnorm <= cfg.grad_tol * std::max(1.0, std::abs(value)))
            break;
        bool improved = false;
        while (step * tnorm > 1e-15) {
            trial = w + step * tangent;
            trial.normalize();
            const double v = f(trial, trial_grad);
            if (std::isfinite(v) && v > value) {
                w = trial;
                value = v;
                grad = trial_grad;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved)
            break;
        tangent = grad - grad.dot(w) * w;
        const double new_tnorm = tangent.norm();
        // keep the step length in angle roughly constant as |grad| changes
        if (new_tnorm > 0.0)
            step *= std::min(4.0, tnorm / new_tnorm);
        tnorm = new_tnorm;
    }
    return {value, std::move(w)};
}

}  // namespace detail

/*!
 * Maximize a smooth objective over unit vectors with at most s nonzeros.
 *
 * Every support of size min(s, p) is searched. For s = 1 the search is exact
 * (both signs of every coordinate). Otherwise, per support, ascent starts
 * from the best signed coordinate direction and from `restarts` Gaussian
 * random directions drawn from a stream keyed by (cfg.seed, support rank).
 * The result is a lower bound on the true maximum.
 */
template <SparseObjective Objective>
SearchResult maximize_smooth(const Objective& obj, Index p, Index s, const SearchConfig& cfg = {})
{
    cfg.validate();
    const auto supports = enumerate_supports(p, s, cfg.enumeration_cap);
    std::vector<SearchResult> results(supports.size());
    parallel_for(supports.size(), cfg.threads, [&](std::size_t rank) {
        const Support& sup = supports[rank];
        const auto k = static_cast<Index>(sup.size());
        const auto f = obj.bind(sup);
        SearchResult& r = results[rank];
        r.support = sup;
        r.value = -std::numeric_limits<double>::infinity();

        Vector w(k);
        Vector grad(k);
        Vector best_w;
        double best = -std::numeric_limits<double>::infinity();
        Vector best_grad;
        // signed coordinate directions: exhaustive for k == 1, warm start otherwise
        for (Index j = 0; j < k; ++j) {
            for (double sign : {1.0, -1.0}) {
                w.setZero();
                w(j) = sign;
                const double v = f(w, grad);
                if (std::isfinite(v) && v > best) {
                    best = v;
                    best_w = w;
                    best_grad = grad;
                }
            }
        }
        if (k > 1) {
            if (std::isfinite(best)) {
                auto res = detail::sphere_ascent(f, best_w, best, best_grad, cfg);
                best = res.value;
                best_w = std::move(res.w);
            }
            RandomStream rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(rank)}));
            for (int rs = 0; rs < cfg.restarts; ++rs) {
                for (Index j = 0; j < k; ++j)
                    w(j) = rng.normal();
                const double nrm = w.norm();
                if (!(nrm > 0.0))
                    continue;
                w /= nrm;
                const double v = f(w, grad);
                if (!std::isfinite(v))
                    continue;
                auto res = detail::sphere_ascent(f, w, v, grad, cfg);
                if (res.value > best) {
                    best = res.value;
                    best_w = std::move(res.w);
                }
            }
        }
        if (std::isfinite(best)) {
            r.value = best;
            r.direction = detail::embed(best_w, sup, p);
        }
    });
    SearchResult best = detail::reduce_results(results);
    if (!std::isfinite(best.value))
        throw DegenerateProjection(
            "objective is not finite at any start on any support (degenerate data?)");
    return best;
}

/*!
 * Objective of the form f(u) = phi(Xc u), where Xc is a fixed n x p matrix
 * (centered data) and phi maps the projection y in R^n to a value and its
 * gradient with respect to y: `double phi(const Vector& y, Vector& dy)`.
 */
template <class Phi>
class ProjectionObjective
{
  public:
    ProjectionObjective(const Matrix& x, Phi phi) : x_(&x), phi_(std::move(phi)) {}

    class Bound
    {
      public:
        Bound(Matrix xs, const Phi* phi)
            : xs_(std::move(xs)), phi_(phi), y_(xs_.rows()), dy_(xs_.rows())
        {
        }

        double operator()(const Vector& w, Vector& grad) const
        {
            y_.noalias() = xs_ * w;
            const double v = (*phi_)(y_, dy_);
            grad.noalias() = xs_.transpose() * dy_;
            return v;
        }

      private:
        Matrix xs_;
        const Phi* phi_;
        mutable Vector y_;
        mutable Vector dy_;
    };

    Bound bind(const Support& s) const
    {
        Matrix xs(x_->rows(), static_cast<Index>(s.size()));
        for (std::size_t a = 0; a < s.size(); ++a)
            xs.col(static_cast<Index>(a)) = x_->col(s[a]);
        return Bound(std::move(xs), &phi_);
    }

  private:
    const Matrix* x_;
    Phi phi_;
};

/// Objective u'Mu restricted to supports (useful for checking the engine).
class QuadraticObjective
{
  public:
    explicit QuadraticObjective(const Matrix& m) : m_(&m) {}

    class Bound
    {
      public:
        explicit Bound(Matrix ms) : ms_(std::move(ms)) {}
        double operator()(const Vector& w, Vector& grad) const
        {
            grad.noalias() = 2.0 * (ms_ * w);
            return 0.5 * w.dot(grad);
        }

      private:
        Matrix ms_;
    };

    Bound bind(const Support& s) const { return Bound(detail::principal_submatrix(*m_, s)); }

  private:
    const Matrix* m_;
};

}  // namespace sparsemix
