#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsemix/calibration.hpp"
#include "sparsemix/core.hpp"
#include "sparsemix/sparse_search.hpp"
#include "sparsemix/stats_moment.hpp"
#include "sparsemix/stats_spectral.hpp"

namespace sparsemix {

enum class Estimator { spectral, sym, asym, canonical, coord_abs1, coord_signed2 };

constexpr std::string_view to_string(Estimator e)
{
    switch (e) {
        case Estimator::spectral: return "spectral";
        case Estimator::sym: return "sym";
        case Estimator::asym: return "asym";
        case Estimator::canonical: return "canonical";
        case Estimator::coord_abs1: return "coord-abs1";
        case Estimator::coord_signed2: return "coord-signed2";
    }
    return "unknown";
}

inline Estimator parse_estimator(std::string_view name)
{
    for (Estimator e : {Estimator::spectral, Estimator::sym, Estimator::asym,
                        Estimator::canonical, Estimator::coord_abs1, Estimator::coord_signed2})
        if (to_string(e) == name)
            return e;
    throw InvalidInput("unknown estimator '" + std::string(name) +
                       "'; valid: spectral, sym, asym, canonical, coord-abs1, coord-signed2");
}

/// Estimated support (0-based, sorted, unique) and the direction behind it.
struct SupportEstimate
{
    Support indices;
    std::optional<Vector> direction;
    Estimator estimator = Estimator::spectral;
};

/// Indices j with |v_j| > 1e-10 * |v|_inf.
inline Support numerical_support(const Vector& v)
{
    Support out;
    const double vmax = v.cwiseAbs().maxCoeff();
    if (!(vmax > 0.0))
        return out;
    for (Index j = 0; j < v.size(); ++j)
        if (std::abs(v(j)) > 1e-10 * vmax)
            out.push_back(j);
    return out;
}

/// supp(Sigma^{1/2} u) for the maximizer u of the sparse eigenvalue statistic.
inline SupportEstimate
select_spectral(const Dataset& d, const Matrix& sigma, Index s, const SearchConfig& cfg = {})
{
    const StatValue st = sparse_eig_stat(d, sigma, s, cfg);
    const Vector v = covariance_roots(sigma).sqrt * *st.direction;
    SupportEstimate out;
    out.indices = numerical_support(v);
    out.direction = st.direction;
    out.estimator = Estimator::spectral;
    return out;
}

/// Maximizer of [abs1(u) - sqrt(2/pi)] * (sum_i y_i^2)^2 with y = Xc u,
/// abs1 in its sqrt(n) normalization. The bracket is not clipped at zero.
struct SymSelectionPhi
{
    double floor = 0.0;

    double operator()(const Vector& y, Vector& dy) const
    {
        Vector dratio(y.size());
        const double ratio = MomentPhi{MomentKind::abs1, 1.0, floor}(y, dratio);
        if (!std::isfinite(ratio)) {
            dy.setZero();
            return ratio;
        }
        const double q2 = y.squaredNorm();
        const double bracket = ratio - std::sqrt(2.0 / std::numbers::pi);
        dy = (q2 * q2) * dratio + (4.0 * bracket * q2) * y;
        return bracket * q2 * q2;
    }
};

/// sum_i |y_i|: the simpler estimator suited to strong signals.
struct AbsSumPhi
{
    double operator()(const Vector& y, Vector& dy) const
    {
        dy = y.unaryExpr([](double t) { return sign0(t); });
        return y.cwiseAbs().sum();
    }
};

/// [sum_i y_i^2 sign(y_i)] * [sum_i y_i^2]^{1/2}.
struct AsymSelectionPhi
{
    double floor = 0.0;

    double operator()(const Vector& y, Vector& dy) const
    {
        const double q2 = y.squaredNorm();
        if (!(q2 > floor) || q2 == 0.0) {
            dy.setZero();
            return std::numeric_limits<double>::quiet_NaN();
        }
        const Vector absy = y.cwiseAbs();
        const double s2 = y.dot(absy);
        const double root = std::sqrt(q2);
        dy = (2.0 * root) * absy + (s2 / root) * y;
        return s2 * root;
    }
};

enum class SymVariant { normalized, abs_sum };

namespace detail {

template <class Phi>
SupportEstimate select_by_objective(const Dataset& d, Index s, Phi phi, Estimator tag,
                                    const SearchConfig& cfg)
{
    if (s < 1)
        throw InvalidInput("sparsity must be at least 1");
    const Matrix xc = centered_data(d);
    const ProjectionObjective obj(xc, std::move(phi));
    SearchResult r = maximize_smooth(obj, d.p(), s, cfg);
    SupportEstimate out;
    out.indices = numerical_support(r.direction);
    out.direction = std::move(r.direction);
    out.estimator = tag;
    return out;
}

}  // namespace detail

inline SupportEstimate select_sym_moment(const Dataset& d, Index s, const SearchConfig& cfg = {},
                                         SymVariant variant = SymVariant::normalized)
{
    if (variant == SymVariant::abs_sum)
        return detail::select_by_objective(d, s, AbsSumPhi{}, Estimator::sym, cfg);
    return detail::select_by_objective(d, s, SymSelectionPhi{degeneracy_floor(d.data())},
                                       Estimator::sym, cfg);
}

inline SupportEstimate select_asym_moment(const Dataset& d, Index s, const SearchConfig& cfg = {})
{
    return detail::select_by_objective(d, s, AsymSelectionPhi{degeneracy_floor(d.data())},
                                       Estimator::asym, cfg);
}

/// {j : sigmahat_jj / sigma_jj > 1 + 5 max(sqrt(log p / n), log p / n)}.
inline SupportEstimate select_canonical(const Dataset& d, const Vector& sigma_diag)
{
    const auto cv = canonical_variance_stats(d, sigma_diag);
    const double threshold = canonical_variance_threshold(d.n(), d.p());
    SupportEstimate out;
    out.estimator = Estimator::canonical;
    for (Index j = 0; j < d.p(); ++j)
        if (cv.ratios(j) > threshold)
            out.indices.push_back(j);
    return out;
}

/// Calibration key of the single-coordinate null quantile at level alpha / p.
inline CalibrationKey coord_bonferroni_key(MomentKind kind, Index n, Index p, double alpha)
{
    const StatId id = kind == MomentKind::abs1 ? StatId::coord_abs1 : StatId::coord_signed2;
    return CalibrationKey::make(id, n, 1, 0, bonferroni_level(alpha, static_cast<std::uint64_t>(p)));
}

/// Request that produces the entry select_coord_bonferroni needs.
inline CalibrationRequest
coord_bonferroni_request(MomentKind kind, Index n, Index p, double alpha, int reps,
                         std::uint64_t seed)
{
    CalibrationRequest req;
    req.stat = kind == MomentKind::abs1 ? StatId::coord_abs1 : StatId::coord_signed2;
    req.n = n;
    req.p = 1;
    req.s = 0;
    req.alpha = bonferroni_level(alpha, static_cast<std::uint64_t>(p));
    req.reps = reps;
    req.seed = seed;
    req.covariance_known = false;
    return req;
}

/// {j : T_j > q^{-1}(alpha / p)} with the single-coordinate null quantile
/// looked up in `calib`.
inline SupportEstimate select_coord_bonferroni(const Dataset& d, MomentKind kind, double alpha,
                                               const CalibrationTable& calib)
{
    const CalibrationKey key = coord_bonferroni_key(kind, d.n(), d.p(), alpha);
    const CalibrationEntry* entry = calib.find(key);
    if (!entry)
        throw MissingCalibration("no single-coordinate calibration for " + key.describe() +
                                 "; run `sparsemix calibrate --stat " +
                                 std::string(to_string(key.stat)) + " --n " +
                                 std::to_string(d.n()) + " --p 1 --alpha " +
                                 format_compact(key.level) + " --out calib.csv`");
    const auto cs = coord_stats(d, kind);
    SupportEstimate out;
    out.estimator = kind == MomentKind::abs1 ? Estimator::coord_abs1 : Estimator::coord_signed2;
    for (Index j = 0; j < d.p(); ++j) {
        const auto& t = cs.values[static_cast<std::size_t>(j)];
        if (t && *t > entry->critical)
            out.indices.push_back(j);
    }
    return out;
}

/// |J_hat symmetric-difference J| / |J|.
inline double selection_error(const Support& estimate, const Support& truth)
{
    if (truth.empty())
        throw InvalidInput("selection error needs a nonempty true support");
    Support a = estimate;
    Support b = truth;
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    Support diff;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                  std::back_inserter(diff));
    return static_cast<double>(diff.size()) / static_cast<double>(b.size());
}

inline double selection_error(const SupportEstimate& estimate, const Support& truth)
{
    return selection_error(estimate.indices, truth);
}

}  // namespace sparsemix
