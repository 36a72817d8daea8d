#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "sparsemix/core.hpp"
#include "sparsemix/sparse_search.hpp"

namespace sparsemix {

/*!
 * Projection moment ratios of y = (X_i - Xbar)'u, normalized so the values
 * under a Gaussian null are the interpretable constants:
 *   kurtosis  n sum y^4 / (sum y^2)^2            -> 3        (reject small)
 *   abs1      sum |y| / sqrt(n sum y^2)          -> sqrt(2/pi) (reject large)
 *   skewness  sqrt(n) sum y^3 / (sum y^2)^{3/2}  -> 0        (reject large)
 *   signed2   sum y^2 sign(y) / sum y^2          -> 0        (reject large)
 */
enum class MomentKind { kurtosis, abs1, skewness, signed2 };

constexpr RejectionSide rejection_side(MomentKind kind)
{
    return kind == MomentKind::kurtosis ? RejectionSide::lower : RejectionSide::upper;
}

constexpr StatId stat_id(MomentKind kind)
{
    switch (kind) {
        case MomentKind::kurtosis: return StatId::kurtosis;
        case MomentKind::abs1: return StatId::abs1;
        case MomentKind::skewness: return StatId::skewness;
        case MomentKind::signed2: return StatId::signed2;
    }
    return StatId::abs1;
}

constexpr bool is_odd(MomentKind kind)
{
    return kind == MomentKind::skewness || kind == MomentKind::signed2;
}

inline double sign0(double v)
{
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

/// Sum of squares below which a projection counts as constant.
inline double degeneracy_floor(const Matrix& x)
{
    const double scale = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    const double tiny = 1e-12 * scale;
    return static_cast<double>(x.rows()) * tiny * tiny;
}

/// Moment ratio of a centered projection y, with d(ratio)/dy written to dy.
/// `sign` = -1 negates value and gradient. NaN when sum y^2 <= floor.
struct MomentPhi
{
    MomentKind kind;
    double sign = 1.0;
    double floor = 0.0;

    double operator()(const Vector& y, Vector& dy) const
    {
        const double n = static_cast<double>(y.size());
        const double q2 = y.squaredNorm();
        if (!(q2 > floor) || q2 == 0.0) {
            dy.setZero();
            return std::numeric_limits<double>::quiet_NaN();
        }
        double v = 0.0;
        switch (kind) {
            case MomentKind::kurtosis: {
                const double q4 = y.array().square().square().sum();
                v = n * q4 / (q2 * q2);
                dy = (4.0 * n / (q2 * q2)) * y.array().cube().matrix() -
                     (4.0 * n * q4 / (q2 * q2 * q2)) * y;
                break;
            }
            case MomentKind::abs1: {
                const double q1 = y.cwiseAbs().sum();
                const double denom = std::sqrt(n * q2);
                v = q1 / denom;
                dy = y.unaryExpr([](double t) { return sign0(t); }) / denom -
                     (q1 / (denom * q2)) * y;
                break;
            }
            case MomentKind::skewness: {
                const double q3 = y.array().cube().sum();
                const double q2_15 = q2 * std::sqrt(q2);
                v = std::sqrt(n) * q3 / q2_15;
                dy = (3.0 * std::sqrt(n) / q2_15) * y.array().square().matrix() -
                     (3.0 * std::sqrt(n) * q3 / (q2_15 * q2)) * y;
                break;
            }
            case MomentKind::signed2: {
                const Vector absy = y.cwiseAbs();
                const double s2 = y.dot(absy);
                v = s2 / q2;
                dy = (2.0 / q2) * absy - (2.0 * s2 / (q2 * q2)) * y;
                break;
            }
        }
        if (sign != 1.0) {
            v *= sign;
            dy *= sign;
        }
        return v;
    }
};

/// Moment ratio of the data projected on u (centered at the sample mean).
inline double moment_ratio(const Vector& u, const Dataset& d, MomentKind kind)
{
    if (u.size() != d.p())
        throw InvalidInput("direction does not match the data dimension");
    const Vector y = centered_data(d) * u;
    Vector dy(y.size());
    const double floor = degeneracy_floor(d.data() * u.asDiagonal());
    const double v = MomentPhi{kind, 1.0, floor}(y, dy);
    if (!std::isfinite(v))
        throw DegenerateProjection("projected data are constant; moment ratio is 0/0");
    return v;
}

/// Extremum of the moment ratio over s-sparse unit directions (min for
/// kurtosis, max otherwise).
inline StatValue
sparse_moment_stat(const Dataset& d, Index s, MomentKind kind, const SearchConfig& cfg = {})
{
    if (s < 1)
        throw InvalidInput("sparsity must be at least 1");
    const Matrix xc = centered_data(d);
    const double sign = kind == MomentKind::kurtosis ? -1.0 : 1.0;
    const ProjectionObjective obj(xc, MomentPhi{kind, sign, degeneracy_floor(d.data())});
    SearchResult r = maximize_smooth(obj, d.p(), s, cfg);
    StatValue out;
    out.stat_id = stat_id(kind);
    out.value = sign * r.value;
    out.direction = std::move(r.direction);
    out.support = std::move(r.support);
    out.rejection_side = rejection_side(kind);
    return out;
}

//---------------------------------------------------------------------------//
// Coordinate-wise statistics
//---------------------------------------------------------------------------//

struct CoordStats
{
    std::vector<std::optional<double>> values;  // absent for constant columns
    double max = 0.0;
    Index argmax = 0;  // smallest j attaining the max
};

/*!
 * T_{1,j} = sum_i |X_ij - Xbar_j| / sqrt(sigmahat_jj)               (abs1)
 * T_{2,j} = | sum_i (X_ij - Xbar_j)^2 sign(X_ij - Xbar_j) | / sigmahat_jj (signed2)
 *
 * These are unnormalized by n: T_{1,j} is about n sqrt(2/pi) under the null.
 */
inline CoordStats coord_stats(const Dataset& d, MomentKind kind)
{
    if (kind != MomentKind::abs1 && kind != MomentKind::signed2)
        throw InvalidInput("coordinate statistics are defined for abs1 and signed2");
    const Matrix xc = centered_data(d);
    const double n = static_cast<double>(d.n());
    CoordStats out;
    out.values.resize(static_cast<std::size_t>(d.p()));
    bool any = false;
    for (Index j = 0; j < d.p(); ++j) {
        const auto col = xc.col(j);
        const double q2 = col.squaredNorm();
        const double scale = d.data().col(j).cwiseAbs().maxCoeff();
        if (!(q2 > n * std::pow(1e-12 * scale, 2)) || q2 == 0.0)
            continue;
        const double var = q2 / n;
        double t = 0.0;
        if (kind == MomentKind::abs1)
            t = col.cwiseAbs().sum() / std::sqrt(var);
        else
            t = std::abs(col.dot(col.cwiseAbs())) / var;
        out.values[static_cast<std::size_t>(j)] = t;
        if (!any || t > out.max) {
            out.max = t;
            out.argmax = j;
            any = true;
        }
    }
    if (!any)
        throw DegenerateProjection("every column of the data is constant");
    return out;
}

inline StatValue coord_stat_value(const Dataset& d, MomentKind kind)
{
    const auto cs = coord_stats(d, kind);
    StatValue out;
    out.stat_id = kind == MomentKind::abs1 ? StatId::coord_abs1 : StatId::coord_signed2;
    out.value = cs.max;
    out.support = {cs.argmax};
    out.rejection_side = RejectionSide::upper;
    return out;
}

}  // namespace sparsemix
