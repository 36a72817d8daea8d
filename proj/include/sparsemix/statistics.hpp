#pragma once

#include <string>

#include "sparsemix/core.hpp"
#include "sparsemix/sparse_search.hpp"
#include "sparsemix/stats_moment.hpp"
#include "sparsemix/stats_spectral.hpp"

namespace sparsemix {

/// Everything a statistic may need besides the data and covariance.
struct StatOptions
{
    Index s = 1;
    SearchConfig search;
    MdpOptions mdp;
};

/// Statistics that standardize by a known covariance.
constexpr bool requires_known_sigma(StatId id)
{
    switch (id) {
        case StatId::top_eig:
        case StatId::sparse_eig:
        case StatId::sparse_eig_plain:
        case StatId::canonical:
        case StatId::canonical_kth:
        case StatId::mdp: return true;
        default: return false;
    }
}

/// Statistics whose value depends on the sparsity level s.
constexpr bool uses_sparsity(StatId id)
{
    switch (id) {
        case StatId::sparse_eig:
        case StatId::sparse_eig_plain:
        case StatId::diag_ratio:
        case StatId::canonical_kth:
        case StatId::mdp:
        case StatId::kurtosis:
        case StatId::abs1:
        case StatId::skewness:
        case StatId::signed2: return true;
        default: return false;
    }
}

constexpr RejectionSide rejection_side(StatId id)
{
    return id == StatId::kurtosis ? RejectionSide::lower : RejectionSide::upper;
}

/// Statistics usable when the covariance is unknown (their null law does
/// not involve Sigma, for diag-ratio as long as Sigma is diagonal).
inline std::string unknown_sigma_statistics()
{
    std::string out;
    for (StatId id : kAllStats) {
        if (requires_known_sigma(id))
            continue;
        if (!out.empty())
            out += ", ";
        out += to_string(id);
    }
    return out;
}

/// Evaluate statistic `id`. Known-covariance statistics use `sigma` when
/// given, else the dataset's attached covariance.
inline StatValue compute_stat(StatId id, const Dataset& d, const Matrix* sigma,
                              const StatOptions& opts = {})
{
    if (!sigma && d.known_sigma())
        sigma = &*d.known_sigma();
    if (requires_known_sigma(id) && !sigma)
        throw InvalidInput("statistic '" + std::string(to_string(id)) +
                           "' needs a known covariance; without one use: " +
                           unknown_sigma_statistics());
    const Index s = opts.s;
    switch (id) {
        case StatId::top_eig: return top_eig_stat(d, *sigma);
        case StatId::sparse_eig: return sparse_eig_stat(d, *sigma, s, opts.search);
        case StatId::sparse_eig_plain: return sparse_eig_stat_plain(d, *sigma, s, opts.search);
        case StatId::diag_ratio: return diag_ratio_stat(d, s, opts.search);
        case StatId::canonical: return canonical_max_stat(d, sigma->diagonal());
        case StatId::canonical_kth: return canonical_kth_stat(d, sigma->diagonal(), s);
        case StatId::mdp: return mdp_stat(d, *sigma, s, opts.mdp);
        case StatId::kurtosis: return sparse_moment_stat(d, s, MomentKind::kurtosis, opts.search);
        case StatId::abs1: return sparse_moment_stat(d, s, MomentKind::abs1, opts.search);
        case StatId::skewness: return sparse_moment_stat(d, s, MomentKind::skewness, opts.search);
        case StatId::signed2: return sparse_moment_stat(d, s, MomentKind::signed2, opts.search);
        case StatId::coord_abs1: return coord_stat_value(d, MomentKind::abs1);
        case StatId::coord_signed2: return coord_stat_value(d, MomentKind::signed2);
    }
    throw InvalidInput("unknown statistic");
}

/// Analytic critical value where one is stated, for reporting.
inline std::optional<double> analytic_threshold(StatId id, Index n, Index p, Index s)
{
    switch (id) {
        case StatId::top_eig: return top_eig_threshold(n, p);
        case StatId::canonical: return canonical_variance_threshold(n, p);
        case StatId::sparse_eig: return sparse_eig_null_bound(n, p, s);
        default: return std::nullopt;
    }
}

}  // namespace sparsemix
