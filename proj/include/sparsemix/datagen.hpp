#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sparsemix/core.hpp"
#include "sparsemix/io.hpp"
#include "sparsemix/rng.hpp"

namespace sparsemix {

struct Scenario
{
    MixtureParams params;
    Index n = 2;
    bool labels_wanted = false;
};

struct MixtureSample
{
    Dataset data;
    std::optional<std::vector<int>> labels;  // eta_i in {0, 1}
};

/// Sigma^{1/2} for sampling; eigendecomposition so singular psd Sigma works.
inline Matrix sampling_root(const Matrix& sigma)
{
    if (is_diagonal(sigma)) {
        if (sigma.diagonal().minCoeff() < 0.0)
            throw InvalidInput("sigma is not positive semidefinite");
        return sigma.diagonal().cwiseSqrt().asDiagonal();
    }
    return sym_sqrt(sigma);
}

/*!
 * Draw n observations X_i = mu0 + eta_i * delta_mu + Sigma^{1/2} Z_i with
 * eta_i ~ Bern(nu), so a row has mean mu1 with probability nu.
 *
 * Row i consumes one uniform for eta_i followed by p normals, all from the
 * stream seeded by `seed`. The known covariance of the returned dataset is
 * the scenario's Sigma.
 */
inline MixtureSample
sample_mixture(const Scenario& sc, std::uint64_t seed, const Matrix* root = nullptr)
{
    const MixtureParams& th = sc.params;
    th.validate();
    if (sc.n < 2)
        throw InvalidInput("scenario needs n >= 2");
    const Index p = th.dim();
    const Index n = sc.n;
    const Matrix own_root = root ? Matrix() : sampling_root(th.sigma);
    const Matrix& sroot = root ? *root : own_root;
    const Vector delta = th.delta_mu();
    const bool diagonal_root = is_diagonal(sroot);

    RandomStream rng(seed);
    Matrix z(n, p);
    std::vector<int> eta(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        eta[static_cast<std::size_t>(i)] = rng.bernoulli(th.nu) ? 1 : 0;
        for (Index j = 0; j < p; ++j)
            z(i, j) = rng.normal();
    }
    Matrix x = diagonal_root ? Matrix(z * sroot.diagonal().asDiagonal())
                             : Matrix(z * sroot);
    for (Index i = 0; i < n; ++i) {
        x.row(i) += th.mu0.transpose();
        if (eta[static_cast<std::size_t>(i)])
            x.row(i) += delta.transpose();
    }
    MixtureSample out{Dataset(std::move(x), th.sigma), std::nullopt};
    if (sc.labels_wanted)
        out.labels = std::move(eta);
    return out;
}

/// Delta mu with energy A spread evenly over the first s coordinates.
inline Vector paper_delta_mu(Index p, Index s, double amplitude)
{
    if (s < 1 || s > p)
        throw InvalidInput("need 1 <= s <= p");
    if (!(amplitude >= 0.0))
        throw InvalidInput("amplitude must be nonnegative");
    Vector d = Vector::Zero(p);
    d.head(s).setConstant(amplitude / std::sqrt(static_cast<double>(s)));
    return d;
}

/// I - c * mu mu^T; requires c |mu|^2 < 1 so the result is positive definite.
inline Matrix rank_one_deflated_sigma(const Vector& mu, double c)
{
    if (!(c * mu.squaredNorm() < 1.0))
        throw InvalidInput("c * |mu|^2 must be < 1 for a positive-definite covariance");
    return Matrix::Identity(mu.size(), mu.size()) - c * mu * mu.transpose();
}

inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// E|w t + z| with w = nu - eta, eta ~ Bern(nu), z ~ N(0,1).
inline double psi1(double t, double nu)
{
    if (!(t >= 0.0))
        throw InvalidInput("psi1 needs t >= 0");
    return 2.0 * nu * (1.0 - nu) * t * (normal_cdf((1.0 - nu) * t) - normal_cdf(-nu * t)) +
           2.0 * (1.0 - nu) * normal_pdf(nu * t) + 2.0 * nu * normal_pdf((1.0 - nu) * t);
}

/// Var|w t + z|.
inline double psi2(double t, double nu)
{
    const double m = psi1(t, nu);
    return nu * (1.0 - nu) * t * t + 1.0 - m * m;
}

//---------------------------------------------------------------------------//
// Scenario configuration
//---------------------------------------------------------------------------//

/*!
 * Covariance from a spec string:
 *   identity | diagonal:<v1,v2,...> | file:<path.csv> | deflated:<c>
 * `deflated:c` builds I - c * delta_mu delta_mu^T.
 */
inline Matrix sigma_from_spec(const std::string& spec, Index p, const Vector& delta_mu)
{
    const std::string s = trim(spec);
    if (s.empty() || s == "identity")
        return Matrix::Identity(p, p);
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw InvalidInput("unknown sigma spec '" + s + "'");
    const std::string kind = s.substr(0, colon);
    const std::string arg = s.substr(colon + 1);
    if (kind == "diagonal") {
        const auto v = parse_double_list(arg);
        if (static_cast<Index>(v.size()) != p)
            throw InvalidInput("diagonal sigma needs " + std::to_string(p) + " entries");
        Vector d(p);
        for (Index j = 0; j < p; ++j)
            d(j) = v[static_cast<std::size_t>(j)];
        return d.asDiagonal();
    }
    if (kind == "file") {
        Matrix m = read_covariance_csv(arg);
        if (m.rows() != p)
            throw InvalidInput("sigma file dimension does not match p");
        return m;
    }
    if (kind == "deflated")
        return rank_one_deflated_sigma(delta_mu, parse_double(arg));
    throw InvalidInput("unknown sigma spec kind '" + kind + "'");
}

/// Scenario from keys nu, p, n, s, amplitude, sigma; mu0 = 0 and
/// delta_mu = paper_delta_mu(p, s, amplitude).
inline Scenario scenario_from_config(const KeyValueConfig& cfg)
{
    Scenario sc;
    const Index p = cfg.get_int("p");
    const Index s = cfg.has("s") ? static_cast<Index>(cfg.get_int("s")) : 1;
    sc.n = cfg.get_int("n");
    const double amplitude = cfg.has("amplitude") ? cfg.get_double("amplitude") : 0.0;
    sc.params.nu = cfg.has("nu") ? cfg.get_double("nu") : 0.5;
    sc.params.s = s;
    const Vector delta = paper_delta_mu(p, s, amplitude);
    sc.params.mu0 = Vector::Zero(p);
    sc.params.mu1 = delta;
    sc.params.sigma = sigma_from_spec(cfg.get_or("sigma", "identity"), p, delta);
    sc.params.validate();
    if (sc.n < 2)
        throw InvalidInput("n must be at least 2");
    return sc;
}

}  // namespace sparsemix
