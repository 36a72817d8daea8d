#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "sparsemix/core.hpp"
#include "sparsemix/datagen.hpp"
#include "sparsemix/io.hpp"
#include "sparsemix/rng.hpp"

using namespace sparsemix;

namespace {

Matrix rows2(std::initializer_list<std::initializer_list<double>> rows)
{
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r)
            m(i, j++) = v;
        ++i;
    }
    return m;
}

}  // namespace

TEST(Rng, DeterministicAndDistinctStreams)
{
    RandomStream a(42), b(42), c(43);
    for (int k = 0; k < 100; ++k) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        (void)c;
    }
    EXPECT_NE(derive_seed(1, {0}), derive_seed(1, {1}));
    EXPECT_NE(derive_seed(1, {0, 1}), derive_seed(1, {1, 0}));
    EXPECT_EQ(derive_seed(9, {3, 4}), derive_seed(9, {3, 4}));
}

TEST(Rng, NormalMoments)
{
    RandomStream rng(7);
    const int n = 200000;
    double s1 = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(MixtureParams, Invariants)
{
    MixtureParams th;
    th.mu0 = Vector::Zero(3);
    th.mu1 = Vector::Zero(3);
    th.mu1(0) = 1.0;
    th.sigma = Matrix::Identity(3, 3);
    th.s = 1;
    EXPECT_NO_THROW(th.validate());

    auto bad = th;
    bad.nu = 1.0;
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = th;
    bad.mu1(1) = 2.0;  // two nonzeros with s = 1
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = th;
    bad.sigma(0, 1) = 0.1;  // asymmetric
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = th;
    bad.sigma = Matrix::Identity(3, 3);
    bad.sigma(0, 1) = bad.sigma(1, 0) = 2.0;  // indefinite
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = th;
    bad.sigma(2, 2) = -1.0;  // negative diagonal
    EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Dataset, Invariants)
{
    EXPECT_THROW(Dataset(Matrix::Zero(1, 3)), InvalidInput);
    EXPECT_THROW(Dataset(Matrix::Zero(3, 0)), InvalidInput);
    Matrix nan = Matrix::Zero(3, 2);
    nan(1, 1) = std::nan("");
    EXPECT_THROW(Dataset{nan}, InvalidInput);
    EXPECT_THROW(Dataset(Matrix::Zero(3, 2), Matrix::Identity(3, 3)), InvalidInput);
    const Dataset d(Matrix::Zero(4, 2));
    EXPECT_EQ(d.n(), 4);
    EXPECT_EQ(d.p(), 2);
}

TEST(StatId, RoundTrip)
{
    for (StatId id : kAllStats)
        EXPECT_EQ(parse_stat_id(to_string(id)), id);
    EXPECT_THROW(parse_stat_id("nope"), InvalidInput);
    EXPECT_EQ(parse_rejection_side("lower"), RejectionSide::lower);
}

TEST(SampleMoments, TwoPointExample)
{
    const auto m = sample_moments(Dataset(rows2({{1, 0}, {-1, 0}})));
    EXPECT_DOUBLE_EQ(m.mean(0), 0.0);
    EXPECT_DOUBLE_EQ(m.mean(1), 0.0);
    EXPECT_DOUBLE_EQ(m.cov(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.cov(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(m.cov(1, 1), 0.0);
}

TEST(SampleMoments, IdenticalRowsGiveZeroCovariance)
{
    Matrix x(5, 3);
    x.rowwise() = Eigen::RowVector3d(1.5, -2.0, 3.25);
    const auto m = sample_moments(Dataset(x));
    EXPECT_EQ(m.cov.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SampleMoments, MatchesLoopOracle)
{
    const Matrix x = oracle::gaussian_matrix(30, 4, 11);
    const auto m = sample_moments(Dataset(x));
    EXPECT_LT((m.cov - oracle::covariance(x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleMoments, ExactlyPermutationInvariant)
{
    const Matrix x = oracle::gaussian_matrix(50, 5, 12);
    Matrix y(50, 5);
    for (Index i = 0; i < 50; ++i)
        y.row(i) = x.row((i * 17 + 3) % 50);
    const auto a = sample_moments(Dataset(x));
    const auto b = sample_moments(Dataset(y));
    EXPECT_TRUE(a.mean == b.mean);
    EXPECT_TRUE(a.cov == b.cov);
}

TEST(SampleMoments, MixtureCovarianceIdentity)
{
    // Sigmahat ~ nu (1 - nu) dmu dmu' + I for a nu = 1/2 mixture.
    Scenario sc;
    sc.n = 100000;
    sc.params.nu = 0.5;
    sc.params.mu0 = Vector::Zero(3);
    sc.params.mu1 = Vector(3);
    sc.params.mu1 << 2.0, -1.0, 0.0;
    sc.params.s = 2;
    sc.params.sigma = Matrix::Identity(3, 3);
    const auto m = sample_moments(sample_mixture(sc, 5).data);
    const Vector dm = sc.params.delta_mu();
    const Matrix expect = 0.25 * dm * dm.transpose() + Matrix::Identity(3, 3);
    // std error of a covariance entry is about sqrt(S_aa S_bb + S_ab^2) / sqrt(n)
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b) {
            const double se = std::sqrt(expect(a, a) * expect(b, b) + expect(a, b) * expect(a, b)) /
                              std::sqrt(static_cast<double>(sc.n));
            EXPECT_NEAR(m.cov(a, b), expect(a, b), 5 * se) << a << "," << b;
        }
}

TEST(SampleMoments, NeedsTwoRows)
{
    EXPECT_THROW(sample_moments(Dataset(Matrix::Zero(1, 2))), InvalidInput);
}

TEST(Standardize, Examples)
{
    const Matrix x = oracle::gaussian_matrix(6, 3, 2);
    const Dataset d(x);
    EXPECT_LT((standardize(d, Matrix::Identity(3, 3)).data() - x).cwiseAbs().maxCoeff(), 1e-14);

    Matrix s = Matrix::Identity(2, 2);
    s(0, 0) = 4.0;
    const Dataset one(rows2({{2, 3}, {0, 0}}));
    const Matrix z = standardize(one, s).data();
    EXPECT_NEAR(z(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(z(0, 1), 3.0, 1e-14);
}

TEST(Standardize, RoundTripAndErrors)
{
    const Matrix sigma = oracle::random_spd(4, 21);
    const Matrix x = oracle::gaussian_matrix(10, 4, 22);
    const Matrix z = standardize(Dataset(x), sigma).data();
    const Matrix back = z * covariance_roots(sigma).sqrt;
    EXPECT_LT((back - x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff(), 1e-8);

    Matrix singular = Matrix::Identity(4, 4);
    singular(3, 3) = 0.0;
    EXPECT_THROW(standardize(Dataset(x), singular), SingularCovariance);
    Matrix indefinite = Matrix::Identity(4, 4);
    indefinite(2, 2) = -1.0;
    EXPECT_THROW(standardize(Dataset(x), indefinite), SingularCovariance);
}

TEST(Standardize, StandardizedDataHaveIdentityCovariance)
{
    const Matrix sigma = oracle::random_spd(3, 31);
    const Matrix root = covariance_roots(sigma).sqrt;
    const Matrix x = oracle::gaussian_matrix(100000, 3, 32) * root;
    const Matrix c = sample_moments(standardize(Dataset(x), sigma)).cov;
    const double se = std::sqrt(2.0 / 100000.0);
    EXPECT_LT((c - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 5 * se);
}

TEST(SymSqrt, ClipsTinyNegativeEigenvalues)
{
    std::string warned;
    set_warning_handler([&](const std::string& m) { warned = m; });
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1e-3;
    const Matrix r = sym_sqrt(a);
    EXPECT_NEAR(r(0, 0), 1.0, 1e-14);
    EXPECT_EQ(r(1, 1), 0.0);
    EXPECT_FALSE(warned.empty());
    set_warning_handler(nullptr);
}

TEST(SnrReport, IsotropicExample)
{
    MixtureParams th;
    th.mu0 = Vector::Zero(4);
    th.mu1 = Vector::Zero(4);
    th.mu1(0) = th.mu1(1) = 1.0 / std::sqrt(2.0);
    th.sigma = Matrix::Identity(4, 4);
    th.s = 2;
    const auto r = snr_report(th, 100);
    EXPECT_NEAR(*r.r0, 1.0, 1e-14);
    EXPECT_NEAR(r.r1, 1.0, 1e-14);
    EXPECT_NEAR(*r.kappa, 1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(*r.dyn_range, 1.0, 1e-14);
    EXPECT_NEAR(*r.riesz_2s, 1.0, 1e-12);
    EXPECT_NEAR(r.zeta, 2.0 / 100.0 * std::log(std::numbers::e * 2.0), 1e-15);
}

TEST(SnrReport, RieszConstantOfDiagonal)
{
    Matrix s = Matrix::Identity(3, 3);
    s(0, 0) = 2.0;
    EXPECT_NEAR(*sparse_riesz_constant(s, 2), 2.0, 1e-12);
    for (Index k = 1; k <= 3; ++k)
        EXPECT_NEAR(*sparse_riesz_constant(Matrix::Identity(5, 5), 2 * k), 1.0, 1e-12);
    EXPECT_FALSE(sparse_riesz_constant(Matrix::Identity(60, 60), 10).has_value());
}

TEST(SnrReport, ZeroSignalAndSingularSigma)
{
    MixtureParams th;
    th.mu0 = Vector::Zero(3);
    th.mu1 = Vector::Zero(3);
    th.sigma = Matrix::Identity(3, 3);
    th.sigma(2, 2) = 0.0;
    const auto r = snr_report(th, 10);
    EXPECT_FALSE(r.dyn_range.has_value());
    EXPECT_FALSE(r.r0.has_value());
    EXPECT_FALSE(r.kappa.has_value());
    EXPECT_EQ(r.r1, 0.0);
}

TEST(SnrReport, CauchySchwarzOnRandomInstances)
{
    for (std::uint64_t k = 0; k < 100; ++k) {
        RandomStream rng(derive_seed(77, {k}));
        const Index p = 2 + static_cast<Index>(rng.uniform() * 9);
        MixtureParams th;
        th.mu0 = Vector::Zero(p);
        th.mu1 = oracle::gaussian_matrix(p, 1, derive_seed(78, {k}));
        th.s = p;
        th.sigma = oracle::random_spd(p, derive_seed(79, {k}));
        const auto r = snr_report(th, 50, 0);
        EXPECT_LE(r.r1, *r.r0 * (1 + 1e-12));
        EXPECT_GE(*r.kappa, 0.0);
        EXPECT_LE(*r.kappa, 1.0 + 1e-12);
        EXPECT_GE(*r.dyn_range, 1.0);
        EXPECT_FALSE(r.riesz_2s.has_value());  // cap 0

        th.sigma = 2.5 * Matrix::Identity(p, p);
        const auto iso = snr_report(th, 50);
        EXPECT_NEAR(iso.r1, *iso.r0, 1e-12 * *iso.r0);
    }
}

TEST(Io, MatrixCsvRoundTrip)
{
    const Matrix x = oracle::gaussian_matrix(4, 3, 5);
    std::stringstream ss;
    write_matrix_csv(ss, x);
    const Matrix y = parse_matrix_csv(ss);
    EXPECT_TRUE(x == y);

    std::stringstream with_header("a,b\n1,2\n3,4\n");
    const Matrix h = parse_matrix_csv(with_header, true);
    EXPECT_EQ(h.rows(), 2);
    EXPECT_EQ(h(1, 0), 3.0);

    std::stringstream ragged("1,2\n3\n");
    EXPECT_THROW(parse_matrix_csv(ragged), InvalidInput);
    std::stringstream junk("1,x\n");
    EXPECT_THROW(parse_matrix_csv(junk), InvalidInput);
    EXPECT_THROW(read_matrix_csv("/nonexistent/file.csv"), IoError);
}

TEST(Io, KeyValueConfig)
{
    std::stringstream ss("# comment\nnu = 0.3\np: 10  # trailing\n\nsigma = diagonal:1,2\n");
    const auto cfg = KeyValueConfig::parse(ss);
    EXPECT_DOUBLE_EQ(cfg.get_double("nu"), 0.3);
    EXPECT_EQ(cfg.get_int("p"), 10);
    EXPECT_EQ(cfg.get("sigma"), "diagonal:1,2");
    EXPECT_EQ(cfg.get_or("missing", "x"), "x");
    EXPECT_THROW(cfg.get("missing"), InvalidInput);
    std::stringstream bad("novalue\n");
    EXPECT_THROW(KeyValueConfig::parse(bad), InvalidInput);
}
