#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sparsemix/stats_moment.hpp"

using namespace sparsemix;

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

// Moment ratios straight from the definitions, by loops.
double ratio_oracle(const Vector& y_raw, MomentKind kind)
{
    const double n = static_cast<double>(y_raw.size());
    double mean = 0.0;
    for (Index i = 0; i < y_raw.size(); ++i)
        mean += y_raw(i);
    mean /= n;
    double q1 = 0, q2 = 0, q3 = 0, q4 = 0, s2 = 0;
    for (Index i = 0; i < y_raw.size(); ++i) {
        const double y = y_raw(i) - mean;
        q1 += std::abs(y);
        q2 += y * y;
        q3 += y * y * y;
        q4 += y * y * y * y;
        s2 += y * y * (y > 0 ? 1.0 : (y < 0 ? -1.0 : 0.0));
    }
    switch (kind) {
        case MomentKind::kurtosis: return n * q4 / (q2 * q2);
        case MomentKind::abs1: return q1 / std::sqrt(n * q2);
        case MomentKind::skewness: return std::sqrt(n) * q3 / std::pow(q2, 1.5);
        case MomentKind::signed2: return s2 / q2;
    }
    return 0.0;
}

}  // namespace

TEST(MomentRatio, Examples)
{
    Matrix x(4, 1);
    x << 1, -1, 1, -1;
    const Dataset d(x);
    const Vector u = Vector::Ones(1);
    EXPECT_DOUBLE_EQ(moment_ratio(u, d, MomentKind::kurtosis), 1.0);
    EXPECT_DOUBLE_EQ(moment_ratio(u, d, MomentKind::abs1), 1.0);
    EXPECT_DOUBLE_EQ(moment_ratio(u, d, MomentKind::skewness), 0.0);
    EXPECT_DOUBLE_EQ(moment_ratio(u, d, MomentKind::signed2), 0.0);

    Matrix y(3, 1);
    y << 0, 0, 3;  // centered: -1, -1, 2
    const Dataset e(y);
    EXPECT_DOUBLE_EQ(moment_ratio(u, e, MomentKind::kurtosis), 3.0 * 18.0 / 36.0);
    EXPECT_DOUBLE_EQ(moment_ratio(u, e, MomentKind::signed2), 2.0 / 6.0);
    EXPECT_NEAR(moment_ratio(u, e, MomentKind::skewness), std::sqrt(3.0) * 6.0 / std::pow(6.0, 1.5),
                1e-15);
}

TEST(MomentRatio, MatchesLoopOracle)
{
    const Matrix x = oracle::gaussian_matrix(37, 4, 3);
    const Dataset d(x);
    Vector u(4);
    u << 0.5, -0.1, 0.7, 0.2;
    u.normalize();
    for (MomentKind k : {MomentKind::kurtosis, MomentKind::abs1, MomentKind::skewness,
                         MomentKind::signed2})
        EXPECT_NEAR(moment_ratio(u, d, k), ratio_oracle(x * u, k), 1e-12);
}

TEST(MomentRatio, InvariantToShiftAndScale)
{
    const Matrix x = oracle::gaussian_matrix(25, 3, 4);
    Vector u(3);
    u << 0.6, 0.0, -0.8;
    Matrix moved = 3.5 * x;
    moved.rowwise() += Eigen::RowVector3d(10.0, -2.0, 4.0);
    for (MomentKind k : {MomentKind::kurtosis, MomentKind::abs1, MomentKind::skewness,
                         MomentKind::signed2}) {
        const double a = moment_ratio(u, Dataset(x), k);
        EXPECT_NEAR(moment_ratio(u, Dataset(moved), k), a, 1e-10);
        EXPECT_NEAR(moment_ratio(2.0 * u, Dataset(x), k), a, 1e-12);
    }
    // even ratios ignore the sign of u, odd ones flip
    EXPECT_NEAR(moment_ratio(-u, Dataset(x), MomentKind::abs1),
                moment_ratio(u, Dataset(x), MomentKind::abs1), 1e-14);
    EXPECT_NEAR(moment_ratio(-u, Dataset(x), MomentKind::skewness),
                -moment_ratio(u, Dataset(x), MomentKind::skewness), 1e-14);
}

TEST(MomentRatio, DegenerateProjectionThrows)
{
    Matrix x = oracle::gaussian_matrix(10, 2, 5);
    x.col(1).setConstant(2.0);
    Vector u(2);
    u << 0.0, 1.0;
    EXPECT_THROW(moment_ratio(u, Dataset(x), MomentKind::abs1), DegenerateProjection);
    EXPECT_THROW(moment_ratio(Vector::Ones(3), Dataset(x), MomentKind::abs1), InvalidInput);
}

TEST(MomentPhi, GradientMatchesFiniteDifferences)
{
    const Matrix x = oracle::gaussian_matrix(20, 1, 6);
    const Vector y = x.col(0).array() - x.col(0).mean();
    for (MomentKind k : {MomentKind::kurtosis, MomentKind::abs1, MomentKind::skewness,
                         MomentKind::signed2}) {
        const MomentPhi phi{k, -1.0, 0.0};
        Vector dy(20), scratch(20);
        phi(y, dy);
        const double h = 1e-6;
        for (Index i = 0; i < 20; ++i) {
            Vector yp = y, ym = y;
            yp(i) += h;
            ym(i) -= h;
            const double fd = (phi(yp, scratch) - phi(ym, scratch)) / (2 * h);
            EXPECT_NEAR(dy(i), fd, 1e-6) << static_cast<int>(k) << " " << i;
        }
    }
}

TEST(SparseMomentStat, SingletonScanAndSides)
{
    const Matrix x = oracle::gaussian_matrix(40, 5, 7);
    const Dataset d(x);
    for (MomentKind k : {MomentKind::kurtosis, MomentKind::abs1, MomentKind::skewness,
                         MomentKind::signed2}) {
        double best = k == MomentKind::kurtosis ? 1e300 : -1e300;
        for (Index j = 0; j < 5; ++j)
            for (double sg : {1.0, -1.0}) {
                const double v = ratio_oracle(sg * x.col(j), k);
                best = k == MomentKind::kurtosis ? std::min(best, v) : std::max(best, v);
            }
        const auto st = sparse_moment_stat(d, 1, k);
        EXPECT_NEAR(st.value, best, 1e-12);
        EXPECT_EQ(st.rejection_side,
                  k == MomentKind::kurtosis ? RejectionSide::lower : RejectionSide::upper);
        EXPECT_EQ(st.support.size(), 1u);
    }
}

TEST(SparseMomentStat, ValueAttainedByDirection)
{
    const Dataset d(oracle::gaussian_matrix(60, 6, 8));
    for (MomentKind k : {MomentKind::kurtosis, MomentKind::abs1, MomentKind::skewness}) {
        const auto st = sparse_moment_stat(d, 3, k);
        ASSERT_TRUE(st.direction);
        EXPECT_LE((st.direction->array() != 0.0).count(), 3);
        EXPECT_NEAR(moment_ratio(*st.direction, d, k), st.value, 1e-10);
        const double s1 = sparse_moment_stat(d, 1, k).value;
        if (k == MomentKind::kurtosis)
            EXPECT_LE(st.value, s1 + 1e-12);
        else
            EXPECT_GE(st.value, s1 - 1e-12);
    }
}

TEST(SparseMomentStat, PairsMatchExactAbs1Oracle)
{
    for (std::uint64_t k = 0; k < 5; ++k) {
        const Matrix x = oracle::gaussian_matrix(40, 5, 80 + k);
        const double v = sparse_moment_stat(Dataset(x), 2, MomentKind::abs1).value;
        EXPECT_NEAR(v, oracle::sparse_abs1_max(x), 1e-6 * v);
    }
}

TEST(SparseMomentStat, NullConstants)
{
    const Matrix x = oracle::gaussian_matrix(100000, 1, 9);
    const Dataset d(x);
    const Vector u = Vector::Ones(1);
    EXPECT_NEAR(moment_ratio(u, d, MomentKind::kurtosis), 3.0, 0.05);
    EXPECT_NEAR(moment_ratio(u, d, MomentKind::abs1), kSqrt2OverPi, 0.005);
    EXPECT_NEAR(moment_ratio(u, d, MomentKind::skewness), 0.0, 0.05);
    EXPECT_NEAR(moment_ratio(u, d, MomentKind::signed2), 0.0, 0.02);
}

TEST(CoordStats, ExamplesAndRelationToRatio)
{
    Matrix x(4, 3);
    x << 1, 0, 5,
        -1, 0, 5,
         1, 0, 5,
        -1, 3, 5;
    const Dataset d(x);
    const auto a = coord_stats(d, MomentKind::abs1);
    ASSERT_TRUE(a.values[0]);
    EXPECT_DOUBLE_EQ(*a.values[0], 4.0);  // sum |y| = 4, sd = 1
    EXPECT_FALSE(a.values[2]);            // constant column
    // column 1 centered: -.75 x3, 2.25; var = 27/16
    const double var1 = 27.0 / 16.0;
    EXPECT_NEAR(*a.values[1], 4.5 / std::sqrt(var1), 1e-14);
    const auto s = coord_stats(d, MomentKind::signed2);
    EXPECT_NEAR(*s.values[1], std::abs(2.25 * 2.25 - 3 * 0.75 * 0.75) / var1, 1e-14);
    EXPECT_DOUBLE_EQ(*s.values[0], 0.0);
    EXPECT_EQ(s.argmax, 1);

    // T_{1,j} = n * abs1 ratio of coordinate j
    const Matrix g = oracle::gaussian_matrix(30, 4, 10);
    const auto cs = coord_stats(Dataset(g), MomentKind::abs1);
    for (Index j = 0; j < 4; ++j)
        EXPECT_NEAR(*cs.values[static_cast<std::size_t>(j)],
                    30.0 * ratio_oracle(g.col(j), MomentKind::abs1), 1e-10);
    const auto st = coord_stat_value(Dataset(g), MomentKind::abs1);
    EXPECT_EQ(st.stat_id, StatId::coord_abs1);
    EXPECT_DOUBLE_EQ(st.value, cs.max);

    EXPECT_THROW(coord_stats(Dataset(Matrix::Ones(4, 2)), MomentKind::abs1), DegenerateProjection);
    EXPECT_THROW(coord_stats(d, MomentKind::kurtosis), InvalidInput);
}
