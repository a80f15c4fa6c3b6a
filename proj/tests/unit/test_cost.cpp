#include <gtest/gtest.h>

#include <random>

#include "safeadp/safeadp.hpp"
#include "support/oracles.hpp"

using namespace safeadp;

namespace {

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

struct Fixture {
    std::shared_ptr<const CircularSafeSet> set = std::make_shared<const CircularSafeSet>(Vector2(2.0, 2.0), 1.0);
    BarrierSpec unit{set, 1.0, 0.5, 0.2, 1.0};
    CostSpec cost{Matrix::Identity(2, 2), Vector::Constant(2, 10.0), 0.5};
};

// point at height h above the disk along the +y axis
Vector at_height(double h) { return v2(2.0, 3.0 + h); }

}  // namespace

TEST(Scheduling, PlateausAndMidpoint) {
    Fixture f;
    EXPECT_DOUBLE_EQ(scheduling_s(f.unit, at_height(0.1)), 1.0);
    EXPECT_DOUBLE_EQ(scheduling_s(f.unit, at_height(1.1)), 0.0);
    EXPECT_NEAR(scheduling_s(f.unit, at_height(0.6)), 0.5, 1e-15);
}

TEST(Scheduling, MatchesPolynomialAndIsMonotone) {
    Fixture f;
    double prev = 1.0;
    for (double h = 0.0; h <= 1.2; h += 0.01) {
        const double s = scheduling_s(f.unit, at_height(h));
        EXPECT_NEAR(s, oracle::smoothstep_reference(h, 0.2, 1.0), 1e-14);
        EXPECT_LE(s, prev + 1e-15);
        prev = s;
    }
}

TEST(Barrier, ZeroAtOriginAndInverseNearBoundary) {
    Fixture f;
    EXPECT_EQ(barrier_B(f.unit, v2(0, 0)), 0.0);
    EXPECT_NEAR(barrier_B(f.unit, at_height(0.1)), 2.0 / 0.2, 1e-12);
    EXPECT_GT(barrier_B(f.unit, at_height(1e-8)), 1e7);
}

TEST(Barrier, BoundedSurrogate) {
    Fixture f;
    EXPECT_EQ(barrier_Bbar(f.unit, v2(0, 0)), 0.0);
    EXPECT_NEAR(barrier_Bbar(f.unit, at_height(0.0)), 2.0, 1e-14);
    EXPECT_TRUE(grad_Bbar(f.unit, v2(0, 0)).isZero());
}

TEST(Barrier, GradientsMatchCentralDifferences) {
    Fixture f;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Vector x = oracle::random_interior_point(rng, *f.set, 0.05, 2.0);
        const Vector gB = oracle::fd_gradient([&](const Vector& y) { return barrier_B(f.unit, y); }, x, 1e-7);
        const Vector gBb = oracle::fd_gradient([&](const Vector& y) { return barrier_Bbar(f.unit, y); }, x, 1e-7);
        EXPECT_LE(oracle::rel_err(grad_B(f.unit, x), gB), 1e-6);
        EXPECT_LE(oracle::rel_err(grad_Bbar(f.unit, x), gBb), 1e-6);
    }
}

TEST(Barrier, RejectsSchedulingActiveAtOrigin) {
    Fixture f;
    EXPECT_THROW(BarrierSpec(f.set, 1.0, 0.5, 0.2, 2.0), InvalidArgument);
    EXPECT_THROW(BarrierSpec(f.set, 1.0, 0.5, 0.8, 0.5), InvalidArgument);
    EXPECT_THROW(BarrierSpec(f.set, 0.0, 0.5, 0.2, 1.0), InvalidArgument);
}

TEST(InputPenalty, ZeroAtZeroAndSaturationLimit) {
    Fixture f;
    EXPECT_EQ(input_penalty_Ru(f.cost, v2(0, 0)), 0.0);
    const double limit = 2.0 * 0.25 * 10.0 * std::log(2.0);
    EXPECT_NEAR(input_penalty_Ru(f.cost, v2(0.5, 0.0)), limit, 1e-12);
    EXPECT_NEAR(input_penalty_Ru(f.cost, v2(-0.5, 0.5)), 2.0 * limit, 1e-12);
    EXPECT_NEAR(oracle::ru_quadrature(f.cost, v2(0.5 * (1 - 1e-8), 0.0)), limit, 1e-4);
}

TEST(InputPenalty, MatchesQuadrature) {
    Fixture f;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 200; ++i) {
        const Vector uu = v2(u(rng), u(rng));
        EXPECT_LE(oracle::rel_err(input_penalty_Ru(f.cost, uu), oracle::ru_quadrature(f.cost, uu), 1e-300), 1e-8);
    }
}

TEST(InputPenalty, SmallInputsBehaveQuadratically) {
    Fixture f;
    // R_u(u) ~ u^T R u for |u| << u_max
    const Vector u = v2(1e-4, -2e-4);
    EXPECT_NEAR(input_penalty_Ru(f.cost, u), u.dot(f.cost.R() * u), 1e-12);
}

TEST(InputPenalty, OutsideBoxThrows) {
    Fixture f;
    EXPECT_THROW(input_penalty_Ru(f.cost, v2(0.6, 0.0)), InputOutOfBox);
}

TEST(Cost, InstantaneousExamples) {
    Fixture f;
    EXPECT_EQ(instantaneous_cost(f.cost, f.unit, v2(0, 0), v2(0, 0)), 0.0);
    const Vector far = v2(-1.0, 0.5);  // h > d_off
    EXPECT_DOUBLE_EQ(instantaneous_cost(f.cost, f.unit, far, v2(0, 0)), far.squaredNorm());
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 50; ++i) {
        const Vector x = oracle::random_interior_point(rng, *f.set, 0.01, 3.0);
        EXPECT_GE(instantaneous_cost(f.cost, f.unit, x, v2(u(rng), u(rng))), x.squaredNorm());
    }
}

TEST(Cost, SpecValidation) {
    EXPECT_THROW(CostSpec(Matrix::Identity(2, 2), Vector::Constant(2, -1.0), 0.5), InvalidArgument);
    EXPECT_THROW(CostSpec(-Matrix::Identity(2, 2), Vector::Constant(2, 1.0), 0.5), InvalidArgument);
    Matrix asym(2, 2);
    asym << 1, 0.5, 0, 1;
    EXPECT_THROW(CostSpec(asym, Vector::Constant(2, 1.0), 0.5), InvalidArgument);
}
