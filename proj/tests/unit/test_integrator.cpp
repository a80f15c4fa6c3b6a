#include <gtest/gtest.h>

#include <cmath>

#include "safeadp/safeadp.hpp"

using namespace safeadp;

namespace {

struct Decay {
    void rhs(double, const Vector& y, Vector& dy) const { dy = -y; }
};

struct Oscillator {
    void rhs(double, const Vector& y, Vector& dy) const {
        dy.resize(2);
        dy << y(1), -y(0);
    }
};

// dy/dt = -1 toward a wall at y = 0; admissible only while y > wall
struct WallBound {
    double wall = 0.0;
    void rhs(double, const Vector&, Vector& dy) const { dy = -Vector::Ones(1); }
    bool admissible(double, const Vector& y) const { return y(0) > wall; }
};

double terminal_error(double tol) {
    Oscillator sys;
    Vector y(2);
    y << 1.0, 0.0;
    IntegratorOptions opt;
    opt.abs_tol = opt.rel_tol = tol;
    integrate_adaptive(sys, y, 0.0, 10.0, opt);
    return std::hypot(y(0) - std::cos(10.0), y(1) + std::sin(10.0));
}

}  // namespace

TEST(Integrator, ExponentialDecay) {
    Decay sys;
    Vector y = Vector::Ones(1);
    const auto r = integrate_adaptive(sys, y, 0.0, 1.0);
    EXPECT_EQ(r.status, IntegrationStatus::Ok);
    EXPECT_NEAR(y(0), std::exp(-1.0), 1e-6);
    EXPECT_DOUBLE_EQ(r.t, 1.0);
}

TEST(Integrator, FixedStepOrderAtLeastFour) {
    auto err = [](double h) {
        Decay sys;
        Vector y = Vector::Ones(1);
        IntegratorOptions opt;
        opt.h_fixed = h;
        integrate_adaptive(sys, y, 0.0, 1.0, opt);
        return std::abs(y(0) - std::exp(-1.0));
    };
    const double e1 = err(0.1), e2 = err(0.05), e3 = err(0.025);
    EXPECT_GE(std::log2(e1 / e2), 4.0);
    EXPECT_GE(std::log2(e2 / e3), 4.0);
}

TEST(Integrator, TighterToleranceStaysConsistent) {
    for (double tol : {1e-4, 1e-6, 1e-8}) {
        const double coarse = terminal_error(tol);
        const double fine = terminal_error(tol / 2.0);
        EXPECT_LE(std::abs(coarse - fine), 10.0 * tol * 10.0);  // over 10 time units
    }
}

TEST(Integrator, ReportsBreachWhenAStepCannotAvoidTheWall) {
    WallBound sys;
    Vector y = Vector::Ones(1);
    const auto r = integrate_adaptive(sys, y, 0.0, 5.0);
    EXPECT_EQ(r.status, IntegrationStatus::SafetyBreach);
    EXPECT_GT(y(0), 0.0);
    EXPECT_LT(y(0), 1e-6);
}

TEST(Integrator, DeterministicAcrossRuns) {
    Oscillator sys;
    Vector a(2), b(2);
    a << 1.0, 0.5;
    b = a;
    integrate_adaptive(sys, a, 0.0, 7.3);
    integrate_adaptive(sys, b, 0.0, 7.3);
    EXPECT_EQ(a(0), b(0));
    EXPECT_EQ(a(1), b(1));
}
