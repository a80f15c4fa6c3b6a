#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>

#include "safeadp/errors.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

// Dormand-Prince 5(4) with PI step-size control and the standard 4th-order
// continuous extension.
namespace dopri {

inline constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
inline constexpr double a21 = 0.2;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace dopri

struct IntegratorOptions {
    double abs_tol = 1e-6;
    double rel_tol = 1e-6;
    double h_init = 0.0;  // 0 selects an initial step automatically
    double h_max = std::numeric_limits<double>::infinity();
    double h_fixed = 0.0; // > 0 disables error control (order studies)
    int max_halvings = 40;
    long max_steps = 50'000'000;
};

enum class IntegrationStatus { Ok, SafetyBreach, StepUnderflow };

inline std::string to_string(IntegrationStatus s) {
    switch (s) {
        case IntegrationStatus::Ok: return "OK";
        case IntegrationStatus::SafetyBreach: return "SAFETY_BREACH";
        case IntegrationStatus::StepUnderflow: return "STEP_UNDERFLOW";
    }
    return "?";
}

/// Continuous extension over one accepted step [t0, t0 + h].
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    Vector r1, r2, r3, r4, r5;

    double t1() const { return t0 + h; }

    Vector operator()(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

struct IntegrationResult {
    IntegrationStatus status = IntegrationStatus::Ok;
    double t = 0.0;
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    std::string message;
};

/// Anything with  rhs(t, y, dydt).  Optional hooks, detected at compile time:
///   bool admissible(double t, const Vector& y) -- false rejects a proposed step (halved)
///   void begin_step(double t, const Vector& y) -- once per step from an accepted state
///   void accepted(const DenseStep&, Vector& y) -- after acceptance; may adjust y
template <class S>
concept OdeSystem = requires(S& s, double t, const Vector& y, Vector& dy) { s.rhs(t, y, dy); };

template <OdeSystem S>
IntegrationResult integrate_adaptive(S& sys, Vector& y, double t0, double t1, const IntegratorOptions& opt = {}) {
    using namespace dopri;
    constexpr double safe = 0.9, facl = 0.2, facr = 10.0, beta = 0.04;
    const Eigen::Index n = y.size();

    IntegrationResult res;
    res.t = t0;
    if (!(t1 > t0)) return res;

    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ys(n), ynew(n);
    auto eval = [&](double t, const Vector& yy, Vector& out) {
        sys.rhs(t, yy, out);
        ++res.rhs_evals;
    };

    double t = t0;
    double facold = 1e-4;
    bool last_rejected = false;
    int halvings = 0;

    if constexpr (requires { sys.begin_step(t, y); }) sys.begin_step(t, y);
    eval(t, y, k1);

    double h = opt.h_fixed > 0.0 ? opt.h_fixed : opt.h_init;
    if (h <= 0.0) {
        // Hairer-style starting step
        const Vector sk = (opt.abs_tol + opt.rel_tol * y.cwiseAbs().array()).matrix();
        const double dnf = std::sqrt((k1.cwiseQuotient(sk)).squaredNorm() / static_cast<double>(n));
        const double dny = std::sqrt((y.cwiseQuotient(sk)).squaredNorm() / static_cast<double>(n));
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
        h = std::min(h, opt.h_max);
        ynew = y + h * k1;
        try {
            eval(t + h, ynew, k2);
            const double der2 = std::sqrt(((k2 - k1).cwiseQuotient(sk)).squaredNorm() / static_cast<double>(n)) / h;
            const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
            const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
            h = std::min({100.0 * h, h1, opt.h_max});
        } catch (const BoundaryViolation&) {
            h *= 0.1;
        }
    }

    while (t < t1) {
        if (res.accepted + res.rejected >= opt.max_steps) {
            res.status = IntegrationStatus::StepUnderflow;
            res.message = "step budget exhausted";
            break;
        }
        bool last = false;
        if (t + h >= t1 || t + 1.0001 * h >= t1) {
            h = t1 - t;
            last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            // shrinking into the boundary is a breach, not a stiffness problem
            if (halvings > 0) {
                res.status = IntegrationStatus::SafetyBreach;
                res.message = "state reached the safe-set boundary";
            } else {
                res.status = IntegrationStatus::StepUnderflow;
                res.message = "step size underflow";
            }
            break;
        }

        bool breach = false;
        try {
            ys = y + h * a21 * k1;
            eval(t + c2 * h, ys, k2);
            ys = y + h * (a31 * k1 + a32 * k2);
            eval(t + c3 * h, ys, k3);
            ys = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            eval(t + c4 * h, ys, k4);
            ys = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            eval(t + c5 * h, ys, k5);
            ys = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            eval(t + h, ys, k6);
            ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            if constexpr (requires { { sys.admissible(t, ynew) } -> std::convertible_to<bool>; }) {
                if (!sys.admissible(t + h, ynew)) breach = true;
            }
            if (!breach) eval(t + h, ynew, k7);
        } catch (const BoundaryViolation&) {
            breach = true;
        }

        if (breach) {
            if (++halvings > opt.max_halvings) {
                res.status = IntegrationStatus::SafetyBreach;
                res.message = "state reached the safe-set boundary";
                break;
            }
            h *= 0.5;
            last_rejected = true;
            ++res.rejected;
            continue;
        }

        double h_next = h;
        if (opt.h_fixed <= 0.0) {
            const Vector err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const Vector sk = (opt.abs_tol + opt.rel_tol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array()).matrix();
            const double err = std::sqrt(err_vec.cwiseQuotient(sk).squaredNorm() / static_cast<double>(n));
            if (!std::isfinite(err)) {
                h *= 0.5;
                ++res.rejected;
                last_rejected = true;
                continue;
            }
            const double fac11 = std::pow(err, 0.2 - beta * 0.75);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
            h_next = h / fac;
            if (err > 1.0) {
                h /= std::min(1.0 / facl, fac11 / safe);
                ++res.rejected;
                last_rejected = true;
                continue;
            }
            facold = std::max(err, 1e-4);
            if (last_rejected) h_next = std::min(h_next, h);
            h_next = std::min(h_next, opt.h_max);
        }

        DenseStep dense;
        dense.t0 = t;
        dense.h = h;
        dense.r1 = y;
        dense.r2 = ynew - y;
        dense.r3 = h * k1 - dense.r2;
        dense.r4 = dense.r2 - h * k7 - dense.r3;
        dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        t = last ? t1 : t + h;
        y = ynew;
        ++res.accepted;
        halvings = 0;
        last_rejected = false;
        h = h_next;

        if constexpr (requires { sys.accepted(dense, y); }) sys.accepted(dense, y);
        if (t >= t1) break;
        if constexpr (requires { sys.begin_step(t, y); }) {
            try {
                sys.begin_step(t, y);
                eval(t, y, k1);
            } catch (const BoundaryViolation& e) {
                res.status = IntegrationStatus::SafetyBreach;
                res.message = e.what();
                break;
            }
        } else {
            k1 = k7;
        }
    }
    res.t = t;
    return res;
}

}  // namespace safeadp
