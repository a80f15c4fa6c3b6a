#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>

#include "safeadp/errors.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

/// Control-affine plant  x' = f(x) + g(x) u  with the symmetric input box |u_i| <= u_max.
///
/// Immutable once built. The constructor asserts f(0) = 0 exactly and spot-checks
/// 0 < ||g(x)|| <= g_bar on a fixed set of probe states.
class SystemModel {
public:
    using DriftFn = std::function<Vector(const Vector&)>;
    using InputMapFn = std::function<Matrix(const Vector&)>;

    SystemModel(int n, int m, double u_max, DriftFn drift, InputMapFn input_map, double g_bar,
                std::string kind = "custom")
        : n_(n), m_(m), u_max_(u_max), g_bar_(g_bar), drift_(std::move(drift)),
          input_map_(std::move(input_map)), kind_(std::move(kind)) {
        if (n_ <= 0 || m_ <= 0) throw InvalidArgument("system dimensions must be positive");
        if (!(u_max_ > 0.0)) throw InvalidArgument("u_max must be positive");
        if (!(g_bar_ > 0.0) || !std::isfinite(g_bar_)) throw InvalidArgument("g_bar must be positive and finite");
        const Vector f0 = drift_(Vector::Zero(n_));
        if (f0.size() != n_) throw InvalidArgument("drift returned wrong dimension");
        if (f0.cwiseAbs().maxCoeff() != 0.0) throw InvalidArgument("drift(0) must be exactly zero");
        probe_input_map();
    }

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }
    double u_max() const noexcept { return u_max_; }
    double g_bar() const noexcept { return g_bar_; }
    const std::string& kind() const noexcept { return kind_; }

    Vector drift(const Vector& x) const { return drift_(x); }
    Matrix input_map(const Vector& x) const { return input_map_(x); }

    Vector xdot(const Vector& x, const Vector& u) const { return drift_(x) + input_map_(x) * u; }

private:
    void probe_input_map() const {
        std::mt19937_64 rng(0x5eedu);
        std::uniform_real_distribution<double> dist(-10.0, 10.0);
        for (int k = 0; k < 16; ++k) {
            Vector x(n_);
            if (k == 0) {
                x.setZero();
            } else {
                for (int i = 0; i < n_; ++i) x(i) = dist(rng);
            }
            const Matrix g = input_map_(x);
            if (g.rows() != n_ || g.cols() != m_) throw InvalidArgument("input_map returned wrong shape");
            const double norm = Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
            if (!(norm > 0.0) || norm > g_bar_ * (1.0 + 1e-12))
                throw InvalidArgument("input_map norm outside (0, g_bar] at a probe state");
        }
    }

    int n_;
    int m_;
    double u_max_;
    double g_bar_;
    DriftFn drift_;
    InputMapFn input_map_;
    std::string kind_;
};

/// The 2-D single integrator: f = 0, g = I.
inline SystemModel single_integrator(double u_max, int n = 2) {
    return SystemModel(
        n, n, u_max, [n](const Vector&) { return Vector::Zero(n).eval(); },
        [n](const Vector&) { return Matrix::Identity(n, n).eval(); }, 1.0, "single_integrator");
}

/// Linear plant x' = A x + G u with constant matrices.
inline SystemModel linear_system(const Matrix& A, const Matrix& G, double u_max) {
    if (A.rows() != A.cols()) throw InvalidArgument("A must be square");
    if (G.rows() != A.rows()) throw InvalidArgument("G must have as many rows as A");
    const double g_norm = Eigen::JacobiSVD<Matrix>(G).singularValues()(0);
    return SystemModel(
        static_cast<int>(A.rows()), static_cast<int>(G.cols()), u_max,
        [A](const Vector& x) { return (A * x).eval(); }, [G](const Vector&) { return G; }, g_norm,
        "linear");
}

/// Safe set C = { x : h(x) >= 0 }.
class SafeSet {
public:
    virtual ~SafeSet() = default;
    virtual double h(const Vector& x) const = 0;
    virtual Vector grad_h(const Vector& x) const = 0;
};

/// Complement of an open disk in the (x1, x2) plane:
///   h(x) = ||(x1, x2) - z|| - r_h.
/// Remaining state coordinates (if any) do not enter h.
class CircularSafeSet final : public SafeSet {
public:
    CircularSafeSet(const Vector2& center, double radius) : z_(center), r_(radius) {
        if (!(r_ > 0.0)) throw InvalidArgument("safe-set radius must be positive");
        if (!(z_.norm() > r_)) throw InvalidArgument("origin must lie strictly inside the safe set (||z|| > r_h)");
    }

    const Vector2& center() const noexcept { return z_; }
    double radius() const noexcept { return r_; }

    double h(const Vector& x) const override { return (x.head<2>() - z_).norm() - r_; }

    Vector grad_h(const Vector& x) const override {
        const Vector2 d = x.head<2>() - z_;
        const double dist = d.norm();
        if (dist < 1e-12) throw SingularGradient("grad_h undefined at the disk center");
        Vector g = Vector::Zero(x.size());
        g.head<2>() = d / dist;
        return g;
    }

private:
    Vector2 z_;
    double r_;
};

inline double eval_h(const SafeSet& set, const Vector& x) { return set.h(x); }
inline Vector grad_h(const SafeSet& set, const Vector& x) { return set.grad_h(x); }

/// Linear class-K function v -> scale * v (used for both alpha and gamma).
class ClassKScale {
public:
    explicit ClassKScale(double scale) : scale_(scale) {
        if (!(scale_ > 0.0)) throw InvalidArgument("class-K scale must be positive");
    }
    double scale() const noexcept { return scale_; }
    double operator()(double v) const noexcept { return scale_ * v; }

private:
    double scale_;
};

/// L_f h + L_g h u + alpha(h). Nonnegative iff u satisfies the CBF condition at x.
inline double cbf_margin(const SystemModel& sys, const SafeSet& set, const ClassKScale& alpha,
                         const Vector& x, const Vector& u) {
    const Vector dh = set.grad_h(x);
    return dh.dot(sys.drift(x)) + dh.dot(sys.input_map(x) * u) + alpha(set.h(x));
}

/// CLF condition residual for V_clf = x^T Q x; nonpositive iff u satisfies it.
inline double clf_margin(const SystemModel& sys, const Matrix& Q, const ClassKScale& gamma,
                         const Vector& x, const Vector& u) {
    const Vector Qx = Q * x;
    return 2.0 * Qx.dot(sys.xdot(x, u)) + gamma(x.dot(Qx));
}

}  // namespace safeadp
