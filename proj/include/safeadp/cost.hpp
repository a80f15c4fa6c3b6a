#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

#include "safeadp/errors.hpp"
#include "safeadp/model.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

/// State and input penalty weights of the running cost.
class CostSpec {
public:
    CostSpec(Matrix Q, Vector r_diag, double u_max) : Q_(std::move(Q)), r_(std::move(r_diag)), u_max_(u_max) {
        if (Q_.rows() != Q_.cols()) throw InvalidArgument("Q must be square");
        if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q_.cwiseAbs().maxCoeff()))
            throw InvalidArgument("Q must be symmetric");
        const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(Q_).eigenvalues();
        q_lo_ = eig.minCoeff();
        q_hi_ = eig.maxCoeff();
        if (!(q_lo_ > 0.0)) throw InvalidArgument("Q must be positive definite");
        if (r_.size() == 0 || !(r_.minCoeff() > 0.0)) throw InvalidArgument("all r_i must be positive");
        if (!(u_max_ > 0.0)) throw InvalidArgument("u_max must be positive");
    }

    const Matrix& Q() const noexcept { return Q_; }
    const Vector& r_diag() const noexcept { return r_; }
    Matrix R() const { return r_.asDiagonal(); }
    double u_max() const noexcept { return u_max_; }
    double q_lower() const noexcept { return q_lo_; }
    double q_upper() const noexcept { return q_hi_; }

private:
    Matrix Q_;
    Vector r_;
    double u_max_;
    double q_lo_ = 0.0;
    double q_hi_ = 0.0;
};

/// Barrier term B = k_p s / h and its bounded surrogate Bbar = k_p s / (h + a).
///
/// s is a quintic smoothstep in h: 1 for h <= d_on, 0 for h >= d_off. The
/// origin must sit in the s = 0 region so that B(0) = 0.
class BarrierSpec {
public:
    BarrierSpec(std::shared_ptr<const SafeSet> set, double k_p, double a, double d_on, double d_off)
        : set_(std::move(set)), k_p_(k_p), a_(a), d_on_(d_on), d_off_(d_off) {
        if (!set_) throw InvalidArgument("barrier needs a safe set");
        if (!(k_p_ > 0.0)) throw InvalidArgument("barrier gain k_p must be positive");
        if (!(a_ > 0.0)) throw InvalidArgument("bounded-barrier offset a must be positive");
        if (!(d_on_ < d_off_)) throw InvalidArgument("scheduling thresholds need d_on < d_off");
        if (!(set_->h(Vector::Zero(2)) >= d_off_))
            throw InvalidArgument("scheduling function must vanish at the origin (h(0) >= d_off)");
    }

    const SafeSet& safe_set() const noexcept { return *set_; }
    std::shared_ptr<const SafeSet> safe_set_ptr() const noexcept { return set_; }
    double k_p() const noexcept { return k_p_; }
    double a() const noexcept { return a_; }
    double d_on() const noexcept { return d_on_; }
    double d_off() const noexcept { return d_off_; }

    /// s as a function of h.
    double s_of_h(double h) const noexcept {
        const double t = smooth_arg(h);
        return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    }

    /// ds/dh.
    double ds_dh(double h) const noexcept {
        const double t = smooth_arg(h);
        const double dq = 30.0 * t * t * (t - 1.0) * (t - 1.0);
        return -dq / (d_off_ - d_on_);
    }

private:
    double smooth_arg(double h) const noexcept { return std::clamp((d_off_ - h) / (d_off_ - d_on_), 0.0, 1.0); }

    std::shared_ptr<const SafeSet> set_;
    double k_p_;
    double a_;
    double d_on_;
    double d_off_;
};

inline double scheduling_s(const BarrierSpec& spec, const Vector& x) { return spec.s_of_h(spec.safe_set().h(x)); }

inline double barrier_B(const BarrierSpec& spec, const Vector& x) {
    const double h = spec.safe_set().h(x);
    if (!(h > kHMin)) throw BoundaryViolation("barrier B evaluated at h = " + std::to_string(h));
    return spec.k_p() * spec.s_of_h(h) / h;
}

inline Vector grad_B(const BarrierSpec& spec, const Vector& x) {
    const double h = spec.safe_set().h(x);
    if (!(h > kHMin)) throw BoundaryViolation("barrier gradient evaluated at h = " + std::to_string(h));
    const double s = spec.s_of_h(h);
    const double ds = spec.ds_dh(h);
    if (s == 0.0 && ds == 0.0) return Vector::Zero(x.size());
    return spec.k_p() * (ds * h - s) / (h * h) * spec.safe_set().grad_h(x);
}

inline double barrier_Bbar(const BarrierSpec& spec, const Vector& x) {
    const double h = spec.safe_set().h(x);
    if (!(h > -spec.a())) throw BoundaryViolation("bounded barrier evaluated at h <= -a");
    return spec.k_p() * spec.s_of_h(h) / (h + spec.a());
}

inline Vector grad_Bbar(const BarrierSpec& spec, const Vector& x) {
    const double h = spec.safe_set().h(x);
    if (!(h > -spec.a())) throw BoundaryViolation("bounded barrier evaluated at h <= -a");
    const double s = spec.s_of_h(h);
    const double ds = spec.ds_dh(h);
    if (s == 0.0 && ds == 0.0) return Vector::Zero(x.size());
    const double ha = h + spec.a();
    return spec.k_p() * (ds * ha - s) / (ha * ha) * spec.safe_set().grad_h(x);
}

namespace detail {

// (1+v) ln(1+v) + (1-v) ln(1-v) for v in [0, 1].
inline double entropy_like(double v) {
    if (v < 0.1) {
        // sum_k v^(2k) / (k (2k-1))
        const double v2 = v * v;
        double term = v2;
        double sum = 0.0;
        for (int k = 1; k <= 10; ++k) {
            sum += term / (k * (2.0 * k - 1.0));
            term *= v2;
        }
        return sum;
    }
    return (1.0 + v) * std::log1p(v) + (1.0 - v) * std::log1p(-v);
}

}  // namespace detail

/// Non-quadratic input penalty
///   R_u(u) = 2 sum_i int_0^{u_i} u_max r_i atanh(zeta / u_max) dzeta
/// in closed form; the box corner uses the analytic limit 2 u_max^2 r_i ln 2.
inline double input_penalty_Ru(const CostSpec& spec, const Vector& u) {
    const double ub = spec.u_max();
    const Vector& r = spec.r_diag();
    if (u.size() != r.size()) throw InvalidArgument("input dimension mismatch in R_u");
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double au = std::abs(u(i));
        if (au > ub * (1.0 + 1e-9)) throw InputOutOfBox("input component outside the box in R_u");
        if (au >= ub * (1.0 - 1e-12)) {
            total += 2.0 * ub * ub * r(i) * std::numbers::ln2;
        } else {
            total += ub * ub * r(i) * detail::entropy_like(au / ub);
        }
    }
    return total;
}

/// r(x, u) = x^T Q x + R_u(u) + B(x).
inline double instantaneous_cost(const CostSpec& cost, const BarrierSpec& bar, const Vector& x, const Vector& u) {
    return x.dot(cost.Q() * x) + input_penalty_Ru(cost, u) + barrier_B(bar, x);
}

/// x^T Q x + u^T R u, the controller-agnostic cost used for comparisons.
inline double quadratic_cost(const CostSpec& cost, const Vector& x, const Vector& u) {
    return x.dot(cost.Q() * x) + u.dot(cost.r_diag().cwiseProduct(u));
}

}  // namespace safeadp
