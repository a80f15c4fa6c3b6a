#pragma once

#include <cmath>
#include <concepts>
#include <utility>
#include <vector>

#include "safeadp/cost.hpp"
#include "safeadp/errors.hpp"
#include "safeadp/model.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

/// State-following kernel layout: L center offsets and the scaling factor
///   theta(x) = scale_num * x^T x / (scale_den_offset + x^T x)
/// so that the i-th center is c_i(x) = x + theta(x) d_i.
class StaFConfig {
public:
    StaFConfig(Matrix offsets, double scale_num = 0.5, double scale_den_offset = 1.0)
        : offsets_(std::move(offsets)), scale_num_(scale_num), scale_den_(scale_den_offset) {
        if (offsets_.rows() < 1 || offsets_.cols() < 1) throw InvalidArgument("need at least one kernel offset");
        if (!(scale_num_ > 0.0) || !(scale_den_ > 0.0)) throw InvalidArgument("StaF scaling constants must be positive");
        for (Eigen::Index i = 0; i < offsets_.rows(); ++i) {
            const double norm = offsets_.row(i).norm();
            // Offsets given to a few digits (0.866 for sqrt(3)/2) are normalized.
            if (std::abs(norm - 1.0) > 1e-3) throw InvalidArgument("kernel offsets must be unit vectors");
            offsets_.row(i) /= norm;
        }
        for (Eigen::Index i = 0; i < offsets_.rows(); ++i)
            for (Eigen::Index j = i + 1; j < offsets_.rows(); ++j)
                if ((offsets_.row(i) - offsets_.row(j)).norm() < 1e-9)
                    throw InvalidArgument("kernel offsets must be pairwise distinct");
    }

    /// Equilateral-triangle offsets in the plane.
    static StaFConfig triangle() {
        const double c = std::sqrt(3.0) / 2.0;
        Matrix d(3, 2);
        d << 0.0, -1.0, c, -0.5, -c, -0.5;
        return StaFConfig(d);
    }

    int L() const noexcept { return static_cast<int>(offsets_.rows()); }
    int n() const noexcept { return static_cast<int>(offsets_.cols()); }
    const Matrix& offsets() const noexcept { return offsets_; }
    double scale_num() const noexcept { return scale_num_; }
    double scale_den_offset() const noexcept { return scale_den_; }

    double theta(const Vector& x) const {
        const double xx = x.squaredNorm();
        return scale_num_ * xx / (scale_den_ + xx);
    }

private:
    Matrix offsets_;
    double scale_num_;
    double scale_den_;
};

/// Kernel centers c_i(x), one per row.
inline Matrix centers(const StaFConfig& cfg, const Vector& x) {
    return (cfg.theta(x) * cfg.offsets()).rowwise() + x.transpose();
}

// Kernel families usable with the StaF machinery. grad_sigma is the
// derivative in the evaluation point y with the anchor x held fixed.
template <class K>
concept StafKernel = requires(const K& k, const StaFConfig& cfg, const Vector& v) {
    { k.sigma(cfg, v, v) } -> std::convertible_to<Vector>;
    { k.grad_sigma(cfg, v, v) } -> std::convertible_to<Matrix>;
};

/// sigma_i(y) = y^T c_i(x).
struct LinearCenterKernel {
    Vector sigma(const StaFConfig& cfg, const Vector& y, const Vector& x) const { return centers(cfg, x) * y; }
    Matrix grad_sigma(const StaFConfig& cfg, const Vector& /*y*/, const Vector& x) const { return centers(cfg, x); }
};

static_assert(StafKernel<LinearCenterKernel>);

inline Vector kernel_sigma(const StaFConfig& cfg, const Vector& y, const Vector& x) {
    return LinearCenterKernel{}.sigma(cfg, y, x);
}

inline Matrix grad_sigma(const StaFConfig& cfg, const Vector& y, const Vector& x) {
    return LinearCenterKernel{}.grad_sigma(cfg, y, x);
}

/// Vhat(y, x, Wc) = Wc^T sigma(y, c(x)) + Bbar(y).
template <StafKernel K = LinearCenterKernel>
double value_hat(const StaFConfig& cfg, const BarrierSpec& bar, const Vector& Wc, const Vector& y, const Vector& x,
                 const K& kernel = {}) {
    return Wc.dot(kernel.sigma(cfg, y, x)) + barrier_Bbar(bar, y);
}

/// u = -u_max Tanh( R^-1 g(y)^T D / (2 u_max) ) for a value-gradient-like vector D.
inline Vector policy_star(const CostSpec& cost, const SystemModel& sys, const Vector& gradV, const Vector& y) {
    const double ub = cost.u_max();
    const Vector arg = (sys.input_map(y).transpose() * gradV).cwiseQuotient(cost.r_diag()) / (2.0 * ub);
    // tanh rounds to +-1 for |arg| > ~19; keep the range open.
    const double below_one = std::nextafter(1.0, 0.0);
    return -ub * arg.array().tanh().max(-below_one).min(below_one).matrix();
}

/// Dhat = grad_sigma(y, c(x))^T Wa + grad Bbar(y)^T.
template <StafKernel K = LinearCenterKernel>
Vector policy_gradient_term(const StaFConfig& cfg, const BarrierSpec& bar, const Vector& Wa, const Vector& y,
                            const Vector& x, const K& kernel = {}) {
    return kernel.grad_sigma(cfg, y, x).transpose() * Wa + grad_Bbar(bar, y);
}

/// Saturated approximate policy uhat(y, x, Wa); each component lies in (-u_max, u_max).
template <StafKernel K = LinearCenterKernel>
Vector policy_hat(const StaFConfig& cfg, const BarrierSpec& bar, const CostSpec& cost, const SystemModel& sys,
                  const Vector& Wa, const Vector& y, const Vector& x, const K& kernel = {}) {
    return policy_star(cost, sys, policy_gradient_term(cfg, bar, Wa, y, x, kernel), y);
}

}  // namespace safeadp
