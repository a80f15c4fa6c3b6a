#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <vector>

#include "safeadp/cost.hpp"
#include "safeadp/errors.hpp"
#include "safeadp/model.hpp"
#include "safeadp/staf.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

/// Learning gains for the critic, gain matrix, and actor update laws.
struct LearnerGains {
    double kc1 = 0.05;
    double kc2 = 0.75;
    double ka1 = 0.75;
    double nu = 1.0;
    double beta = 0.001;
    int N = 1;               // extrapolation points per step
    double gamma0 = 1.0;     // Gamma(0) = gamma0 * I
    double wa_bound = 20.0;  // actor projection radius
    std::uint64_t seed = 7;
    double pe_window = 1.0;  // excitation-metric window [s]

    // kc1/kc2/ka1/beta may be zero to switch a learning path off.
    void validate() const {
        if (kc1 < 0.0 || kc2 < 0.0 || ka1 < 0.0 || beta < 0.0) throw InvalidArgument("learning gains must be nonnegative");
        if (!(nu > 0.0)) throw InvalidArgument("normalization gain nu must be positive");
        if (N < 1) throw InvalidArgument("need at least one extrapolation point");
        if (!(gamma0 > 0.0)) throw InvalidArgument("gamma0 must be positive");
        if (!(wa_bound > 0.0)) throw InvalidArgument("actor weight bound must be positive");
        if (!(pe_window > 0.0)) throw InvalidArgument("excitation window must be positive");
    }
};

/// Everything needed to evaluate the approximate Hamiltonian.
struct AdpProblem {
    SystemModel sys;
    CostSpec cost;
    BarrierSpec barrier;
    StaFConfig staf;
};

/// Bellman error and its regressor at one evaluation point.
struct BellmanSample {
    Vector y;
    Vector u;          // uhat(y, x, Wa)
    Vector omega;      // grad_sigma(y, c(x)) (f(y) + g(y) u)
    double omega_B = 0.0;
    double r = 0.0;    // instantaneous cost at (y, u)
    double rho = 1.0;  // 1 + nu omega^T omega
    double delta = 0.0;
    Matrix Lambda;     // omega omega^T / rho^2
};

/// Evaluates delta(y, x, Wc, Wa). With y == x this is the on-trajectory
/// Bellman error, otherwise an extrapolated one.
template <StafKernel K = LinearCenterKernel>
BellmanSample bellman_at(const AdpProblem& p, double nu, const Vector& y, const Vector& x, const Vector& Wc,
                         const Vector& Wa, const K& kernel = {}) {
    BellmanSample s;
    s.y = y;
    s.u = policy_hat(p.staf, p.barrier, p.cost, p.sys, Wa, y, x, kernel);
    const Vector ydot = p.sys.xdot(y, s.u);
    s.omega = kernel.grad_sigma(p.staf, y, x) * ydot;
    s.omega_B = grad_Bbar(p.barrier, y).dot(ydot);
    s.r = instantaneous_cost(p.cost, p.barrier, y, s.u);
    s.delta = Wc.dot(s.omega) + s.r + s.omega_B;
    s.rho = 1.0 + nu * s.omega.squaredNorm();
    s.Lambda = s.omega * s.omega.transpose() / (s.rho * s.rho);
    return s;
}

/// Seeded generator with a platform-independent uniform draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // 53 random mantissa bits -> [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::mt19937_64 engine_;
};

/// N points uniform on the axis-aligned cube of side 0.1 theta(x) centered at x.
/// Points with h <= h_min are redrawn (16 attempts) before collapsing to x.
inline std::vector<Vector> sample_extrapolation_points(Rng& rng, const Vector& x, int N, const StaFConfig& cfg,
                                                       const SafeSet& set) {
    const double half = 0.05 * cfg.theta(x);
    std::vector<Vector> pts;
    pts.reserve(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        Vector p = x;
        bool ok = false;
        for (int attempt = 0; attempt < 16 && !ok; ++attempt) {
            for (Eigen::Index i = 0; i < x.size(); ++i) p(i) = x(i) + rng.uniform(-half, half);
            ok = set.h(p) > kHMin;
        }
        pts.push_back(ok ? p : x);
    }
    return pts;
}

/// Critic weight derivative: -Gamma (kc1 omega delta / rho^2 + kc2/N sum omega_k delta_k / rho_k^2).
inline Vector critic_rhs(const Matrix& Gamma, const LearnerGains& g, const BellmanSample& on,
                         const std::vector<BellmanSample>& extrap) {
    Vector acc = g.kc1 * on.omega * on.delta / (on.rho * on.rho);
    if (!extrap.empty()) {
        Vector sum = Vector::Zero(on.omega.size());
        for (const auto& e : extrap) sum += e.omega * e.delta / (e.rho * e.rho);
        acc += g.kc2 / static_cast<double>(extrap.size()) * sum;
    }
    return -Gamma * acc;
}

/// Gain-matrix derivative beta Gamma - Gamma (kc1 Lambda + kc2/N sum Lambda_k) Gamma, symmetrized.
inline Matrix gamma_rhs(const Matrix& Gamma, const LearnerGains& g, const Matrix& Lambda,
                        const std::vector<Matrix>& Lambda_k) {
    Matrix mix = g.kc1 * Lambda;
    if (!Lambda_k.empty()) {
        Matrix sum = Matrix::Zero(Lambda.rows(), Lambda.cols());
        for (const auto& l : Lambda_k) sum += l;
        mix += g.kc2 / static_cast<double>(Lambda_k.size()) * sum;
    }
    const Matrix d = g.beta * Gamma - Gamma * mix * Gamma;
    return 0.5 * (d + d.transpose());
}

inline constexpr double kProjectionLayer = 0.05;

/// Smooth projection of mu onto the ball of radius `bound`: outside the ball the
/// outward radial part of mu is scaled down linearly across the layer
/// bound^2 <= ||w||^2 <= bound^2 (1 + eps) and removed entirely at its edge.
inline Vector smooth_projection(const Vector& w, const Vector& mu, double bound, double eps = kProjectionLayer) {
    const double ww = w.squaredNorm();
    const double b2 = bound * bound;
    const double outward = w.dot(mu);
    if (ww <= b2 || outward <= 0.0) return mu;
    const double theta = std::min(1.0, (ww - b2) / (b2 * eps));
    return mu - theta * (outward / ww) * w;
}

/// Actor derivative proj{ -ka1 (Wa - Wc) }.
inline Vector actor_rhs(const Vector& Wa, const Vector& Wc, const LearnerGains& g) {
    return smooth_projection(Wa, -g.ka1 * (Wa - Wc), g.wa_bound);
}

struct ExcitationMetrics {
    double c1_now = 0.0;
    double c2_window = 0.0;
    double c3_window = 0.0;
};

/// Tracks empirical surrogates of the finite-excitation conditions over a
/// trailing time window.
class ExcitationMonitor {
public:
    explicit ExcitationMonitor(double window) : window_(window) {
        if (!(window_ > 0.0)) throw InvalidArgument("excitation window must be positive");
    }

    /// `Lambda_k_mean` is (1/N) sum_k Lambda_k at time t.
    ExcitationMetrics push(double t, const Matrix& Lambda_k_mean, const Matrix& Lambda) {
        if (!hist_.empty() && !(t > hist_.back().t)) throw InvalidArgument("excitation samples must be time-ordered");
        if (hist_.empty() && !have_t0_) {
            t0_ = t;
            have_t0_ = true;
        }
        hist_.push_back({t, Lambda_k_mean, Lambda});
        // keep one sample at or before the window start for interpolation
        while (hist_.size() > 2 && hist_[1].t <= t - window_) hist_.pop_front();
        latest_ = compute();
        const bool full = t - t0_ >= window_;
        if (full && latest_.c1_now < kWeak && latest_.c2_window < kWeak && latest_.c3_window < kWeak) weak_ = true;
        return latest_;
    }

    const ExcitationMetrics& latest() const noexcept { return latest_; }
    bool weak_excitation() const noexcept { return weak_; }
    double window() const noexcept { return window_; }

    static constexpr double kWeak = 1e-8;

private:
    struct Sample {
        double t;
        Matrix lk;
        Matrix l;
    };

    static double min_eig(const Matrix& m) {
        if (m.size() == 0) return 0.0;
        return std::max(0.0, Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose())).eigenvalues()(0));
    }

    ExcitationMetrics compute() {
        ExcitationMetrics out;
        const Sample& last = hist_.back();
        out.c1_now = min_eig(last.lk);
        if (hist_.size() < 2) return out;
        const double t_start = last.t - window_;
        Matrix int_lk = Matrix::Zero(last.lk.rows(), last.lk.cols());
        Matrix int_l = Matrix::Zero(last.l.rows(), last.l.cols());
        for (std::size_t i = 1; i < hist_.size(); ++i) {
            const Sample& a = hist_[i - 1];
            const Sample& b = hist_[i];
            if (b.t <= t_start) continue;
            double ta = a.t;
            Matrix lka = a.lk;
            Matrix la = a.l;
            if (ta < t_start) {
                const double w = (t_start - a.t) / (b.t - a.t);
                lka = (1.0 - w) * a.lk + w * b.lk;
                la = (1.0 - w) * a.l + w * b.l;
                ta = t_start;
            }
            const double dt = b.t - ta;
            int_lk += 0.5 * dt * (lka + b.lk);
            int_l += 0.5 * dt * (la + b.l);
        }
        out.c2_window = min_eig(int_lk);
        out.c3_window = min_eig(int_l);
        return out;
    }

    double window_;
    std::deque<Sample> hist_;
    ExcitationMetrics latest_;
    double t0_ = 0.0;
    bool have_t0_ = false;
    bool weak_ = false;
};

/// Computes metrics for a complete history in one call.
inline ExcitationMetrics excitation_metrics(const std::vector<double>& t, const std::vector<Matrix>& Lambda_k_mean,
                                            const std::vector<Matrix>& Lambda, double window, bool* weak = nullptr) {
    if (t.empty() || t.size() != Lambda_k_mean.size() || t.size() != Lambda.size())
        throw InvalidArgument("excitation history must be nonempty and consistent");
    ExcitationMonitor mon(window);
    for (std::size_t i = 0; i < t.size(); ++i) mon.push(t[i], Lambda_k_mean[i], Lambda[i]);
    if (weak) *weak = mon.weak_excitation();
    return mon.latest();
}

}  // namespace safeadp
