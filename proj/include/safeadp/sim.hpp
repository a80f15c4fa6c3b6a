#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "safeadp/clf_cbf_qp.hpp"
#include "safeadp/cost.hpp"
#include "safeadp/critic.hpp"
#include "safeadp/errors.hpp"
#include "safeadp/integrator.hpp"
#include "safeadp/model.hpp"
#include "safeadp/record.hpp"
#include "safeadp/staf.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

enum class ControllerKind { Adp, Qp };

inline std::string to_string(ControllerKind k) { return k == ControllerKind::Adp ? "adp" : "qp"; }

struct SimConfig {
    double t_final = 25.0;
    Vector x0 = Vector2(3.0, 3.5);
    double abs_tol = 1e-6;
    double rel_tol = 1e-6;
    double dt_out = 0.01;
    ControllerKind controller = ControllerKind::Adp;
    double w_init_max = 4.0;  // initial weights ~ U[0, w_init_max]
};

/// Complete, validated description of one experiment.
struct Scenario {
    SystemModel sys;
    std::shared_ptr<const CircularSafeSet> safeset;
    CostSpec cost;
    BarrierSpec barrier;
    StaFConfig staf;
    LearnerGains gains;
    QpParams qp;
    SimConfig sim;

    AdpProblem adp_problem() const { return {sys, cost, barrier, staf}; }

    void validate() const {
        gains.validate();
        qp.validate();
        if (sim.x0.size() != sys.n()) throw InvalidArgument("x0 dimension does not match the system");
        if (staf.n() != sys.n()) throw InvalidArgument("kernel offsets dimension does not match the system");
        if (cost.Q().rows() != sys.n()) throw InvalidArgument("Q dimension does not match the system");
        if (cost.r_diag().size() != sys.m()) throw InvalidArgument("r_diag dimension does not match the input");
        if (cost.u_max() != sys.u_max()) throw InvalidArgument("cost and system disagree on u_max");
        if (!(safeset->h(sim.x0) > 0.0)) throw InvalidArgument("x0 must lie in the interior of the safe set");
        if (!(sim.t_final > 0.0)) throw InvalidArgument("t_final must be positive");
        if (!(sim.abs_tol > 0.0) || !(sim.rel_tol > 0.0)) throw InvalidArgument("integrator tolerances must be positive");
        if (!(sim.dt_out > 0.0)) throw InvalidArgument("dt_out must be positive");
        if (!(sim.w_init_max >= 0.0)) throw InvalidArgument("w_init_max must be nonnegative");
    }

    /// Single-integrator obstacle-avoidance experiment with the reference gains;
    /// geometry, barrier constants and x0 are repo choices.
    static Scenario defaults() {
        const double u_max = 0.5;
        auto set = std::make_shared<const CircularSafeSet>(Vector2(2.0, 2.0), 1.0);
        return Scenario{single_integrator(u_max),
                        set,
                        CostSpec(Matrix::Identity(2, 2), Vector::Constant(2, 10.0), u_max),
                        BarrierSpec(set, 12.0, 0.5, 0.2, 1.0),
                        StaFConfig::triangle(),
                        LearnerGains{},
                        QpParams{},
                        SimConfig{}};
    }
};

/// Plant state plus learner state, flattened for the integrator as
/// [x | Wc | Wa | Gamma (column-major) | J | J_native].
struct AugmentedState {
    Vector x;
    Vector Wc;
    Vector Wa;
    Matrix Gamma;
    double J = 0.0;
    double J_native = 0.0;

    Vector pack() const {
        const Eigen::Index n = x.size(), L = Wc.size();
        Vector y(n + 2 * L + L * L + 2);
        y << x, Wc, Wa, Eigen::Map<const Vector>(Gamma.data(), L * L), J, J_native;
        return y;
    }

    static AugmentedState unpack(const Vector& y, int n, int L) {
        AugmentedState s;
        s.x = y.segment(0, n);
        s.Wc = y.segment(n, L);
        s.Wa = y.segment(n + L, L);
        s.Gamma = Eigen::Map<const Matrix>(y.data() + n + 2 * L, L, L);
        s.J = y(n + 2 * L + L * L);
        s.J_native = y(n + 2 * L + L * L + 1);
        return s;
    }
};

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline double min_eig(const Matrix& m) { return Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues()(0); }

// Output sample times i * dt_out, with the final time always included.
class OutputClock {
public:
    OutputClock(double dt, double t_final) : dt_(dt), t_final_(t_final) {}
    bool done() const { return finished_; }
    double next() const { return std::min(static_cast<double>(i_) * dt_, t_final_); }
    void advance() {
        if (next() >= t_final_) finished_ = true;
        ++i_;
    }

private:
    double dt_;
    double t_final_;
    long i_ = 0;
    bool finished_ = false;
};

}  // namespace detail

/// Coupled plant/critic/gain/actor dynamics driven by the approximate policy.
class AdpEpisode {
public:
    explicit AdpEpisode(const Scenario& sc)
        : sc_(sc), prob_(sc.adp_problem()), rng_(sc.gains.seed), monitor_(sc.gains.pe_window),
          clock_(sc.sim.dt_out, sc.sim.t_final), n_(sc.sys.n()), L_(sc.staf.L()) {}

    AugmentedState initial_state() {
        AugmentedState s;
        s.x = sc_.sim.x0;
        s.Wc.resize(L_);
        s.Wa.resize(L_);
        for (int i = 0; i < L_; ++i) s.Wc(i) = rng_.uniform(0.0, sc_.sim.w_init_max);
        for (int i = 0; i < L_; ++i) s.Wa(i) = rng_.uniform(0.0, sc_.sim.w_init_max);
        s.Gamma = sc_.gains.gamma0 * Matrix::Identity(L_, L_);
        return s;
    }

    const std::vector<Vector>& extrapolation_points() const { return frozen_; }

    /// Time derivative of the augmented state for fixed extrapolation points.
    AugmentedState derivative(const AugmentedState& s) const {
        const auto& g = sc_.gains;
        const BellmanSample on = bellman_at(prob_, g.nu, s.x, s.x, s.Wc, s.Wa);
        std::vector<BellmanSample> ex;
        std::vector<Matrix> lk;
        ex.reserve(frozen_.size());
        lk.reserve(frozen_.size());
        for (const auto& p : frozen_) {
            ex.push_back(bellman_at(prob_, g.nu, p, s.x, s.Wc, s.Wa));
            lk.push_back(ex.back().Lambda);
        }
        AugmentedState d;
        d.x = sc_.sys.xdot(s.x, on.u);
        d.Wc = critic_rhs(s.Gamma, g, on, ex);
        d.Wa = actor_rhs(s.Wa, s.Wc, g);
        d.Gamma = gamma_rhs(s.Gamma, g, on.Lambda, lk);
        d.J = quadratic_cost(sc_.cost, s.x, on.u);
        d.J_native = on.r;
        return d;
    }

    // --- OdeSystem interface -------------------------------------------------

    void rhs(double t, const Vector& y, Vector& dy) {
        const AugmentedState s = AugmentedState::unpack(y, n_, L_);
        if (!(sc_.safeset->h(s.x) > kHMin)) {
            note_bad(t, y);
            throw BoundaryViolation("ADP state reached the safe-set boundary");
        }
        dy = derivative(s).pack();
    }

    bool admissible(double t, const Vector& y) {
        const bool ok = y.allFinite() && sc_.safeset->h(y.head(n_)) > kHMin;
        if (!ok) note_bad(t, y);
        return ok;
    }

    void begin_step(double t, const Vector& y) {
        frozen_ = sample_extrapolation_points(rng_, y.head(n_), sc_.gains.N, sc_.staf, *sc_.safeset);
        if (rec_.rows.empty()) emit_until(t, [&](double) { return y; });
    }

    void accepted(const DenseStep& step, Vector& y) {
        const Eigen::Index off = n_ + 2 * L_;
        Eigen::Map<Matrix> G(y.data() + off, L_, L_);
        const Matrix sym = 0.5 * (G + G.transpose());
        G = sym;
        const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues();
        if (!(eig(0) > 0.0)) throw std::runtime_error("gain matrix Gamma lost positive definiteness");
        gamma_min_ = std::min(gamma_min_, eig(0));
        gamma_max_ = std::max(gamma_max_, eig(L_ - 1));
        const double t1 = step.t1();
        emit_until(t1, [&](double t) { return t >= t1 ? y : step(t); });
        last_t_ = t1;
        last_y_ = y;
    }

    // --------------------------------------------------------------------------

    /// Builds one output row from an augmented state at time t.
    RecordRow make_row(double t, const Vector& y) {
        const AugmentedState s = AugmentedState::unpack(y, n_, L_);
        const auto& g = sc_.gains;
        RecordRow r;
        r.t = t;
        r.x = s.x;
        r.Wc = s.Wc;
        r.Wa = s.Wa;
        r.J = s.J;
        r.h = sc_.safeset->h(s.x);
        r.min_eig_gamma = detail::min_eig(0.5 * (s.Gamma + s.Gamma.transpose()));
        if (!(r.h > kHMin)) {
            r.u = Vector::Constant(sc_.sys.m(), detail::nan());
            r.B = r.Vhat = r.delta = r.c1 = detail::nan();
            return r;
        }
        const BellmanSample on = bellman_at(prob_, g.nu, s.x, s.x, s.Wc, s.Wa);
        Matrix lk_mean = Matrix::Zero(L_, L_);
        for (const auto& p : frozen_) lk_mean += bellman_at(prob_, g.nu, p, s.x, s.Wc, s.Wa).Lambda;
        if (!frozen_.empty()) lk_mean /= static_cast<double>(frozen_.size());
        const ExcitationMetrics em = monitor_.push(t, lk_mean, on.Lambda);
        r.u = on.u;
        r.B = barrier_B(sc_.barrier, s.x);
        r.Vhat = value_hat(sc_.staf, sc_.barrier, s.Wc, s.x, s.x);
        r.delta = on.delta;
        r.c1 = em.c1_now;
        return r;
    }

    TrajectoryRecord run() {
        const auto wall0 = std::chrono::steady_clock::now();
        rec_ = TrajectoryRecord{};
        rec_.n = n_;
        rec_.m = sc_.sys.m();
        rec_.L = L_;
        rec_.controller = "adp";

        Vector y = initial_state().pack();
        last_t_ = 0.0;
        last_y_ = y;
        IntegratorOptions opt;
        opt.abs_tol = sc_.sim.abs_tol;
        opt.rel_tol = sc_.sim.rel_tol;
        const IntegrationResult res = integrate_adaptive(*this, y, 0.0, sc_.sim.t_final, opt);

        rec_.accepted_steps = res.accepted;
        rec_.rejected_steps = res.rejected;
        rec_.message = res.message;
        switch (res.status) {
            case IntegrationStatus::Ok: rec_.status = RunStatus::Ok; break;
            case IntegrationStatus::SafetyBreach: rec_.status = RunStatus::SafetyBreach; break;
            case IntegrationStatus::StepUnderflow: rec_.status = RunStatus::StepUnderflow; break;
        }
        if (rec_.status != RunStatus::Ok) {
            if (rec_.status == RunStatus::SafetyBreach && has_bad_ && (rec_.rows.empty() || bad_t_ > rec_.rows.back().t)) {
                rec_.rows.push_back(make_row(bad_t_, bad_y_));
            } else if (rec_.rows.empty() || last_t_ > rec_.rows.back().t) {
                rec_.rows.push_back(make_row(last_t_, last_y_));
            }
            rec_.rows.back().status = rec_.status;
        }
        const AugmentedState fin = AugmentedState::unpack(last_y_, n_, L_);
        rec_.J_native = fin.J_native;
        rec_.gamma_final = fin.Gamma;
        rec_.weak_excitation = monitor_.weak_excitation();
        rec_.gamma_min_eig = gamma_min_;
        rec_.gamma_max_eig = gamma_max_;
        rec_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
        return std::move(rec_);
    }

private:
    template <class StateAt>
    void emit_until(double t_end, StateAt&& state_at) {
        while (!clock_.done() && clock_.next() <= t_end) {
            const double t = clock_.next();
            rec_.rows.push_back(make_row(t, state_at(t)));
            clock_.advance();
        }
    }

    void note_bad(double t, const Vector& y) {
        has_bad_ = true;
        bad_t_ = t;
        bad_y_ = y;
    }

    const Scenario& sc_;
    AdpProblem prob_;
    Rng rng_;
    ExcitationMonitor monitor_;
    TrajectoryRecord rec_;
    detail::OutputClock clock_;
    int n_;
    int L_;
    std::vector<Vector> frozen_;
    double gamma_min_ = std::numeric_limits<double>::infinity();
    double gamma_max_ = 0.0;
    double last_t_ = 0.0;
    Vector last_y_;
    bool has_bad_ = false;
    double bad_t_ = 0.0;
    Vector bad_y_;
};

inline TrajectoryRecord run_adp_episode(const Scenario& sc) {
    sc.validate();
    AdpEpisode ep(sc);
    return ep.run();
}

namespace detail {

// Plant under a held input, with the comparison cost appended: [x | J].
struct HeldInputPlant {
    const SystemModel& sys;
    const CostSpec& cost;
    Vector u;
    std::function<void(const DenseStep&, const Vector&)> on_accept;

    void rhs(double, const Vector& y, Vector& dy) {
        const Eigen::Index n = sys.n();
        const Vector x = y.head(n);
        dy.resize(n + 1);
        dy.head(n) = sys.xdot(x, u);
        dy(n) = quadratic_cost(cost, x, u);
    }

    void accepted(const DenseStep& step, Vector& y) {
        if (on_accept) on_accept(step, y);
    }
};

}  // namespace detail

/// Sampled-data CLF-CBF QP baseline: solve at t_k = k dt, hold u over [t_k, t_k + dt).
inline TrajectoryRecord run_qp_episode(const Scenario& sc) {
    sc.validate();
    const auto wall0 = std::chrono::steady_clock::now();
    const int n = sc.sys.n(), m = sc.sys.m(), L = sc.staf.L();
    TrajectoryRecord rec;
    rec.n = n;
    rec.m = m;
    rec.L = L;
    rec.controller = "qp";

    const double T = sc.sim.t_final;
    const double dt = sc.qp.dt;
    detail::OutputClock clock(sc.sim.dt_out, T);
    const Vector nan_L = Vector::Constant(L, detail::nan());

    auto row = [&](double t, const Vector& y, const Vector& u) {
        RecordRow r;
        r.t = t;
        r.x = y.head(n);
        r.u = u;
        r.h = sc.safeset->h(r.x);
        r.B = r.h > kHMin ? barrier_B(sc.barrier, r.x) : detail::nan();
        r.Vhat = r.delta = r.min_eig_gamma = r.c1 = detail::nan();
        r.Wc = nan_L;
        r.Wa = nan_L;
        r.J = y(n);
        return r;
    };

    Vector y = Vector::Zero(n + 1);
    y.head(n) = sc.sim.x0;
    IntegratorOptions opt;
    opt.abs_tol = sc.sim.abs_tol;
    opt.rel_tol = sc.sim.rel_tol;
    Vector u = Vector::Zero(m);

    for (long k = 0;; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        if (t0 >= T) break;
        const double t1 = std::min(static_cast<double>(k + 1) * dt, T);
        const Vector x = y.head(n);
        try {
            u = qp_controller(sc.sys, *sc.safeset, sc.cost, sc.qp, x).u;
        } catch (const QpInfeasible& e) {
            rec.infeasible_events = 1;
            rec.status = RunStatus::QpInfeasible;
            rec.message = e.what();
            RecordRow r = row(t0, y, Vector::Constant(m, detail::nan()));
            r.status = RunStatus::QpInfeasible;
            if (!rec.rows.empty() && rec.rows.back().t >= t0) rec.rows.pop_back();
            rec.rows.push_back(std::move(r));
            break;
        } catch (const SingularGradient& e) {
            rec.status = RunStatus::QpInfeasible;
            rec.infeasible_events = 1;
            rec.message = e.what();
            RecordRow r = row(t0, y, Vector::Constant(m, detail::nan()));
            r.status = RunStatus::QpInfeasible;
            if (!rec.rows.empty() && rec.rows.back().t >= t0) rec.rows.pop_back();
            rec.rows.push_back(std::move(r));
            break;
        }
        detail::HeldInputPlant plant{sc.sys, sc.cost, u, {}};
        const bool final_interval = t1 >= T;
        plant.on_accept = [&](const DenseStep& step, const Vector& yy) {
            const double te = step.t1();
            while (!clock.done() && (clock.next() < te || (final_interval && te >= T && clock.next() <= te))) {
                const double t = clock.next();
                rec.rows.push_back(row(t, t >= te ? yy : step(t), u));
                clock.advance();
            }
        };
        // rows at exactly t0 belong to this interval
        while (!clock.done() && clock.next() <= t0) {
            rec.rows.push_back(row(clock.next(), y, u));
            clock.advance();
        }
        const IntegrationResult res = integrate_adaptive(plant, y, t0, t1, opt);
        rec.accepted_steps += res.accepted;
        rec.rejected_steps += res.rejected;
        if (res.status != IntegrationStatus::Ok) {
            rec.status = RunStatus::StepUnderflow;
            rec.message = res.message;
            break;
        }
    }
    if (!rec.rows.empty() && rec.status != RunStatus::Ok) rec.rows.back().status = rec.status;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return rec;
}

inline TrajectoryRecord run_episode(const Scenario& sc) {
    return sc.sim.controller == ControllerKind::Adp ? run_adp_episode(sc) : run_qp_episode(sc);
}

/// Per-row safety diagnostics with alpha(h) = h.
struct SafetyDiagnostics {
    std::vector<double> h;
    std::vector<double> B;
    std::vector<double> cbf_margin;
    std::vector<bool> value_decreased;  // first row: true
    double min_h = std::numeric_limits<double>::infinity();
    double min_B = std::numeric_limits<double>::infinity();
    double min_cbf_margin = std::numeric_limits<double>::infinity();
    int value_increase_rows = 0;
};

inline SafetyDiagnostics safety_diagnostics(const TrajectoryRecord& rec, const Scenario& sc) {
    SafetyDiagnostics d;
    const ClassKScale alpha(1.0);
    double prev_v = detail::nan();
    for (const auto& r : rec.rows) {
        const double h = sc.safeset->h(r.x);
        const double B = h > kHMin ? barrier_B(sc.barrier, r.x) : detail::nan();
        double margin = detail::nan();
        if (r.u.allFinite() && (r.x.head<2>() - sc.safeset->center()).norm() >= 1e-12)
            margin = cbf_margin(sc.sys, *sc.safeset, alpha, r.x, r.u);
        const double v = std::isfinite(r.Vhat) ? r.Vhat : r.x.dot(sc.cost.Q() * r.x);
        const bool dec = std::isnan(prev_v) || v <= prev_v;
        prev_v = v;
        d.h.push_back(h);
        d.B.push_back(B);
        d.cbf_margin.push_back(margin);
        d.value_decreased.push_back(dec);
        d.min_h = std::min(d.min_h, h);
        if (!std::isnan(B)) d.min_B = std::min(d.min_B, B);
        if (!std::isnan(margin)) d.min_cbf_margin = std::min(d.min_cbf_margin, margin);
        if (!dec) ++d.value_increase_rows;
    }
    return d;
}

}  // namespace safeadp
