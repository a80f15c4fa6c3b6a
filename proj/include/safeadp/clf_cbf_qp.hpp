#pragma once

#include "safeadp/cost.hpp"
#include "safeadp/errors.hpp"
#include "safeadp/model.hpp"
#include "safeadp/qp.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

/// Tuning of the relaxed CLF-CBF quadratic program.
struct QpParams {
    double alpha_scale = 1.0;  // alpha(h) = alpha_scale * h
    double gamma_scale = 10.0; // gamma(V) = gamma_scale * V
    double p = 2.0;            // relaxation penalty
    double dt = 0.01;          // zero-order-hold period [s]
    bool relaxed = true;       // false pins phi = 0 (two extra rows)

    void validate() const {
        if (!(alpha_scale > 0.0) || !(gamma_scale > 0.0)) throw InvalidArgument("class-K scales must be positive");
        if (!(p > 0.0)) throw InvalidArgument("relaxation penalty p must be positive");
        if (!(dt > 0.0)) throw InvalidArgument("QP sampling period must be positive");
    }
};

/// QP in v = [u; phi]:
///   min u^T R u + p phi^2
///   s.t. -L_g h u            <= L_f h + alpha(h)          (CBF)
///        L_g V u - phi       <= -L_f V - gamma(V)         (CLF, V = x^T Q x)
///        +-u_i               <= u_max                     (box)
/// Row order: CBF, CLF, u_1 <= .., -u_1 <= .., ..., [phi <= 0, -phi <= 0].
inline QpProblem build_qp(const SystemModel& sys, const SafeSet& set, const CostSpec& cost, const QpParams& params,
                          const Vector& x) {
    const int m = sys.m();
    const Eigen::Index d = m + 1;
    const Eigen::Index k = 2 + 2 * m + (params.relaxed ? 0 : 2);

    const Vector f = sys.drift(x);
    const Matrix g = sys.input_map(x);
    const Vector dh = set.grad_h(x);
    const double h = set.h(x);
    const Vector Qx = cost.Q() * x;
    const double V = x.dot(Qx);

    QpProblem qp;
    qp.H = Matrix::Zero(d, d);
    qp.H.topLeftCorner(m, m) = 2.0 * cost.R();
    qp.H(m, m) = 2.0 * params.p;
    qp.c = Vector::Zero(d);
    qp.A = Matrix::Zero(k, d);
    qp.b = Vector::Zero(k);

    qp.A.row(0).head(m) = -(dh.transpose() * g);
    qp.b(0) = dh.dot(f) + params.alpha_scale * h;

    qp.A.row(1).head(m) = 2.0 * Qx.transpose() * g;
    qp.A(1, m) = -1.0;
    qp.b(1) = -2.0 * Qx.dot(f) - params.gamma_scale * V;

    for (int i = 0; i < m; ++i) {
        qp.A(2 + 2 * i, i) = 1.0;
        qp.b(2 + 2 * i) = sys.u_max();
        qp.A(3 + 2 * i, i) = -1.0;
        qp.b(3 + 2 * i) = sys.u_max();
    }
    if (!params.relaxed) {
        qp.A(k - 2, m) = 1.0;
        qp.A(k - 1, m) = -1.0;
    }
    return qp;
}

struct QpControl {
    Vector u;
    double phi = 0.0;
    QpSolution solution;
};

/// Solves the CLF-CBF QP at x. Throws QpInfeasible when the rows conflict.
inline QpControl qp_controller(const SystemModel& sys, const SafeSet& set, const CostSpec& cost,
                               const QpParams& params, const Vector& x) {
    QpControl out;
    out.solution = solve_qp(build_qp(sys, set, cost, params, x));
    if (out.solution.status != QpStatus::Optimal) throw QpInfeasible("CLF-CBF QP infeasible");
    out.u = out.solution.v.head(sys.m());
    out.phi = out.solution.v(sys.m());
    return out;
}

}  // namespace safeadp
