#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "safeadp/errors.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

/// Dense strictly convex QP:  min 1/2 v^T H v + c^T v   s.t.  A v <= b.
struct QpProblem {
    Matrix H;
    Vector c;
    Matrix A;
    Vector b;

    Eigen::Index dim() const { return H.rows(); }
    Eigen::Index rows() const { return A.rows(); }
    double objective(const Vector& v) const { return 0.5 * v.dot(H * v) + c.dot(v); }
};

enum class QpStatus { Optimal, Infeasible };

struct QpSolution {
    Vector v;
    std::vector<int> active_set;  // ascending row indices
    Vector multipliers;           // one per row, zero off the active set
    QpStatus status = QpStatus::Infeasible;
    int iterations = 0;
    double objective = std::numeric_limits<double>::quiet_NaN();
};

struct KktReport {
    double stationarity = 0.0;     // ||H v + c + A^T lambda||_inf
    double primal = 0.0;           // max(0, max_i (A v - b)_i)
    double complementarity = 0.0;  // max_i |lambda_i (A v - b)_i|
    double dual = 0.0;             // max(0, -min_i lambda_i)

    bool ok(double tol) const { return stationarity <= tol && primal <= tol && complementarity <= tol && dual <= tol; }
};

inline KktReport kkt_check(const QpProblem& p, const Vector& v, const Vector& lambda) {
    KktReport r;
    const Vector slack = p.A * v - p.b;
    r.stationarity = (p.H * v + p.c + p.A.transpose() * lambda).cwiseAbs().maxCoeff();
    r.primal = std::max(0.0, slack.size() ? slack.maxCoeff() : 0.0);
    r.complementarity = slack.size() ? lambda.cwiseProduct(slack).cwiseAbs().maxCoeff() : 0.0;
    r.dual = std::max(0.0, lambda.size() ? -lambda.minCoeff() : 0.0);
    return r;
}

namespace detail {

struct ActiveSetResult {
    Vector w;
    std::vector<int> working;
    Vector lambda;  // per row
    int iterations = 0;
};

// Primal active-set iterations from a feasible point w0 with an initial,
// linearly independent working set. Bland-style smallest-index choices.
inline ActiveSetResult primal_active_set(const Matrix& H, const Vector& c, const Matrix& A, const Vector& b,
                                         Vector w, std::vector<int> working) {
    const Eigen::Index d = H.rows();
    const Eigen::Index k = A.rows();
    const int max_iter = 50 * static_cast<int>(d + k) + 50;
    const double lambda_tol = 1e-10;
    const double h_scale = std::max(1e-300, H.cwiseAbs().maxCoeff());

    ActiveSetResult out;
    for (int iter = 0; iter < max_iter; ++iter) {
        out.iterations = iter + 1;
        std::sort(working.begin(), working.end());
        const Eigen::Index nw = static_cast<Eigen::Index>(working.size());

        Matrix K = Matrix::Zero(d + nw, d + nw);
        K.topLeftCorner(d, d) = H;
        for (Eigen::Index j = 0; j < nw; ++j) {
            K.block(d + j, 0, 1, d) = A.row(working[j]);
            K.block(0, d + j, d, 1) = A.row(working[j]).transpose();
        }
        Vector rhs = Vector::Zero(d + nw);
        rhs.head(d) = -(H * w + c);
        const Vector sol = K.fullPivLu().solve(rhs);
        // a working set spanning the space pins w; only roundoff would move it
        const Vector step = nw == d ? Vector::Zero(d).eval() : sol.head(d).eval();
        const Vector mu = sol.tail(nw);

        const double grad_scale = rhs.head(d).cwiseAbs().maxCoeff() / h_scale;
        if (step.cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + w.cwiseAbs().maxCoeff() + grad_scale)) {
            int drop = -1;
            for (Eigen::Index j = 0; j < nw; ++j) {
                if (mu(j) < -lambda_tol) {
                    drop = static_cast<int>(j);
                    break;
                }
            }
            if (drop < 0) {
                out.w = w;
                out.working = working;
                out.lambda = Vector::Zero(k);
                for (Eigen::Index j = 0; j < nw; ++j) out.lambda(working[j]) = std::max(0.0, mu(j));
                return out;
            }
            working.erase(working.begin() + drop);
            continue;
        }

        double alpha = 1.0;
        int blocking = -1;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (std::find(working.begin(), working.end(), static_cast<int>(i)) != working.end()) continue;
            const double ap = A.row(i).dot(step);
            if (ap <= 1e-14 * A.row(i).norm() * step.norm()) continue;
            const double ai = std::max(0.0, b(i) - A.row(i).dot(w)) / ap;
            if (ai < alpha) {
                alpha = ai;
                blocking = static_cast<int>(i);
            }
        }
        w += alpha * step;
        if (blocking >= 0) working.push_back(blocking);
    }
    throw std::runtime_error("active-set QP did not converge within the iteration limit");
}

// Greedy linearly independent subset of rows whose residual is within tol.
inline std::vector<int> active_rows(const Matrix& A, const Vector& b, const Vector& w, double tol) {
    std::vector<int> rows;
    Matrix basis(0, A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        if (std::abs(A.row(i).dot(w) - b(i)) > tol) continue;
        Matrix trial(basis.rows() + 1, A.cols());
        trial << basis, A.row(i);
        Eigen::FullPivLU<Matrix> lu(trial);
        lu.setThreshold(1e-10);
        if (lu.rank() == trial.rows()) {
            basis = trial;
            rows.push_back(static_cast<int>(i));
        }
    }
    return rows;
}

}  // namespace detail

/// Solves a strictly convex QP by the primal active-set method.
///
/// Feasibility phase: an elastic projection problem
///   min 1/2 ||v - v0||^2 + 1/2 t^2 + M t   s.t.  A v - t <= b,  t >= 0
/// starts feasible from the unconstrained minimizer v0 of the original QP.
/// The penalty is exact once M exceeds the multiplier sum of the projection,
/// so M is raised until t = 0 or a ceiling is hit (-> Infeasible). The
/// optimality phase reruns the active-set iterations on the original problem
/// from the feasible point.
inline QpSolution solve_qp(const QpProblem& p) {
    const Eigen::Index d = p.dim();
    const Eigen::Index k = p.rows();
    if (p.H.cols() != d || p.c.size() != d || p.A.cols() != d || p.b.size() != k)
        throw InvalidArgument("QP dimension mismatch");
    Eigen::LLT<Matrix> llt(p.H);
    if (llt.info() != Eigen::Success) throw InvalidArgument("QP Hessian must be positive definite");

    QpSolution out;
    const Vector v0 = llt.solve(-p.c);
    const double scale = std::max({1.0, v0.cwiseAbs().maxCoeff(), k ? p.b.cwiseAbs().maxCoeff() : 0.0});

    Vector v = v0;
    const Vector viol0 = k ? (p.A * v0 - p.b).eval() : Vector();
    if (k && viol0.maxCoeff() > 0.0) {
        Matrix He = Matrix::Identity(d + 1, d + 1);
        Matrix Ae = Matrix::Zero(k + 1, d + 1);
        Ae.topLeftCorner(k, d) = p.A;
        Ae.col(d).head(k).setConstant(-1.0);
        Ae(k, d) = -1.0;
        Vector be = Vector::Zero(k + 1);
        be.head(k) = p.b;
        Vector w(d + 1);
        w << v0, viol0.maxCoeff();
        bool feasible = false;
        for (double big_m = 10.0 * scale; big_m <= 1e10 * scale; big_m *= 100.0) {
            Vector ce(d + 1);
            ce << -v0, big_m;
            auto phase1 = detail::primal_active_set(He, ce, Ae, be, w, {});
            out.iterations += phase1.iterations;
            w = phase1.w;
            if (w(d) <= 1e-10 * scale) {
                feasible = true;
                break;
            }
        }
        v = w.head(d);
        if (!feasible) {
            out.v = v;
            out.status = QpStatus::Infeasible;
            return out;
        }
    }

    auto working = detail::active_rows(p.A, p.b, v, 1e-10 * scale);
    auto phase2 = detail::primal_active_set(p.H, p.c, p.A, p.b, v, working);
    out.iterations += phase2.iterations;
    out.v = phase2.w;
    out.active_set = phase2.working;
    out.multipliers = phase2.lambda;
    out.status = QpStatus::Optimal;
    out.objective = p.objective(out.v);
    return out;
}

inline std::string to_string(QpStatus s) { return s == QpStatus::Optimal ? "Optimal" : "Infeasible"; }

}  // namespace safeadp
