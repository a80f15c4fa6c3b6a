#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "safeadp/errors.hpp"
#include "safeadp/types.hpp"

namespace safeadp {

enum class RunStatus { Ok, SafetyBreach, QpInfeasible, StepUnderflow };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return "OK";
        case RunStatus::SafetyBreach: return "SAFETY_BREACH";
        case RunStatus::QpInfeasible: return "QP_INFEASIBLE";
        case RunStatus::StepUnderflow: return "STEP_UNDERFLOW";
    }
    return "?";
}

inline RunStatus parse_run_status(const std::string& s) {
    if (s == "OK") return RunStatus::Ok;
    if (s == "SAFETY_BREACH") return RunStatus::SafetyBreach;
    if (s == "QP_INFEASIBLE") return RunStatus::QpInfeasible;
    if (s == "STEP_UNDERFLOW") return RunStatus::StepUnderflow;
    throw std::runtime_error("unknown status '" + s + "'");
}

/// Process exit code for a finished episode.
inline int exit_code(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return 0;
        case RunStatus::SafetyBreach: return 2;
        case RunStatus::QpInfeasible: return 3;
        case RunStatus::StepUnderflow: return 5;
    }
    return 1;
}

struct RecordRow {
    double t = 0.0;
    Vector x;
    Vector u;
    double h = 0.0;
    double B = 0.0;
    double Vhat = 0.0;
    double delta = 0.0;
    Vector Wc;
    Vector Wa;
    double min_eig_gamma = 0.0;
    double c1 = 0.0;
    double J = 0.0;  // accumulated x^T Q x + u^T R u
    RunStatus status = RunStatus::Ok;
};

/// Sampled trajectory of one episode plus run-level metadata. Learner columns
/// are NaN for the QP controller.
struct TrajectoryRecord {
    int n = 2;
    int m = 2;
    int L = 3;
    std::string controller;
    std::vector<RecordRow> rows;
    RunStatus status = RunStatus::Ok;
    std::string message;

    double J_native = std::numeric_limits<double>::quiet_NaN();  // ADP: integral of the barrier-augmented cost
    bool weak_excitation = false;
    double gamma_min_eig = std::numeric_limits<double>::quiet_NaN();  // over accepted steps
    double gamma_max_eig = std::numeric_limits<double>::quiet_NaN();
    Matrix gamma_final;  // ADP only
    long accepted_steps = 0;
    long rejected_steps = 0;
    int infeasible_events = 0;
    double wall_seconds = 0.0;
};

inline std::string csv_header(int n, int m, int L) {
    std::string h = "t";
    for (int i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
    for (int i = 1; i <= m; ++i) h += ",u" + std::to_string(i);
    h += ",h,B,Vhat,delta";
    for (int i = 1; i <= L; ++i) h += ",Wc" + std::to_string(i);
    for (int i = 1; i <= L; ++i) h += ",Wa" + std::to_string(i);
    h += ",minEigGamma,c1,J,status";
    return h;
}

namespace detail {

inline void put(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    line += buf;
    line += ',';
}

inline void put_vec(std::string& line, const Vector& v, int count) {
    for (int i = 0; i < count; ++i) put(line, i < v.size() ? v(i) : std::numeric_limits<double>::quiet_NaN());
}

}  // namespace detail

inline std::string format_csv(const TrajectoryRecord& rec) {
    std::string out = csv_header(rec.n, rec.m, rec.L) + "\n";
    std::string line;
    for (const auto& r : rec.rows) {
        line.clear();
        detail::put(line, r.t);
        detail::put_vec(line, r.x, rec.n);
        detail::put_vec(line, r.u, rec.m);
        detail::put(line, r.h);
        detail::put(line, r.B);
        detail::put(line, r.Vhat);
        detail::put(line, r.delta);
        detail::put_vec(line, r.Wc, rec.L);
        detail::put_vec(line, r.Wa, rec.L);
        detail::put(line, r.min_eig_gamma);
        detail::put(line, r.c1);
        detail::put(line, r.J);
        line += to_string(r.status);
        out += line;
        out += '\n';
    }
    return out;
}

inline void write_csv(const TrajectoryRecord& rec, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    const std::string text = format_csv(rec);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

/// Parses a CSV written by write_csv. Dimensions come from the header.
inline TrajectoryRecord read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error("empty CSV '" + path + "'");
    TrajectoryRecord rec;
    auto count = [&](const std::string& prefix) {
        int c = 0;
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ','))
            if (col.rfind(prefix, 0) == 0 && col.size() > prefix.size() &&
                std::isdigit(static_cast<unsigned char>(col[prefix.size()])))
                ++c;
        return c;
    };
    rec.n = count("x");
    rec.m = count("u");
    rec.L = count("Wc");
    if (header != csv_header(rec.n, rec.m, rec.L)) throw std::runtime_error("unexpected CSV header in '" + path + "'");

    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        const std::size_t expect = 1 + rec.n + rec.m + 4 + 2 * rec.L + 3 + 1;
        if (cols.size() != expect) throw std::runtime_error("bad column count in '" + path + "'");
        std::size_t i = 0;
        auto num = [&] { return std::strtod(cols[i++].c_str(), nullptr); };
        auto vec = [&](int k) {
            Vector v(k);
            for (int j = 0; j < k; ++j) v(j) = num();
            return v;
        };
        RecordRow r;
        r.t = num();
        r.x = vec(rec.n);
        r.u = vec(rec.m);
        r.h = num();
        r.B = num();
        r.Vhat = num();
        r.delta = num();
        r.Wc = vec(rec.L);
        r.Wa = vec(rec.L);
        r.min_eig_gamma = num();
        r.c1 = num();
        r.J = num();
        r.status = parse_run_status(cols[i]);
        rec.rows.push_back(std::move(r));
    }
    if (!rec.rows.empty()) rec.status = rec.rows.back().status;
    return rec;
}

/// Scalar digest of one episode; everything except the run-level metadata
/// fields is recomputable from the rows.
struct SummaryReport {
    std::string controller;
    RunStatus status = RunStatus::Ok;
    double min_h = std::numeric_limits<double>::quiet_NaN();
    double terminal_norm = std::numeric_limits<double>::quiet_NaN();
    double initial_norm = std::numeric_limits<double>::quiet_NaN();
    double max_u_inf = std::numeric_limits<double>::quiet_NaN();
    double J_total = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_delta_first = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_delta_last = std::numeric_limits<double>::quiet_NaN();
    double min_eig_gamma = std::numeric_limits<double>::quiet_NaN();
    int infeasible_events = 0;
    // run-level metadata
    double J_native = std::numeric_limits<double>::quiet_NaN();
    bool weak_excitation = false;
    double wall_seconds = 0.0;
};

inline SummaryReport summarize(const TrajectoryRecord& rec, double window = 5.0) {
    SummaryReport s;
    s.controller = rec.controller;
    s.status = rec.status;
    s.J_native = rec.J_native;
    s.weak_excitation = rec.weak_excitation;
    s.wall_seconds = rec.wall_seconds;
    if (rec.rows.empty()) return s;

    const double t_first = rec.rows.front().t;
    const double t_last = rec.rows.back().t;
    double min_h = std::numeric_limits<double>::infinity();
    double max_u = 0.0;
    double min_eig = std::numeric_limits<double>::infinity();
    double sum_first = 0.0, sum_last = 0.0;
    int n_first = 0, n_last = 0;
    for (const auto& r : rec.rows) {
        min_h = std::min(min_h, r.h);
        max_u = std::max(max_u, r.u.cwiseAbs().maxCoeff());
        if (!std::isnan(r.min_eig_gamma)) min_eig = std::min(min_eig, r.min_eig_gamma);
        if (std::isfinite(r.delta) && r.t <= t_first + window) {
            sum_first += std::abs(r.delta);
            ++n_first;
        }
        if (std::isfinite(r.delta) && r.t >= t_last - window) {
            sum_last += std::abs(r.delta);
            ++n_last;
        }
        if (r.status == RunStatus::QpInfeasible) ++s.infeasible_events;
    }
    s.min_h = min_h;
    s.max_u_inf = max_u;
    s.terminal_norm = rec.rows.back().x.norm();
    s.initial_norm = rec.rows.front().x.norm();
    s.J_total = rec.rows.back().J;
    s.mean_abs_delta_first = n_first ? sum_first / n_first : std::numeric_limits<double>::quiet_NaN();
    s.mean_abs_delta_last = n_last ? sum_last / n_last : std::numeric_limits<double>::quiet_NaN();
    s.min_eig_gamma = std::isfinite(min_eig) ? min_eig : std::numeric_limits<double>::quiet_NaN();
    return s;
}

/// Two-column (t, value) text for plotting one series.
inline std::string format_series(const TrajectoryRecord& rec, const std::string& column) {
    std::string out = "# t " + column + "\n";
    char buf[80];
    for (const auto& r : rec.rows) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (column == "h") {
            v = r.h;
        } else if (column.size() > 1 && (column[0] == 'x' || column[0] == 'u')) {
            const int idx = std::atoi(column.c_str() + 1) - 1;
            const Vector& src = column[0] == 'x' ? r.x : r.u;
            if (idx >= 0 && idx < src.size()) v = src(idx);
        } else if (column == "B") {
            v = r.B;
        } else if (column == "J") {
            v = r.J;
        } else {
            throw std::runtime_error("unknown plot column '" + column + "'");
        }
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r.t, v);
        out += buf;
    }
    return out;
}

}  // namespace safeadp
