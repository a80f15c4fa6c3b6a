#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "safeadp/errors.hpp"
#include "safeadp/sim.hpp"

namespace safeadp {

/// Flat dotted-key configuration:
///
///   # comment
///   cost.Q = [[1, 0], [0, 1]]
///   sim.x0 = [3, 3.5]
///   sim.controller = adp
///
/// One `key = value` per line. Later assignments override earlier ones.
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;  // 0 for programmatic overrides
    };

    static const std::vector<std::string>& known_keys() {
        static const std::vector<std::string> keys = {
            "system.kind",      "system.A",         "system.G",          "safeset.center",   "safeset.radius",
            "cost.Q",           "cost.r_diag",      "cost.u_max",        "barrier.k_p",      "barrier.a",
            "barrier.d_on",     "barrier.d_off",    "staf.offsets",      "staf.scale_num",   "staf.scale_den_offset",
            "gains.kc1",        "gains.kc2",        "gains.ka1",         "gains.nu",         "gains.beta",
            "gains.N",          "gains.gamma0",     "gains.wa_bound",    "gains.seed",       "gains.pe_window",
            "qp.alpha_scale",   "qp.gamma_scale",   "qp.p",              "qp.dt",            "qp.relaxed",
            "sim.t_final",      "sim.x0",           "sim.abs_tol",       "sim.rel_tol",      "sim.dt_out",
            "sim.controller",   "sim.w_init_max"};
        return keys;
    }

    static bool is_known(const std::string& key) {
        const auto& k = known_keys();
        return std::find(k.begin(), k.end(), key) != k.end();
    }

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = raw;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("", line_no, "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("", line_no, "missing key");
            if (!is_known(key)) throw ConfigError(key, line_no, "unknown key");
            if (value.empty()) throw ConfigError(key, line_no, "missing value");
            cfg.entries_[key] = Entry{value, line_no};
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw ConfigError("", 0, "cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    /// Programmatic override (CLI flags, sweep values).
    void set(const std::string& key, const std::string& value) {
        if (!is_known(key)) throw ConfigError(key, 0, "unknown key");
        entries_[key] = Entry{trim(value), 0};
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

    // --- typed getters; fallback used when the key is absent ----------------

    double number(const std::string& key, double fallback) const {
        const Entry* e = find(key);
        return e ? parse_number(key, e->line, e->value) : fallback;
    }

    long integer(const std::string& key, long fallback) const {
        const Entry* e = find(key);
        if (!e) return fallback;
        const double v = parse_number(key, e->line, e->value);
        if (v != static_cast<double>(static_cast<long>(v))) throw ConfigError(key, e->line, "expected an integer");
        return static_cast<long>(v);
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        const Entry* e = find(key);
        if (!e) return fallback;
        const std::string& s = e->value;
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
            throw ConfigError(key, e->line, "expected a nonnegative integer");
        errno = 0;
        const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
        if (errno == ERANGE) throw ConfigError(key, e->line, "integer out of range");
        return static_cast<std::uint64_t>(v);
    }

    bool boolean(const std::string& key, bool fallback) const {
        const Entry* e = find(key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "1") return true;
        if (e->value == "false" || e->value == "0") return false;
        throw ConfigError(key, e->line, "expected true or false");
    }

    std::string word(const std::string& key, const std::string& fallback) const {
        const Entry* e = find(key);
        return e ? e->value : fallback;
    }

    Vector vector(const std::string& key, const Vector& fallback) const {
        const Entry* e = find(key);
        if (!e) return fallback;
        const Node n = parse_node(key, e->line, e->value);
        if (n.is_leaf || n.children.empty()) throw ConfigError(key, e->line, "expected a nonempty array of numbers");
        Vector v(static_cast<Eigen::Index>(n.children.size()));
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (!n.children[i].is_leaf) throw ConfigError(key, e->line, "expected a flat array of numbers");
            v(static_cast<Eigen::Index>(i)) = n.children[i].value;
        }
        return v;
    }

    /// Row-major matrix: nested rows [[a, b], [c, d]].
    Matrix matrix(const std::string& key, const Matrix& fallback) const {
        const Entry* e = find(key);
        if (!e) return fallback;
        const Node n = parse_node(key, e->line, e->value);
        if (n.is_leaf || n.children.empty()) throw ConfigError(key, e->line, "expected a nested array of rows");
        const std::size_t rows = n.children.size();
        std::size_t cols = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            const Node& r = n.children[i];
            if (r.is_leaf || r.children.empty()) throw ConfigError(key, e->line, "each matrix row must be an array");
            if (i == 0) cols = r.children.size();
            if (r.children.size() != cols) throw ConfigError(key, e->line, "ragged matrix rows");
        }
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                const Node& c = n.children[i].children[j];
                if (!c.is_leaf) throw ConfigError(key, e->line, "matrix entries must be numbers");
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.value;
            }
        return m;
    }

    int line_of(const std::string& key) const {
        const Entry* e = find(key);
        return e ? e->line : 0;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    /// Splits "a, [1,2], [[3]]" on top-level commas (used for sweep lists).
    static std::vector<std::string> split_top_level(const std::string& s) {
        std::vector<std::string> out;
        int depth = 0;
        std::string cur;
        for (char c : s) {
            if (c == '[') ++depth;
            if (c == ']') --depth;
            if (c == ',' && depth == 0) {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (depth != 0) throw ConfigError("", 0, "unbalanced brackets in list '" + s + "'");
        out.push_back(trim(cur));
        for (const auto& item : out)
            if (item.empty()) throw ConfigError("", 0, "empty item in list '" + s + "'");
        return out;
    }

private:
    struct Node {
        bool is_leaf = true;
        double value = 0.0;
        std::vector<Node> children;
    };

    const Entry* find(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    static double parse_number(const std::string& key, int line, const std::string& s) {
        const std::string t = trim(s);
        if (t.empty()) throw ConfigError(key, line, "expected a number");
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
            throw ConfigError(key, line, "expected a finite number, got '" + t + "'");
        return v;
    }

    static Node parse_node(const std::string& key, int line, const std::string& s) {
        std::size_t pos = 0;
        Node n = parse_node_at(key, line, s, pos);
        skip_ws(s, pos);
        if (pos != s.size()) throw ConfigError(key, line, "trailing characters after array");
        return n;
    }

    static void skip_ws(const std::string& s, std::size_t& pos) {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    static Node parse_node_at(const std::string& key, int line, const std::string& s, std::size_t& pos) {
        skip_ws(s, pos);
        Node n;
        if (pos < s.size() && s[pos] == '[') {
            n.is_leaf = false;
            ++pos;
            skip_ws(s, pos);
            if (pos < s.size() && s[pos] == ']') {
                ++pos;
                return n;
            }
            for (;;) {
                n.children.push_back(parse_node_at(key, line, s, pos));
                skip_ws(s, pos);
                if (pos >= s.size()) throw ConfigError(key, line, "unterminated array");
                if (s[pos] == ',') {
                    ++pos;
                    continue;
                }
                if (s[pos] == ']') {
                    ++pos;
                    return n;
                }
                throw ConfigError(key, line, std::string("unexpected character '") + s[pos] + "' in array");
            }
        }
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] != ',' && s[pos] != ']' && s[pos] != '[') ++pos;
        n.value = parse_number(key, line, s.substr(start, pos - start));
        return n;
    }

    std::map<std::string, Entry> entries_;
};

namespace detail {

// Runs a constructor and re-labels its InvalidArgument as a config error on key.
template <class F>
auto config_guard(const Config& cfg, const std::string& key, F&& make) -> decltype(make()) {
    try {
        return make();
    } catch (const InvalidArgument& e) {
        throw ConfigError(key, cfg.line_of(key), e.what());
    }
}

}  // namespace detail

/// Builds a validated scenario: absent keys fall back to Scenario::defaults().
inline Scenario build_scenario(const Config& cfg) {
    const Scenario def = Scenario::defaults();

    const std::string kind = cfg.word("system.kind", "single_integrator");
    const double u_max = cfg.number("cost.u_max", def.sys.u_max());
    SystemModel sys = detail::config_guard(cfg, "system.kind", [&] {
        if (kind == "single_integrator") {
            if (cfg.has("system.A") || cfg.has("system.G"))
                throw InvalidArgument("system.A / system.G only apply to kind = linear");
            return single_integrator(u_max);
        }
        if (kind == "linear") {
            if (!cfg.has("system.A") || !cfg.has("system.G"))
                throw InvalidArgument("kind = linear needs system.A and system.G");
            return linear_system(cfg.matrix("system.A", Matrix()), cfg.matrix("system.G", Matrix()), u_max);
        }
        throw InvalidArgument("unknown system kind '" + kind + "' (single_integrator or linear)");
    });

    const Vector center = cfg.vector("safeset.center", def.safeset->center());
    if (center.size() != 2) throw ConfigError("safeset.center", cfg.line_of("safeset.center"), "center must have 2 entries");
    const double radius = cfg.number("safeset.radius", def.safeset->radius());
    auto set = detail::config_guard(cfg, "safeset.center", [&] {
        return std::make_shared<const CircularSafeSet>(Vector2(center(0), center(1)), radius);
    });

    const Matrix Q = cfg.matrix("cost.Q", def.cost.Q());
    const Vector r_diag = cfg.vector("cost.r_diag", def.cost.r_diag());
    CostSpec cost = detail::config_guard(cfg, "cost.Q", [&] { return CostSpec(Q, r_diag, u_max); });

    BarrierSpec barrier = detail::config_guard(cfg, "barrier.k_p", [&] {
        return BarrierSpec(set, cfg.number("barrier.k_p", def.barrier.k_p()), cfg.number("barrier.a", def.barrier.a()),
                           cfg.number("barrier.d_on", def.barrier.d_on()),
                           cfg.number("barrier.d_off", def.barrier.d_off()));
    });

    StaFConfig staf = detail::config_guard(cfg, "staf.offsets", [&] {
        return StaFConfig(cfg.matrix("staf.offsets", def.staf.offsets()),
                          cfg.number("staf.scale_num", def.staf.scale_num()),
                          cfg.number("staf.scale_den_offset", def.staf.scale_den_offset()));
    });

    LearnerGains gains = def.gains;
    gains.kc1 = cfg.number("gains.kc1", gains.kc1);
    gains.kc2 = cfg.number("gains.kc2", gains.kc2);
    gains.ka1 = cfg.number("gains.ka1", gains.ka1);
    gains.nu = cfg.number("gains.nu", gains.nu);
    gains.beta = cfg.number("gains.beta", gains.beta);
    gains.N = static_cast<int>(cfg.integer("gains.N", gains.N));
    gains.gamma0 = cfg.number("gains.gamma0", gains.gamma0);
    gains.wa_bound = cfg.number("gains.wa_bound", gains.wa_bound);
    gains.seed = cfg.unsigned_integer("gains.seed", gains.seed);
    gains.pe_window = cfg.number("gains.pe_window", gains.pe_window);
    detail::config_guard(cfg, "gains.kc1", [&] { gains.validate(); return 0; });

    QpParams qp = def.qp;
    qp.alpha_scale = cfg.number("qp.alpha_scale", qp.alpha_scale);
    qp.gamma_scale = cfg.number("qp.gamma_scale", qp.gamma_scale);
    qp.p = cfg.number("qp.p", qp.p);
    qp.dt = cfg.number("qp.dt", qp.dt);
    qp.relaxed = cfg.boolean("qp.relaxed", qp.relaxed);
    detail::config_guard(cfg, "qp.p", [&] { qp.validate(); return 0; });

    SimConfig sim = def.sim;
    sim.t_final = cfg.number("sim.t_final", sim.t_final);
    sim.x0 = cfg.vector("sim.x0", sim.x0);
    sim.abs_tol = cfg.number("sim.abs_tol", sim.abs_tol);
    sim.rel_tol = cfg.number("sim.rel_tol", sim.rel_tol);
    sim.dt_out = cfg.number("sim.dt_out", sim.dt_out);
    sim.w_init_max = cfg.number("sim.w_init_max", sim.w_init_max);
    const std::string ctrl = cfg.word("sim.controller", to_string(sim.controller));
    if (ctrl == "adp") {
        sim.controller = ControllerKind::Adp;
    } else if (ctrl == "qp") {
        sim.controller = ControllerKind::Qp;
    } else {
        throw ConfigError("sim.controller", cfg.line_of("sim.controller"), "expected adp or qp, got '" + ctrl + "'");
    }

    Scenario sc{std::move(sys), set, std::move(cost), std::move(barrier), std::move(staf), gains, qp, sim};
    try {
        sc.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("", 0, e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) { return build_scenario(Config::load(path)); }

}  // namespace safeadp
