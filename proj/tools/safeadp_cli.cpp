// safeadp: run, compare and sweep episodes; selftest runs the oracle checks.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "safeadp/safeadp.hpp"
#include "support/checks.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace safeadp;

namespace {

constexpr int kExitConfig = 4;

struct Options {
    std::string config;
    std::string controller;
    std::optional<std::uint64_t> seed;
    std::optional<double> t_final;
    std::string out;
    std::string summary;
    std::string plot_dir;
    std::string sweep_key;
    std::string sweep_values;
};

Config load_config(const Options& o) {
    Config cfg = o.config.empty() ? Config{} : Config::load(o.config);
    if (!o.controller.empty()) cfg.set("sim.controller", o.controller);
    if (o.seed) cfg.set("gains.seed", std::to_string(*o.seed));
    if (o.t_final) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *o.t_final);
        cfg.set("sim.t_final", buf);
    }
    return cfg;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_json(const SummaryReport& s) {
    return json{{"controller", s.controller},
                {"status", to_string(s.status)},
                {"min_h", num(s.min_h)},
                {"terminal_norm", num(s.terminal_norm)},
                {"initial_norm", num(s.initial_norm)},
                {"max_u_inf", num(s.max_u_inf)},
                {"J_quadratic", num(s.J_total)},
                {"J_native", num(s.J_native)},
                {"mean_abs_delta_first_5s", num(s.mean_abs_delta_first)},
                {"mean_abs_delta_last_5s", num(s.mean_abs_delta_last)},
                {"min_eig_gamma", num(s.min_eig_gamma)},
                {"infeasible_events", s.infeasible_events},
                {"weak_excitation", s.weak_excitation},
                {"wall_seconds", s.wall_seconds}};
}

json scenario_json(const Scenario& sc) {
    json repo = json::object();
    repo["safeset.center"] = {sc.safeset->center()(0), sc.safeset->center()(1)};
    repo["safeset.radius"] = sc.safeset->radius();
    repo["sim.x0"] = std::vector<double>(sc.sim.x0.data(), sc.sim.x0.data() + sc.sim.x0.size());
    repo["qp.dt"] = sc.qp.dt;
    repo["barrier.k_p"] = sc.barrier.k_p();
    repo["barrier.a"] = sc.barrier.a();
    repo["barrier.d_on"] = sc.barrier.d_on();
    repo["barrier.d_off"] = sc.barrier.d_off();
    return json{{"seed", sc.gains.seed}, {"t_final", sc.sim.t_final}, {"repo_choices", repo}};
}

void write_text(const std::string& path, const std::string& text) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
}

void emit_summary(const Options& o, const json& j) {
    const std::string text = j.dump(2) + "\n";
    if (o.summary.empty() || o.summary == "-") {
        std::cout << text;
    } else {
        write_text(o.summary, text);
    }
}

void write_outputs(const TrajectoryRecord& rec, const std::string& csv, const std::string& plot_dir,
                   const std::string& tag) {
    if (!csv.empty()) {
        if (const auto parent = fs::path(csv).parent_path(); !parent.empty()) fs::create_directories(parent);
        write_csv(rec, csv);
    }
    if (plot_dir.empty()) return;
    fs::create_directories(plot_dir);
    std::vector<std::string> cols = {"h", "B", "J"};
    for (int i = 1; i <= rec.n; ++i) cols.push_back("x" + std::to_string(i));
    for (int i = 1; i <= rec.m; ++i) cols.push_back("u" + std::to_string(i));
    for (const auto& c : cols) write_text((fs::path(plot_dir) / (tag + "_" + c + ".dat")).string(), format_series(rec, c));
}

std::string with_suffix(const std::string& base, const std::string& suffix) {
    fs::path p(base);
    const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
    p.replace_extension();
    return p.string() + "_" + suffix + ext;
}

int worst_exit(const std::vector<RunStatus>& st) {
    int code = 0;
    for (auto s : st) {
        const int c = exit_code(s);
        // breach outranks infeasibility outranks underflow
        auto rank = [](int x) { return x == 2 ? 3 : x == 3 ? 2 : x == 5 ? 1 : 0; };
        if (rank(c) > rank(code)) code = c;
    }
    return code;
}

int cmd_run(const Options& o) {
    const Scenario sc = build_scenario(load_config(o));
    const TrajectoryRecord rec = run_episode(sc);
    write_outputs(rec, o.out, o.plot_dir, rec.controller);
    json j = summary_json(summarize(rec));
    j["scenario"] = scenario_json(sc);
    if (!rec.message.empty()) j["message"] = rec.message;
    emit_summary(o, j);
    return exit_code(rec.status);
}

int cmd_compare(const Options& o) {
    Config cfg = load_config(o);
    cfg.set("sim.controller", "adp");
    const Scenario adp = build_scenario(cfg);
    cfg.set("sim.controller", "qp");
    const Scenario qp = build_scenario(cfg);
    const TrajectoryRecord ra = run_adp_episode(adp);
    const TrajectoryRecord rq = run_qp_episode(qp);
    const std::string base = o.out.empty() ? "compare.csv" : o.out;
    write_outputs(ra, with_suffix(base, "adp"), o.plot_dir, "adp");
    write_outputs(rq, with_suffix(base, "qp"), o.plot_dir, "qp");
    const SummaryReport sa = summarize(ra), sq = summarize(rq);
    json j{{"scenario", scenario_json(adp)},
           {"adp", summary_json(sa)},
           {"qp", summary_json(sq)},
           {"terminal_norm_ratio_qp_over_adp", num(sq.terminal_norm / sa.terminal_norm)},
           {"qp_worse_terminal", sq.terminal_norm > sa.terminal_norm}};
    emit_summary(o, j);
    return worst_exit({ra.status, rq.status});
}

std::size_t sweep_threads(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SAFEADP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw ConfigError("SAFEADP_THREADS", 0, "expected a positive integer");
        n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

int cmd_sweep(const Options& o) {
    if (o.sweep_key.empty() || o.sweep_values.empty())
        throw ConfigError("", 0, "sweep needs --sweep-key and --sweep-values");
    const Config base = load_config(o);
    const auto values = Config::split_top_level(o.sweep_values);
    std::vector<Scenario> jobs;
    for (const auto& v : values) {
        Config c = base;
        c.set(o.sweep_key, v);
        jobs.push_back(build_scenario(c));  // all config errors surface before any run
    }

    std::vector<TrajectoryRecord> recs(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            try {
                recs[i] = run_episode(jobs[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t nt = sweep_threads(jobs.size());
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    const std::string dir = o.out.empty() ? "sweep" : o.out;
    json runs = json::array();
    std::vector<RunStatus> st;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i].empty()) throw std::runtime_error("episode " + std::to_string(i) + ": " + errors[i]);
        const std::string tag = "run" + std::to_string(i);
        const std::string csv = (fs::path(dir) / (tag + ".csv")).string();
        write_outputs(recs[i], csv, o.plot_dir.empty() ? "" : (fs::path(o.plot_dir) / tag).string(), recs[i].controller);
        json j = summary_json(summarize(recs[i]));
        j["value"] = values[i];
        j["csv"] = csv;
        runs.push_back(j);
        st.push_back(recs[i].status);
    }
    emit_summary(o, json{{"sweep_key", o.sweep_key}, {"threads", nt}, {"scenario", scenario_json(jobs.front())},
                         {"runs", runs}});
    return worst_exit(st);
}

int cmd_selftest() {
    int failed = 0;
    for (const auto& v : checks::run_all()) {
        std::printf("%s\n", checks::format_verdict(v).c_str());
        if (!v.passed) ++failed;
    }
    std::printf("selftest: %s\n", failed ? "FAIL" : "PASS");
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safe approximate-optimal control: ADP with embedded barrier vs CLF-CBF QP"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "config file (key = value)")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "override gains.seed");
        sub->add_option("--t-final", o.t_final, "override sim.t_final");
        sub->add_option("--out", o.out, "CSV path (run), CSV prefix (compare) or directory (sweep)");
        sub->add_option("--summary", o.summary, "summary JSON path (default stdout)");
        sub->add_option("--plot-dir", o.plot_dir, "write two-column plot series here");
    };

    auto* run = app.add_subcommand("run", "run one episode");
    common(run);
    run->add_option("--controller", o.controller, "adp or qp")->check(CLI::IsMember({"adp", "qp"}));

    auto* compare = app.add_subcommand("compare", "run ADP and QP on the same scenario");
    common(compare);

    auto* sweep = app.add_subcommand("sweep", "vary one config key over a list");
    common(sweep);
    sweep->add_option("--controller", o.controller, "adp or qp")->check(CLI::IsMember({"adp", "qp"}));
    sweep->add_option("--sweep-key", o.sweep_key, "config key to vary")->required();
    sweep->add_option("--sweep-values", o.sweep_values, "comma-separated values, e.g. \"[0,4],[4,0]\"")->required();

    auto* selftest = app.add_subcommand("selftest", "run the oracle and acceptance checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(o);
        if (compare->parsed()) return cmd_compare(o);
        if (sweep->parsed()) return cmd_sweep(o);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
