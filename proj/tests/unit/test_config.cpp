#include <gtest/gtest.h>

#include "safeadp/safeadp.hpp"

using namespace safeadp;

TEST(Config, ParsesScalarsArraysAndComments) {
    const Config c = Config::parse(
        "# header\n"
        "sim.t_final = 12.5   # trailing\n"
        "\n"
        "sim.x0 = [1, -2.5e-1]\n"
        "cost.Q = [[2, 0], [0, 3]]\n"
        "sim.controller = qp\n"
        "qp.relaxed = false\n");
    EXPECT_EQ(c.number("sim.t_final", 0.0), 12.5);
    EXPECT_EQ(c.vector("sim.x0", Vector()), (Vector(2) << 1.0, -0.25).finished());
    EXPECT_EQ(c.matrix("cost.Q", Matrix())(1, 1), 3.0);
    EXPECT_EQ(c.word("sim.controller", ""), "qp");
    EXPECT_FALSE(c.boolean("qp.relaxed", true));
    EXPECT_EQ(c.line_of("sim.x0"), 4);
    EXPECT_EQ(c.number("gains.kc1", 0.05), 0.05);
}

TEST(Config, UnknownKeyReportsKeyAndLine) {
    try {
        Config::parse("sim.t_final = 1\nsim.bogus = 3\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "sim.bogus");
        EXPECT_EQ(e.line(), 2);
    }
}

TEST(Config, MalformedValuesReportLine) {
    const Config c = Config::parse("\n\nsim.t_final = abc\nsim.x0 = [1, [2]]\ncost.Q = [[1, 0], [0]]\n");
    try {
        c.number("sim.t_final", 0.0);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    EXPECT_THROW(c.vector("sim.x0", Vector()), ConfigError);
    EXPECT_THROW(c.matrix("cost.Q", Matrix()), ConfigError);
    EXPECT_THROW(Config::parse("no equals sign\n"), ConfigError);
    EXPECT_THROW(Config::parse("sim.x0 = [1, 2\n").vector("sim.x0", Vector()), ConfigError);
}

TEST(Config, EmptyConfigGivesDefaults) {
    const Scenario sc = build_scenario(Config::parse(""));
    const Scenario def = Scenario::defaults();
    EXPECT_EQ(sc.sim.x0, def.sim.x0);
    EXPECT_EQ(sc.barrier.k_p(), def.barrier.k_p());
    EXPECT_EQ(sc.gains.kc2, def.gains.kc2);
    EXPECT_EQ(format_csv(run_episode(sc)), format_csv(run_episode(def)));
}

TEST(Config, OverridesAndValidation) {
    Config c = Config::parse("gains.seed = 3\n");
    c.set("sim.controller", "qp");
    c.set("safeset.center", "[0, 2]");
    c.set("sim.x0", "[0, 4]");
    const Scenario sc = build_scenario(c);
    EXPECT_EQ(sc.gains.seed, 3u);
    EXPECT_EQ(sc.sim.controller, ControllerKind::Qp);
    EXPECT_EQ(sc.safeset->center(), Vector2(0.0, 2.0));
    EXPECT_THROW(c.set("nope", "1"), ConfigError);

    c.set("sim.controller", "lqr");
    EXPECT_THROW(build_scenario(c), ConfigError);
    Config bad = Config::parse("safeset.center = [0.2, 0]\n");
    try {
        build_scenario(bad);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "safeset.center");
        EXPECT_EQ(e.line(), 1);
    }
    EXPECT_THROW(build_scenario(Config::parse("gains.N = 1.5\n")), ConfigError);
    EXPECT_THROW(build_scenario(Config::parse("gains.seed = -1\n")), ConfigError);
    EXPECT_THROW(build_scenario(Config::parse("sim.x0 = [2, 2.5]\n")), ConfigError);
}

TEST(Config, LinearSystemKind) {
    const Scenario sc = build_scenario(Config::parse(
        "system.kind = linear\nsystem.A = [[-0.1, 0], [0, -0.1]]\nsystem.G = [[1, 0], [0, 1]]\nsim.t_final = 1\n"));
    EXPECT_EQ(sc.sys.kind(), "linear");
    EXPECT_THROW(build_scenario(Config::parse("system.kind = linear\n")), ConfigError);
}

TEST(Config, SplitTopLevel) {
    const auto parts = Config::split_top_level("[0, 2], [2, 0] ,3");
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0], "[0, 2]");
    EXPECT_EQ(parts[1], "[2, 0]");
    EXPECT_EQ(parts[2], "3");
}

TEST(Config, ShippedConfigsLoad) {
    const Scenario sc = load_scenario(SAFEADP_CONFIG_DIR "/default.cfg");
    const Scenario def = Scenario::defaults();
    EXPECT_EQ(sc.sim.x0, def.sim.x0);
    EXPECT_EQ(sc.barrier.k_p(), def.barrier.k_p());
    EXPECT_EQ(sc.gains.kc1, def.gains.kc1);
    EXPECT_LE((sc.staf.offsets() - def.staf.offsets()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NO_THROW(load_scenario(SAFEADP_CONFIG_DIR "/axis_aligned.cfg"));
}
