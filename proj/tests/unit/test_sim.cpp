#include <gtest/gtest.h>

#include "safeadp/safeadp.hpp"

using namespace safeadp;

namespace {

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Scenario short_run(ControllerKind k, double t_final = 2.0) {
    Scenario sc = Scenario::defaults();
    sc.sim.controller = k;
    sc.sim.t_final = t_final;
    return sc;
}

}  // namespace

TEST(AdpEpisode, OriginIsAnEquilibrium) {
    Scenario sc = short_run(ControllerKind::Adp, 1.0);
    sc.sim.x0 = v2(0, 0);
    const auto rec = run_adp_episode(sc);
    EXPECT_EQ(rec.status, RunStatus::Ok);
    for (const auto& r : rec.rows) {
        EXPECT_TRUE(r.x.isZero());
        EXPECT_TRUE(r.u.isZero());
    }
}

TEST(AdpEpisode, NoLearningKeepsWeightsFixed) {
    Scenario sc = short_run(ControllerKind::Adp, 1.0);
    sc.gains.kc1 = sc.gains.kc2 = sc.gains.ka1 = sc.gains.beta = 0.0;
    const auto rec = run_adp_episode(sc);
    ASSERT_EQ(rec.status, RunStatus::Ok);
    ASSERT_GT(rec.rows.size(), 10u);
    for (const auto& r : rec.rows) {
        EXPECT_EQ(r.Wc, rec.rows.front().Wc);
        EXPECT_EQ(r.Wa, rec.rows.front().Wa);
    }
    EXPECT_NE(rec.rows.back().x, rec.rows.front().x);
}

TEST(AdpEpisode, RowsAreSampledOnTheOutputGrid) {
    const auto rec = run_adp_episode(short_run(ControllerKind::Adp, 0.5));
    ASSERT_EQ(rec.rows.size(), 51u);
    for (std::size_t i = 1; i < rec.rows.size(); ++i) EXPECT_GT(rec.rows[i].t, rec.rows[i - 1].t);
    EXPECT_DOUBLE_EQ(rec.rows.back().t, 0.5);
}

TEST(AdpEpisode, SeedChangesInitialWeights) {
    Scenario a = short_run(ControllerKind::Adp, 0.1), b = a;
    b.gains.seed = a.gains.seed + 1;
    EXPECT_NE(run_adp_episode(a).rows.front().Wc, run_adp_episode(b).rows.front().Wc);
    const auto w = run_adp_episode(a).rows.front().Wc;
    EXPECT_GE(w.minCoeff(), 0.0);
    EXPECT_LE(w.maxCoeff(), a.sim.w_init_max);
}

TEST(AdpEpisode, DefaultRunIsSafeAndSettles) {
    Scenario sc = Scenario::defaults();
    const auto rec = run_adp_episode(sc);
    const auto s = summarize(rec);
    EXPECT_EQ(s.status, RunStatus::Ok);
    EXPECT_GT(s.min_h, 0.0);
    EXPECT_LT(s.terminal_norm, 0.1 * s.initial_norm);
    EXPECT_LT(s.max_u_inf, sc.cost.u_max());
    const auto d = safety_diagnostics(rec, sc);
    EXPECT_GT(d.min_h, 0.0);
    EXPECT_EQ(d.h.size(), rec.rows.size());
}

TEST(AdpEpisode, ForcedBreachIsReported) {
    // barrier off (tiny gain, thin scheduling band) and a start aimed at the disk
    Scenario sc = short_run(ControllerKind::Adp, 10.0);
    sc.barrier = BarrierSpec(sc.safeset, 1e-9, 0.5, 0.01, 0.02);
    sc.gains.kc1 = sc.gains.kc2 = sc.gains.ka1 = sc.gains.beta = 0.0;
    sc.sim.x0 = v2(3.2, 3.2);
    const auto rec = run_adp_episode(sc);
    EXPECT_EQ(rec.status, RunStatus::SafetyBreach);
    EXPECT_LE(summarize(rec).min_h, 1e-6);
    EXPECT_EQ(exit_code(rec.status), 2);
}

TEST(QpEpisode, OriginStaysPut) {
    Scenario sc = short_run(ControllerKind::Qp, 1.0);
    sc.sim.x0 = v2(0, 0);
    const auto rec = run_qp_episode(sc);
    EXPECT_EQ(rec.status, RunStatus::Ok);
    EXPECT_TRUE(rec.rows.back().x.isZero());
}

TEST(QpEpisode, FirstHoldIntervalMatchesClosedForm) {
    // far from the disk the box binds: u = -0.5 on both axes for the first hold
    Scenario sc = short_run(ControllerKind::Qp, 0.01);
    sc.sim.x0 = v2(-3.0, -4.0);
    const auto rec = run_qp_episode(sc);
    ASSERT_EQ(rec.status, RunStatus::Ok);
    const Vector u0 = rec.rows.front().u;
    const auto c = qp_controller(sc.sys, *sc.safeset, sc.cost, sc.qp, sc.sim.x0);
    EXPECT_TRUE(u0.isApprox(c.u));
    EXPECT_NEAR((rec.rows.back().x - (sc.sim.x0 + 0.01 * c.u)).norm(), 0.0, 1e-9);
}

TEST(QpEpisode, InputsStayInTheBox) {
    const auto rec = run_qp_episode(short_run(ControllerKind::Qp, 5.0));
    for (const auto& r : rec.rows) EXPECT_LE(r.u.cwiseAbs().maxCoeff(), 0.5 + 1e-9);
}

TEST(QpEpisode, AxisAlignedObstacleStallsTheQp) {
    Scenario sc = Scenario::defaults();
    auto set = std::make_shared<const CircularSafeSet>(Vector2(0.0, 2.0), 1.0);
    sc.safeset = set;
    sc.barrier = BarrierSpec(set, 12.0, 0.5, 0.2, 1.0);
    sc.sim.x0 = v2(0.0, 4.0);
    sc.sim.controller = ControllerKind::Qp;
    const auto s = summarize(run_qp_episode(sc));
    EXPECT_EQ(s.status, RunStatus::Ok);
    EXPECT_GT(s.min_h, 0.0);
    EXPECT_GT(s.terminal_norm, 0.5);
}

TEST(QpEpisode, UnrelaxedQpReportsInfeasible) {
    Scenario sc = short_run(ControllerKind::Qp, 1.0);
    sc.qp.relaxed = false;
    const auto rec = run_qp_episode(sc);
    EXPECT_EQ(rec.status, RunStatus::QpInfeasible);
    EXPECT_EQ(exit_code(rec.status), 3);
    EXPECT_FALSE(rec.rows.empty());
}

TEST(Scenario, ValidationCatchesMismatches) {
    Scenario sc = Scenario::defaults();
    sc.sim.x0 = v2(2.0, 2.5);  // inside the disk
    EXPECT_THROW(sc.validate(), InvalidArgument);
    sc = Scenario::defaults();
    sc.sim.t_final = 0.0;
    EXPECT_THROW(sc.validate(), InvalidArgument);
}
