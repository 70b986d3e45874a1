#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridsyn/errors.hpp"
#include "gridsyn/mses.hpp"
#include "gridsyn/netmodel.hpp"
#include "gridsyn/stochastic.hpp"
#include "gridsyn/synth.hpp"
#include "testutil.hpp"

#include <cmath>

using namespace gridsyn;
using namespace gridsyn::synth;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

net::LinearModel scalar_plant(double a0, double b0, double c0) {
    net::LinearModel m;
    m.A0 = MatrixXd::Constant(1, 1, a0);
    m.B0 = MatrixXd::Constant(1, 1, b0);
    m.C0 = MatrixXd::Constant(1, 1, c0);
    m.injection_buses = {1};
    return m;
}

net::LinearModel load_model(const char* name,
                            net::MeasurementSelection meas = net::MeasurementSelection::full()) {
    const net::NetworkCase c = net::load_case(testutil::data_path(name));
    const net::EquilibriumPoint eq = net::solve_equilibrium(c, net::nominal_injection(c));
    return net::linearize(c, eq, meas);
}

SynthesisWeights weights(double w1, double w2, double w3, double w4,
                         RowNorm p = RowNorm::L1) {
    SynthesisWeights w;
    w.w1 = w1;
    w.w2 = w2;
    w.w3 = w3;
    w.w4 = w4;
    w.p = p;
    return w;
}

// independent eigenvalue re-check of the Theorem-1 constraints
void check_theorem1(const net::LinearModel& model, const SynthesisResult& r, double viol) {
    const int n = model.n();
    Eigen::SelfAdjointEigenSolver<MatrixXd> upper(
        MatrixXd(MatrixXd::Identity(n, n) - r.Q_star), Eigen::EigenvaluesOnly);
    CHECK(upper.eigenvalues().minCoeff() > -viol);
    Eigen::SelfAdjointEigenSolver<MatrixXd> lower(
        MatrixXd(r.Q_star - r.gamma1_star * MatrixXd::Identity(n, n)),
        Eigen::EigenvaluesOnly);
    CHECK(lower.eigenvalues().minCoeff() > -viol);
    for (int i = 0; i < model.m(); ++i) {
        MatrixXd blk(n + 1, n + 1);
        blk(0, 0) = r.beta_star(i);
        blk.block(0, 1, 1, n) = r.M_star.row(i);
        blk.block(1, 0, n, 1) = r.M_star.row(i).transpose();
        blk.block(1, 1, n, n) = r.Q_star;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(blk, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -viol);
    }
    const MatrixXd perf = model.A0 * r.Q_star + r.Q_star * model.A0.transpose() -
                          model.B0 * r.M_star - r.M_star.transpose() * model.B0.transpose() +
                          model.B0 * model.B0.transpose() +
                          r.gamma2_star * MatrixXd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(perf, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() < viol);
}

}  // namespace

TEST_CASE("scalar synthesis closed form: q->1, m->w2/w3, sigma*->w3/w2") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    for (double w3 : {1.0, 2.0, 4.0}) {
        CAPTURE(w3);
        const SynthesisResult r = synthesize_full_state(plant, weights(1, 1, w3, 0));
        CHECK(std::abs(r.Q_star(0, 0) - 1.0) < 1e-2);
        CHECK(std::abs(r.M_star(0, 0) - 1.0 / w3) < 1e-2);
        CHECK(std::abs(r.K0(0, 0) - 1.0 / w3) < 1e-2);
        CHECK(std::abs(r.sigma_star(0) - w3) < 1e-2 * w3);
        if (w3 == 1.0) {
            CHECK(std::abs(r.gamma2_star - 3.0) < 1e-2);
            CHECK(std::abs(r.beta_star(0) - 1.0) < 1e-2);
        }
    }
}

TEST_CASE("dominating sparsity penalty zeroes the gain") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    const SynthesisResult r = synthesize_full_state(plant, weights(1, 1, 1, 1e6));
    CHECK(r.K0.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::isinf(r.sigma_star(0)));
    CHECK(row_support(r.K0).empty());
}

TEST_CASE("gain recovery: identity measurement") {
    MatrixXd M(1, 2), Q(2, 2);
    M << 1.0, 0.5;
    Q << 2.0, 0.3, 0.3, 1.0;
    const MatrixXd K = recover_gain_full_rank(M, Q, MatrixXd::Identity(2, 2));
    CHECK((K - M * Q.inverse()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gain recovery: tall full-rank measurement") {
    // M (Q*)^{-1} = [1, 0], C0 = [[1,0],[0,1],[1,1]] -> K0 = (1/3)[2, -1, 1]
    MatrixXd MQ(1, 2);
    MQ << 1.0, 0.0;
    const MatrixXd Q = MatrixXd::Identity(2, 2);
    MatrixXd C0(3, 2);
    C0 << 1, 0, 0, 1, 1, 1;
    const MatrixXd K = recover_gain_full_rank(MQ, Q, C0);
    CHECK(K(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-10));
    CHECK(K(0, 1) == doctest::Approx(-1.0 / 3).epsilon(1e-10));
    CHECK(K(0, 2) == doctest::Approx(1.0 / 3).epsilon(1e-10));
    CHECK(((K * C0) - MQ).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gain recovery: zero M gives zero K") {
    const MatrixXd K = recover_gain_full_rank(MatrixXd::Zero(1, 2),
                                              MatrixXd::Identity(2, 2),
                                              MatrixXd::Identity(2, 2));
    CHECK(K.norm() == 0.0);
}

TEST_CASE("gain recovery rejects rank-deficient measurements") {
    CHECK_THROWS_AS(recover_gain_full_rank(MatrixXd::Zero(1, 2), MatrixXd::Identity(2, 2),
                                           MatrixXd::Zero(1, 2)),
                    ValidationError);
}

TEST_CASE("theorem-1 certificate validity on case9 full state") {
    const net::LinearModel model = load_model("case9.json");
    const SynthesisResult r = synthesize_full_state(model, weights(1, 1, 1, 1));
    check_theorem1(model, r, 1e-6);
    // in-proof Pareto bound on active channels
    for (int i = 0; i < model.m(); ++i) {
        if (std::isinf(r.sigma_star(i))) continue;
        CHECK(r.sigma_star(i) > std::sqrt(r.gamma1_star) / r.M_star.row(i).norm());
    }
    // cross-module MSES at 0.99 sigma*
    const auto cl = stoch::assemble_closed_loop(
        model, r.K0, stoch::UncertaintySpec::uniform(model.m(), 0.0),
        VectorXd::Zero(model.m()));
    VectorXd sig(model.m());
    for (int i = 0; i < model.m(); ++i)
        sig(i) = std::isinf(r.sigma_star(i)) ? 0.0 : 0.99 * r.sigma_star(i);
    const auto cert = mses::verify_mses(cl.A, stoch::multiplicative_channels(cl), sig);
    CHECK(cert.feasible);
}

TEST_CASE("closed-loop performance certificate") {
    const net::LinearModel model = load_model("case9.json");
    const SynthesisResult r = synthesize_full_state(model, weights(1, 1, 1, 0));
    const MatrixXd A = model.A0 - model.B0 * r.K0 * model.C0;
    const MatrixXd lyap = A * r.Q_star + r.Q_star * A.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (lyap + lyap.transpose()),
                                               Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() <= -r.gamma2_star + 1e-6);
}

TEST_CASE("sparsity support shrinks with the penalty weight") {
    const net::LinearModel model = load_model("case9.json");
    size_t prev = SIZE_MAX;
    std::vector<size_t> sizes;
    for (double w4 : {0.0, 1.0, 10.0}) {
        const SynthesisResult r = synthesize_full_state(model, weights(1, 1, 1, w4));
        const size_t sz = row_support(r.K0).size();
        sizes.push_back(sz);
        CHECK(sz <= prev);
        prev = sz;
    }
    CHECK(sizes.back() < sizes.front());
}

TEST_CASE("row support thresholding") {
    CHECK(row_support(MatrixXd::Zero(3, 2)).empty());
    MatrixXd K(3, 1);
    K << 1.0, 1e-9, 0.5;
    const auto sup = row_support(K, 1e-6);
    REQUIRE(sup.size() == 2);
    CHECK(sup[0] == 0);
    CHECK(sup[1] == 2);
    CHECK_THROWS_AS(row_support(K, 1.5), ValidationError);
}

TEST_CASE("stage 1 on the scalar plant reproduces the direct optimum") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    const MatrixXd Q = stage1_precompute(plant, weights(1, 1, 1, 0));
    CHECK(std::abs(Q(0, 0) - 1.0) < 1e-2);
}

TEST_CASE("stage 1 rejects unstable plants") {
    CHECK_THROWS_AS(stage1_precompute(scalar_plant(0.5, 1.0, 1.0), weights(1, 1, 1, 0)),
                    ValidationError);
}

TEST_CASE("stage 2 on the scalar plant has a finite optimum") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    const MatrixXd Q = stage1_precompute(plant, weights(1, 1, 1, 0));
    const SynthesisResult r = stage2_gain(plant, Q, weights(1, 1, 1, 0));
    CHECK(r.two_stage);
    CHECK(std::isfinite(r.K0(0, 0)));
    CHECK(std::isfinite(r.gamma2_star));
    // constraint holds at the solution
    const double lhs = 2.0 * (-1.0 - r.K0(0, 0)) * Q(0, 0) + 1.0 + r.gamma2_star;
    CHECK(lhs <= 1e-6);
}

TEST_CASE("two-stage pipeline on case9 partial measurements") {
    const net::LinearModel model =
        load_model("case9.json", net::MeasurementSelection::generators());
    REQUIRE(model.s() < model.n());
    const SynthesisWeights w = weights(1, 1, 1, 1);
    const MatrixXd Q = stage1_precompute(model, w);
    const SynthesisResult r = stage2_gain(model, Q, w);
    // Eq.(22) constraint margin under independent re-check
    const MatrixXd A = model.A0 - model.B0 * r.K0 * model.C0;
    const MatrixXd lhs = A * Q + Q * A.transpose() + model.B0 * model.B0.transpose() +
                         r.gamma2_star * MatrixXd::Identity(model.n(), model.n());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (lhs + lhs.transpose()),
                                               Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-6);
    // Eq.(23) bounds pass the MSES cross-check at 0.99 scale
    const auto cl = stoch::assemble_closed_loop(
        model, r.K0, stoch::UncertaintySpec::uniform(model.m(), 0.0),
        VectorXd::Zero(model.m()));
    VectorXd sig(model.m());
    for (int i = 0; i < model.m(); ++i)
        sig(i) = std::isinf(r.sigma_star(i)) ? 0.0 : 0.99 * r.sigma_star(i);
    const auto cert = mses::verify_mses(cl.A, stoch::multiplicative_channels(cl), sig);
    CHECK(cert.feasible);
}

TEST_CASE("stage 2 never reports infeasibility over random weights") {
    const net::LinearModel model =
        load_model("case9.json", net::MeasurementSelection::generators());
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int trial = 0; trial < 5; ++trial) {
        SynthesisWeights w = weights(u(testutil::rng()), u(testutil::rng()),
                                     u(testutil::rng()), u(testutil::rng()));
        const MatrixXd Q = stage1_precompute(model, w);
        const SynthesisResult r = stage2_gain(model, Q, w);
        CHECK(r.solver_status == conic::SolveStatus::Optimal);
    }
}

TEST_CASE("pareto sweep over the scalar plant") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    const auto points = pareto_sweep(plant, weights(1, 1, 1, 0), {1.0, 2.0, 4.0});
    REQUIRE(points.size() == 3);
    double prev_gain = 1e300;
    for (size_t i = 0; i < 3; ++i) {
        REQUIRE(points[i].converged);
        const double w3 = points[i].w3;
        CHECK(std::abs(points[i].sigma_star(0) - w3) < 1e-2 * w3);
        CHECK(std::abs(points[i].gain_norms(0) - 1.0 / w3) < 1e-2);
        CHECK(points[i].gain_norms(0) < prev_gain);
        prev_gain = points[i].gain_norms(0);
    }
    // gamma2 degrades as w3 grows
    CHECK(points[2].gamma2_star <= points[0].gamma2_star + 1e-9);
}

TEST_CASE("pareto sweep: single point equals the direct call") {
    const net::LinearModel plant = scalar_plant(-2.0, 1.0, 1.0);
    const auto points = pareto_sweep(plant, weights(1, 1, 1, 0), {2.0});
    const SynthesisResult direct = synthesize_full_state(plant, weights(1, 1, 2.0, 0));
    REQUIRE(points.size() == 1);
    CHECK(points[0].gain_norms(0) == doctest::Approx(direct.K0.norm()).epsilon(1e-9));
}

TEST_CASE("pareto sweep rejects empty or nonpositive grids") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    CHECK_THROWS_AS(pareto_sweep(plant, weights(1, 1, 1, 0), {}), ValidationError);
    CHECK_THROWS_AS(pareto_sweep(plant, weights(1, 1, 1, 0), {-1.0}), ValidationError);
}

TEST_CASE("lqr: scalar quadratic formula") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    const MatrixXd K = design_lqr(plant, MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1));
    CHECK(K(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("lqr: zero state weight gives zero gain") {
    const net::LinearModel plant = scalar_plant(-1.0, 1.0, 1.0);
    const MatrixXd K = design_lqr(plant, MatrixXd::Zero(1, 1), MatrixXd::Identity(1, 1));
    CHECK(K.norm() < 1e-12);
}

TEST_CASE("lqr: decoupled pair") {
    net::LinearModel plant;
    plant.A0 = -MatrixXd::Identity(2, 2);
    plant.B0 = MatrixXd::Identity(2, 2);
    plant.C0 = MatrixXd::Identity(2, 2);
    plant.injection_buses = {1, 2};
    const MatrixXd K = design_lqr(plant, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
    CHECK((K - (std::sqrt(2.0) - 1.0) * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-9);
}

TEST_CASE("l1p norm variants all converge on case9") {
    const net::LinearModel model = load_model("case9.json");
    for (RowNorm p : {RowNorm::L1, RowNorm::L2, RowNorm::LInf}) {
        const SynthesisResult r = synthesize_full_state(model, weights(1, 1, 1, 1, p));
        CHECK(r.solver_status == conic::SolveStatus::Optimal);
        CHECK(r.gamma2_star > 0.0);
    }
}

TEST_CASE("symmetric square root reproduces the matrix") {
    for (int trial = 0; trial < 5; ++trial) {
        const MatrixXd R = testutil::random_matrix(4, 4);
        const MatrixXd S = R * R.transpose();
        const MatrixXd h = symmetric_sqrt(S);
        CHECK((h * h.transpose() - S).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}
