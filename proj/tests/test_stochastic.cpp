#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridsyn/errors.hpp"
#include "gridsyn/netmodel.hpp"
#include "gridsyn/stochastic.hpp"
#include "testutil.hpp"

using namespace gridsyn;
using namespace gridsyn::stoch;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

net::LinearModel smib_model() {
    const net::NetworkCase c = net::load_case(testutil::data_path("smib.json"));
    const net::EquilibriumPoint eq = net::solve_equilibrium(c, net::nominal_injection(c));
    return net::linearize(c, eq);
}

net::LinearModel toy_model(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C) {
    net::LinearModel m;
    m.A0 = A;
    m.B0 = B;
    m.C0 = C;
    for (int i = 0; i < B.cols(); ++i) m.injection_buses.push_back(i + 1);
    return m;
}

}  // namespace

TEST_CASE("zero gain leaves the plant untouched") {
    const net::LinearModel model = smib_model();
    const auto cl = assemble_closed_loop(model, MatrixXd::Zero(1, 2),
                                         UncertaintySpec::uniform(1, 1.0),
                                         VectorXd::Zero(1));
    CHECK((cl.A - model.A0).norm() == 0.0);
    CHECK(cl.C.norm() == 0.0);
    // every multiplicative channel is inactive: the noise term vanishes
    for (const auto& ch : multiplicative_channels(cl)) CHECK_FALSE(ch.active);
}

TEST_CASE("identity example: A = -2I, C = I") {
    const auto model = toy_model(-MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                 MatrixXd::Identity(2, 2));
    const auto cl = assemble_closed_loop(model, MatrixXd::Identity(2, 2),
                                         UncertaintySpec::uniform(2, 0.5),
                                         VectorXd::Zero(2));
    CHECK((cl.A + 2.0 * MatrixXd::Identity(2, 2)).norm() < 1e-15);
    CHECK((cl.C - MatrixXd::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("smib scalar gain on the omega measurement") {
    const net::LinearModel model = smib_model();
    MatrixXd K0(1, 2);
    K0 << 0.5, 0.0;  // feedback on omega only
    const auto cl = assemble_closed_loop(model, K0, UncertaintySpec::uniform(1, 1.0),
                                         VectorXd::Zero(1));
    const MatrixXd expect = model.A0 - 0.5 * model.B0 * model.C0.row(0);
    CHECK((cl.A - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gain dimension mismatch is rejected") {
    const net::LinearModel model = smib_model();
    CHECK_THROWS_AS(assemble_closed_loop(model, MatrixXd::Zero(2, 2),
                                         UncertaintySpec::uniform(1, 1.0),
                                         VectorXd::Zero(1)),
                    ValidationError);
}

TEST_CASE("negative sigma is rejected") {
    UncertaintySpec spec = UncertaintySpec::uniform(2, 1.0);
    spec.sigma(1) = -0.5;
    CHECK_THROWS_AS(spec.validate(2), ValidationError);
}

TEST_CASE("shift with zero injection is the identity") {
    const auto model = toy_model(-MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                 MatrixXd::Identity(2, 2));
    const auto cl = assemble_closed_loop(model, MatrixXd::Zero(2, 2),
                                         UncertaintySpec::uniform(2, 1.0),
                                         VectorXd::Zero(2));
    const ShiftedModel sm = shift_coordinates(cl);
    CHECK(sm.z_offset.norm() == 0.0);
    CHECK(sm.forcing_coeff.norm() == 0.0);
}

TEST_CASE("shift offset solves A z = B P_in0") {
    const auto model = toy_model(-MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                 MatrixXd::Identity(2, 2));
    VectorXd p(2);
    p << 1.0, 2.0;
    const auto cl = assemble_closed_loop(model, MatrixXd::Zero(2, 2),
                                         UncertaintySpec::uniform(2, 1.0), p);
    const ShiftedModel sm = shift_coordinates(cl);
    CHECK(sm.z_offset(0) == doctest::Approx(-1.0));
    CHECK(sm.z_offset(1) == doctest::Approx(-2.0));
}

TEST_CASE("shift requires a Hurwitz closed loop") {
    const auto model = toy_model(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                 MatrixXd::Identity(2, 2));
    const auto cl = assemble_closed_loop(model, MatrixXd::Zero(2, 2),
                                         UncertaintySpec::uniform(2, 1.0),
                                         VectorXd::Zero(2));
    try {
        shift_coordinates(cl);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("shift undefined") != std::string::npos);
    }
}

TEST_CASE("channel extraction: columns and rows") {
    const auto model = toy_model(-MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                 MatrixXd::Identity(2, 2));
    MatrixXd K0(2, 2);
    K0 << 1, 2, 3, 4;
    const auto cl = assemble_closed_loop(model, K0, UncertaintySpec::uniform(2, 1.0),
                                         VectorXd::Zero(2));
    const auto chans = multiplicative_channels(cl);
    REQUIRE(chans.size() == 2);
    CHECK(chans[0].B_col(0) == 1.0);
    CHECK(chans[0].B_col(1) == 0.0);
    CHECK(chans[0].C_row(0) == 1.0);
    CHECK(chans[0].C_row(1) == 2.0);
    CHECK(chans[1].C_row(0) == 3.0);
    CHECK(chans[1].C_row(1) == 4.0);
}

TEST_CASE("rank-one channels reconstruct B C") {
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3, m = 2;
        const MatrixXd B = testutil::random_matrix(n, m);
        const MatrixXd K0 = testutil::random_matrix(m, n);
        const auto model = toy_model(testutil::random_hurwitz(n), B,
                                     MatrixXd::Identity(n, n));
        const auto cl = assemble_closed_loop(model, K0, UncertaintySpec::uniform(m, 1.0),
                                             VectorXd::Zero(m));
        const auto chans = multiplicative_channels(cl);
        MatrixXd sum = MatrixXd::Zero(n, n);
        for (const auto& ch : chans) sum += ch.B_col * ch.C_row;
        CHECK((sum - cl.B * cl.C).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("shift correctness on random closed loops") {
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4, m = 2;
        const auto model = toy_model(testutil::random_hurwitz(n),
                                     testutil::random_matrix(n, m),
                                     MatrixXd::Identity(n, n));
        const MatrixXd K0 = 0.1 * testutil::random_matrix(m, n);
        const VectorXd p = testutil::random_matrix(m, 1);
        const auto cl = assemble_closed_loop(model, K0, UncertaintySpec::uniform(m, 1.0), p);
        double max_re = 0.0;
        if (!is_hurwitz(cl.A, &max_re)) continue;
        const ShiftedModel sm = shift_coordinates(cl);
        const VectorXd res = cl.A * (-sm.z_offset) + cl.B * cl.P_in0;
        CHECK(res.norm() <= 1e-12 * std::max(1.0, (cl.B * cl.P_in0).norm()));
    }
}
