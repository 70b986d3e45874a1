#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridsyn/errors.hpp"
#include "gridsyn/netmodel.hpp"
#include "testutil.hpp"

#include <cmath>

using namespace gridsyn;
using namespace gridsyn::net;

namespace {

const double kPi = 3.14159265358979323846;

// random connected ring network with balanced injections
NetworkCase random_case(int ng, int nl) {
    std::uniform_real_distribution<double> uy(1.0, 3.0), ue(0.95, 1.05), um(0.1, 0.5),
        ud(0.2, 0.8), up(0.1, 0.4);
    NetworkCase c;
    const int nb = ng + nl;
    for (int i = 0; i < nb; ++i)
        c.buses.push_back({i + 1, i < ng ? BusKind::GeneratorInternal : BusKind::Load,
                           ue(testutil::rng())});
    auto link = [&](int a, int b) {
        const double y = uy(testutil::rng());
        c.lines.push_back({a, b, y, kPi / 2});
        c.lines.push_back({b, a, y, kPi / 2});
    };
    // ring over load buses, generators hang off them
    for (int i = 0; i < nl; ++i) link(ng + 1 + i, ng + 1 + (i + 1) % nl);
    for (int g = 0; g < ng; ++g) link(g + 1, ng + 1 + (g % nl));
    double gensum = 0.0;
    for (int g = 0; g < ng; ++g) {
        const double p = up(testutil::rng());
        c.generators.push_back({g + 1, um(testutil::rng()), ud(testutil::rng()), p});
        gensum += p;
    }
    double assigned = 0.0;
    for (int l = 0; l < nl; ++l) {
        const double pd = (l == nl - 1) ? gensum - assigned : gensum / (2.0 * nl);
        c.loads.push_back({ng + 1 + l, ud(testutil::rng()), pd, pd / 2, pd / 2});
        assigned += pd;
    }
    c.reference_bus = nb;  // last load bus
    c.validate();
    return c;
}

}  // namespace

TEST_CASE("smib.json round trips through the schema") {
    const NetworkCase c = load_case(testutil::data_path("smib.json"));
    CHECK(c.generators.size() == 1);
    CHECK(c.loads.size() == 1);
    const NetworkCase back = case_from_json(case_to_json(c));
    CHECK(back.buses.size() == c.buses.size());
    CHECK(back.generators[0].inertia == c.generators[0].inertia);
    CHECK(back.reference_bus == c.reference_bus);
}

TEST_CASE("zero inertia is rejected naming the generator") {
    json j = case_to_json(load_case(testutil::data_path("smib.json")));
    j["generators"][0]["inertia"] = 0.0;
    try {
        case_from_json(j);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("inertia") != std::string::npos);
        CHECK(msg.find("bus 1") != std::string::npos);
    }
}

TEST_CASE("case39 has ten generators and nineteen loads") {
    const NetworkCase c = load_case(testutil::data_path("case39.json"));
    CHECK(c.generators.size() == 10);
    CHECK(c.loads.size() == 19);
}

TEST_CASE("line asymmetry is rejected") {
    json j = case_to_json(load_case(testutil::data_path("smib.json")));
    j["lines"][1]["admittance"] = 2.0;
    CHECK_THROWS_AS(case_from_json(j), ValidationError);
}

TEST_CASE("electrical power: single line trigonometric evaluation") {
    NetworkCase c;
    c.buses = {{1, BusKind::GeneratorInternal, 1.0}, {2, BusKind::Load, 1.0}};
    c.lines = {{1, 2, 1.0, -kPi / 2}, {2, 1, 1.0, -kPi / 2}};
    c.generators = {{1, 1.0, 0.1, 0.0}};
    c.loads = {{2, 0.1, 0.0, 0.0, 0.0}};
    c.reference_bus = 2;
    Eigen::Vector2d delta(kPi / 6, 0.0);
    const Eigen::VectorXd pe = electrical_power(c, delta);
    CHECK(pe(0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("electrical power vanishes for aligned angles with quarter-turn lines") {
    const NetworkCase c = load_case(testutil::data_path("case9.json"));
    const Eigen::VectorXd pe =
        electrical_power(c, Eigen::VectorXd::Zero(static_cast<int>(c.buses.size())));
    CHECK(pe.lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("electrical power is translation invariant") {
    const NetworkCase c = load_case(testutil::data_path("case9.json"));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd d(static_cast<int>(c.buses.size()));
        for (int i = 0; i < d.size(); ++i) d(i) = u(testutil::rng());
        const double alpha = u(testutil::rng()) * 7.0;
        const Eigen::VectorXd p1 = electrical_power(c, d);
        const Eigen::VectorXd p2 =
            electrical_power(c, Eigen::VectorXd(d.array() + alpha));
        CHECK((p1 - p2).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("smib equilibrium matches arcsin closed form") {
    const NetworkCase c = load_case(testutil::data_path("smib.json"));
    const EquilibriumPoint eq = solve_equilibrium(c, nominal_injection(c));
    CHECK(eq.residual_norm <= 1e-10);
    // state = (omega, delta_1 - delta_2); equilibrium angle arcsin(0.5)
    CHECK(eq.x(0) == doctest::Approx(0.0));
    CHECK(eq.x(1) == doctest::Approx(kPi / 6).epsilon(1e-10));
}

TEST_CASE("zero injection gives the flat equilibrium") {
    const NetworkCase c = load_case(testutil::data_path("case9.json"));
    const EquilibriumPoint eq = solve_equilibrium(
        c, Eigen::VectorXd::Zero(static_cast<int>(c.buses.size())));
    CHECK(eq.x.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("infeasible mechanical power does not converge") {
    NetworkCase c = load_case(testutil::data_path("smib.json"));
    c.generators[0].mech_power = 1.5;  // sin(delta) = 1.5 has no solution
    c.loads[0].demand = 1.5;
    c.loads[0].controllable = 0.75;
    c.loads[0].noncontrollable = 0.75;
    CHECK_THROWS_AS(solve_equilibrium(c, nominal_injection(c)), NumericalError);
}

TEST_CASE("smib linearization matches the hand Jacobian") {
    const NetworkCase c = load_case(testutil::data_path("smib.json"));
    const EquilibriumPoint eq = solve_equilibrium(c, nominal_injection(c));
    const LinearModel model = linearize(c, eq);
    REQUIRE(model.n() == 2);
    Eigen::MatrixXd expect(2, 2);
    expect << -0.1, -std::cos(kPi / 6), 1.0, 0.0;
    CHECK((model.A0 - expect).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(model.m() == 1);
    CHECK(model.B0(0, 0) == doctest::Approx(1.0));
    CHECK(model.B0(1, 0) == doctest::Approx(0.0));
    // full-state measurement gives the identity
    CHECK((model.C0 - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("generator-only measurement selects omega and generator angles") {
    const NetworkCase c = load_case(testutil::data_path("case9.json"));
    const EquilibriumPoint eq = solve_equilibrium(c, nominal_injection(c));
    const LinearModel model = linearize(c, eq, MeasurementSelection::generators());
    CHECK(model.n() == 11);
    CHECK(model.s() == 6);
    CHECK(model.s() < model.n());
    for (const auto& lbl : model.measurement_labels) {
        const bool omega = lbl.rfind("omega:", 0) == 0;
        const bool gen_angle = lbl == "angle:1" || lbl == "angle:2" || lbl == "angle:3";
        CHECK((omega || gen_angle));
    }
}

TEST_CASE("empty row selection is rejected") {
    const NetworkCase c = load_case(testutil::data_path("smib.json"));
    const EquilibriumPoint eq = solve_equilibrium(c, nominal_injection(c));
    CHECK_THROWS_AS(linearize(c, eq, MeasurementSelection::row_list({})),
                    ValidationError);
}

TEST_CASE("check_assumptions on the smib pair") {
    LinearModel model;
    model.A0.resize(2, 2);
    model.A0 << -0.1, -0.8660, 1.0, 0.0;
    model.B0.resize(2, 1);
    model.B0 << 1.0, 0.0;
    model.C0 = Eigen::MatrixXd::Identity(2, 2);
    const AssumptionReport rep = check_assumptions(model);
    CHECK(rep.hurwitz);
    CHECK(rep.max_real_eig == doctest::Approx(-0.05).epsilon(1e-9));
    CHECK(rep.controllable);
    CHECK(rep.controllability_rank == 2);
    CHECK(rep.observable);
    CHECK(rep.rank_C0 == 2);
}

TEST_CASE("identity dynamics are not Hurwitz") {
    LinearModel model;
    model.A0 = Eigen::MatrixXd::Identity(2, 2);
    model.B0 = Eigen::MatrixXd::Identity(2, 2);
    model.C0 = Eigen::MatrixXd::Identity(2, 2);
    CHECK_FALSE(check_assumptions(model).hurwitz);
}

TEST_CASE("zero output matrix is unobservable") {
    LinearModel model;
    model.A0 = -Eigen::MatrixXd::Identity(2, 2);
    model.B0 = Eigen::MatrixXd::Identity(2, 2);
    model.C0 = Eigen::MatrixXd::Zero(1, 2);
    const AssumptionReport rep = check_assumptions(model);
    CHECK_FALSE(rep.observable);
    CHECK(rep.rank_C0 == 0);
    CHECK(rep.observability_rank == 0);
}

TEST_CASE("Jacobian matches central finite differences on random cases") {
    for (int trial = 0; trial < 6; ++trial) {
        const NetworkCase c = random_case(2 + trial % 2, 3 + trial % 3);
        const Eigen::VectorXd pbus = nominal_injection(c);
        const EquilibriumPoint eq = solve_equilibrium(c, pbus);
        const LinearModel model = linearize(c, eq);
        const int n = model.n();
        const double h = 1e-6;
        const double scale = std::max(1.0, model.A0.cwiseAbs().maxCoeff());
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd xp = eq.x, xm = eq.x;
            xp(j) += h;
            xm(j) -= h;
            const Eigen::VectorXd col =
                (reduced_rhs(c, xp, pbus) - reduced_rhs(c, xm, pbus)) / (2 * h);
            for (int i = 0; i < n; ++i)
                CHECK(std::abs(col(i) - model.A0(i, j)) < 1e-6 * scale);
        }
    }
}

TEST_CASE("nonlinear reduced model holds the equilibrium") {
    for (const char* name : {"smib.json", "case9.json", "case39.json"}) {
        CAPTURE(name);
        const NetworkCase c = load_case(testutil::data_path(name));
        const Eigen::VectorXd pbus = nominal_injection(c);
        const EquilibriumPoint eq = solve_equilibrium(c, pbus);
        // RK4 on the reduced dynamics for one second
        Eigen::VectorXd x = eq.x;
        const double dt = 1e-3;
        for (int k = 0; k < 1000; ++k) {
            const Eigen::VectorXd k1 = reduced_rhs(c, x, pbus);
            const Eigen::VectorXd k2 = reduced_rhs(c, x + 0.5 * dt * k1, pbus);
            const Eigen::VectorXd k3 = reduced_rhs(c, x + 0.5 * dt * k2, pbus);
            const Eigen::VectorXd k4 = reduced_rhs(c, x + dt * k3, pbus);
            x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        CHECK((x - eq.x).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("bundled cases produce Hurwitz plants with the expected channels") {
    struct Expect {
        const char* name;
        int n, m;
    };
    for (const Expect e : {Expect{"smib.json", 2, 1}, Expect{"case9.json", 11, 5},
                           Expect{"case39.json", 38, 18}}) {
        CAPTURE(e.name);
        const NetworkCase c = load_case(testutil::data_path(e.name));
        const EquilibriumPoint eq = solve_equilibrium(c, nominal_injection(c));
        const LinearModel model = linearize(c, eq);
        CHECK(model.n() == e.n);
        CHECK(model.m() == e.m);
        const AssumptionReport rep = check_assumptions(model);
        CHECK(rep.hurwitz);
        CHECK(rep.rank_C0 == model.n());
    }
}
