#include "gridsyn/netmodel.hpp"

#include "gridsyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace gridsyn::net {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int NetworkCase::bus_index(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

const Generator* NetworkCase::generator_at(int bus_id) const {
    for (const auto& g : generators)
        if (g.bus == bus_id) return &g;
    return nullptr;
}

const Load* NetworkCase::load_at(int bus_id) const {
    for (const auto& l : loads)
        if (l.bus == bus_id) return &l;
    return nullptr;
}

std::vector<int> NetworkCase::channel_buses() const {
    std::vector<int> out;
    for (const auto& l : loads)
        if (l.bus != reference_bus) out.push_back(l.bus);
    if (generator_channels)
        for (const auto& g : generators) out.push_back(g.bus);
    return out;
}

void NetworkCase::validate() const {
    if (buses.empty()) throw ValidationError("case: no buses");
    std::set<int> ids;
    for (const auto& b : buses) {
        if (!ids.insert(b.id).second)
            throw ValidationError("buses: duplicate id " + std::to_string(b.id));
        if (!(b.voltage > 0))
            throw ValidationError("buses: nonpositive voltage at bus " +
                                  std::to_string(b.id));
    }
    if (bus_index(reference_bus) < 0)
        throw ValidationError("reference_bus: bus " + std::to_string(reference_bus) +
                              " does not exist");

    std::set<int> gen_buses, load_buses;
    for (size_t i = 0; i < generators.size(); ++i) {
        const auto& g = generators[i];
        const std::string where = "generators[" + std::to_string(i) + "]";
        const int bi = bus_index(g.bus);
        if (bi < 0) throw ValidationError(where + ".bus: unknown bus " + std::to_string(g.bus));
        if (buses[bi].kind != BusKind::GeneratorInternal)
            throw ValidationError(where + ".bus: bus " + std::to_string(g.bus) +
                                  " is not generator-internal");
        if (!(g.inertia > 0))
            throw ValidationError(where + ".inertia: must be > 0 (bus " +
                                  std::to_string(g.bus) + ")");
        if (!(g.damping > 0))
            throw ValidationError(where + ".damping: must be > 0 (bus " +
                                  std::to_string(g.bus) + ")");
        if (!gen_buses.insert(g.bus).second)
            throw ValidationError(where + ".bus: duplicate generator at bus " +
                                  std::to_string(g.bus));
    }
    for (size_t i = 0; i < loads.size(); ++i) {
        const auto& l = loads[i];
        const std::string where = "loads[" + std::to_string(i) + "]";
        const int bi = bus_index(l.bus);
        if (bi < 0) throw ValidationError(where + ".bus: unknown bus " + std::to_string(l.bus));
        if (buses[bi].kind != BusKind::Load)
            throw ValidationError(where + ".bus: bus " + std::to_string(l.bus) +
                                  " is not a load bus");
        if (!(l.freq_coeff > 0))
            throw ValidationError(where + ".freq_coeff: must be > 0 (bus " +
                                  std::to_string(l.bus) + ")");
        const double sum = l.controllable + l.noncontrollable;
        if (std::abs(sum - l.demand) > 1e-9 * std::max(1.0, std::abs(l.demand)))
            throw ValidationError(where + ": demand must equal controllable + "
                                          "noncontrollable (bus " +
                                  std::to_string(l.bus) + ")");
        if (!load_buses.insert(l.bus).second)
            throw ValidationError(where + ".bus: duplicate load at bus " +
                                  std::to_string(l.bus));
    }
    // every generator-internal bus carries a machine, every load bus a load row
    for (const auto& b : buses) {
        if (b.kind == BusKind::GeneratorInternal && !gen_buses.count(b.id))
            throw ValidationError("buses: generator-internal bus " + std::to_string(b.id) +
                                  " has no generator record");
        if (b.kind == BusKind::Load && !load_buses.count(b.id))
            throw ValidationError("buses: load bus " + std::to_string(b.id) +
                                  " has no load record");
    }
    // line endpoints exist, no duplicate directed pairs, symmetric with equal data
    std::map<std::pair<int, int>, const Line*> seen;
    for (size_t i = 0; i < lines.size(); ++i) {
        const auto& ln = lines[i];
        const std::string where = "lines[" + std::to_string(i) + "]";
        if (bus_index(ln.from) < 0)
            throw ValidationError(where + ".from: unknown bus " + std::to_string(ln.from));
        if (bus_index(ln.to) < 0)
            throw ValidationError(where + ".to: unknown bus " + std::to_string(ln.to));
        if (!seen.emplace(std::make_pair(ln.from, ln.to), &ln).second)
            throw ValidationError(where + ": duplicate line (" + std::to_string(ln.from) +
                                  "," + std::to_string(ln.to) + ")");
    }
    for (const auto& [key, ln] : seen) {
        if (key.first == key.second) continue;  // self term
        auto rev = seen.find({key.second, key.first});
        if (rev == seen.end())
            throw ValidationError("lines: missing reverse entry for (" +
                                  std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ")");
        if (rev->second->admittance != ln->admittance || rev->second->angle != ln->angle)
            throw ValidationError("lines: asymmetric data on (" +
                                  std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ")");
    }
}

namespace {

BusKind kind_from_string(const std::string& s, const std::string& where) {
    if (s == "generator_internal") return BusKind::GeneratorInternal;
    if (s == "load") return BusKind::Load;
    throw ParseError(where + ".kind: expected generator_internal or load, got " + s);
}

template <typename T>
T field(const json& j, const std::string& name, const std::string& where) {
    if (!j.contains(name)) throw ParseError(where + ": missing field " + name);
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(where + "." + name + ": wrong type");
    }
}

}  // namespace

NetworkCase case_from_json(const json& j) {
    NetworkCase c;
    c.base_mva = j.value("base_mva", 100.0);
    c.generator_channels = j.value("generator_channels", false);
    if (!j.contains("buses") || !j.at("buses").is_array())
        throw ParseError("case: missing buses array");
    int i = 0;
    for (const auto& bj : j.at("buses")) {
        const std::string where = "buses[" + std::to_string(i++) + "]";
        Bus b;
        b.id = field<int>(bj, "id", where);
        b.kind = kind_from_string(field<std::string>(bj, "kind", where), where);
        b.voltage = field<double>(bj, "voltage", where);
        c.buses.push_back(b);
    }
    i = 0;
    for (const auto& lj : j.value("lines", json::array())) {
        const std::string where = "lines[" + std::to_string(i++) + "]";
        Line ln;
        ln.from = field<int>(lj, "from", where);
        ln.to = field<int>(lj, "to", where);
        ln.admittance = field<double>(lj, "admittance", where);
        ln.angle = field<double>(lj, "angle", where);
        c.lines.push_back(ln);
    }
    i = 0;
    for (const auto& gj : j.value("generators", json::array())) {
        const std::string where = "generators[" + std::to_string(i++) + "]";
        Generator g;
        g.bus = field<int>(gj, "bus", where);
        g.inertia = field<double>(gj, "inertia", where);
        g.damping = field<double>(gj, "damping", where);
        g.mech_power = field<double>(gj, "mech_power", where);
        c.generators.push_back(g);
    }
    i = 0;
    for (const auto& lj : j.value("loads", json::array())) {
        const std::string where = "loads[" + std::to_string(i++) + "]";
        Load l;
        l.bus = field<int>(lj, "bus", where);
        l.freq_coeff = field<double>(lj, "freq_coeff", where);
        l.demand = field<double>(lj, "demand", where);
        l.controllable = field<double>(lj, "controllable", where);
        l.noncontrollable = field<double>(lj, "noncontrollable", where);
        c.loads.push_back(l);
    }
    if (!j.contains("reference_bus")) throw ParseError("case: missing reference_bus");
    c.reference_bus = j.at("reference_bus").get<int>();
    c.validate();
    return c;
}

json case_to_json(const NetworkCase& c) {
    json j;
    j["base_mva"] = c.base_mva;
    j["buses"] = json::array();
    for (const auto& b : c.buses)
        j["buses"].push_back(json{
            {"id", b.id},
            {"kind", b.kind == BusKind::GeneratorInternal ? "generator_internal" : "load"},
            {"voltage", b.voltage}});
    j["lines"] = json::array();
    for (const auto& ln : c.lines)
        j["lines"].push_back(json{{"from", ln.from},
                                  {"to", ln.to},
                                  {"admittance", ln.admittance},
                                  {"angle", ln.angle}});
    j["generators"] = json::array();
    for (const auto& g : c.generators)
        j["generators"].push_back(json{{"bus", g.bus},
                                       {"inertia", g.inertia},
                                       {"damping", g.damping},
                                       {"mech_power", g.mech_power}});
    j["loads"] = json::array();
    for (const auto& l : c.loads)
        j["loads"].push_back(json{{"bus", l.bus},
                                  {"freq_coeff", l.freq_coeff},
                                  {"demand", l.demand},
                                  {"controllable", l.controllable},
                                  {"noncontrollable", l.noncontrollable}});
    j["reference_bus"] = c.reference_bus;
    j["generator_channels"] = c.generator_channels;
    return j;
}

NetworkCase load_case(const std::string& path) {
    return case_from_json(read_json_file(path));
}

VectorXd electrical_power(const NetworkCase& c, const VectorXd& delta) {
    const int nb = static_cast<int>(c.buses.size());
    if (delta.size() != nb)
        throw ValidationError("electrical_power: angle vector has wrong dimension");
    VectorXd pe = VectorXd::Zero(nb);
    for (const auto& ln : c.lines) {
        const int i = c.bus_index(ln.from);
        const int j = c.bus_index(ln.to);
        pe(i) += c.buses[i].voltage * c.buses[j].voltage * ln.admittance *
                 std::cos(delta(i) - delta(j) - ln.angle);
    }
    return pe;
}

MatrixXd electrical_power_jacobian(const NetworkCase& c, const VectorXd& delta) {
    const int nb = static_cast<int>(c.buses.size());
    MatrixXd J = MatrixXd::Zero(nb, nb);
    for (const auto& ln : c.lines) {
        const int i = c.bus_index(ln.from);
        const int j = c.bus_index(ln.to);
        if (i == j) continue;  // self terms are angle-independent
        const double g = c.buses[i].voltage * c.buses[j].voltage * ln.admittance *
                         std::sin(delta(i) - delta(j) - ln.angle);
        J(i, i) -= g;
        J(i, j) += g;
    }
    return J;
}

VectorXd nominal_injection(const NetworkCase& c) {
    VectorXd p = VectorXd::Zero(static_cast<Eigen::Index>(c.buses.size()));
    for (const auto& g : c.generators) p(c.bus_index(g.bus)) += g.mech_power;
    for (const auto& l : c.loads) p(c.bus_index(l.bus)) -= l.demand;
    return p;
}

namespace {

// state bookkeeping shared by equilibrium/linearize/reduced_rhs
struct StateMap {
    std::vector<int> gen_bus_idx;         // omega states, case generator order
    std::vector<int> angle_bus_idx;       // angle states, case bus order w/o ref
    std::vector<int> angle_state_of_bus;  // bus idx -> angle state (-1 for ref)
    int n = 0;
};

StateMap make_state_map(const NetworkCase& c) {
    StateMap sm;
    const int nb = static_cast<int>(c.buses.size());
    sm.angle_state_of_bus.assign(nb, -1);
    for (const auto& g : c.generators) sm.gen_bus_idx.push_back(c.bus_index(g.bus));
    const int ng = static_cast<int>(sm.gen_bus_idx.size());
    int k = 0;
    for (int bi = 0; bi < nb; ++bi) {
        if (c.buses[bi].id == c.reference_bus) continue;
        sm.angle_bus_idx.push_back(bi);
        sm.angle_state_of_bus[bi] = ng + k;
        ++k;
    }
    sm.n = ng + k;
    return sm;
}

// absolute bus angles from the reduced state (reference grounded to zero)
VectorXd bus_angles(const NetworkCase& c, const StateMap& sm, const VectorXd& x) {
    VectorXd delta = VectorXd::Zero(static_cast<Eigen::Index>(c.buses.size()));
    for (size_t k = 0; k < sm.angle_bus_idx.size(); ++k)
        delta(sm.angle_bus_idx[k]) = x(static_cast<Eigen::Index>(sm.gen_bus_idx.size() + k));
    return delta;
}

}  // namespace

EquilibriumPoint solve_equilibrium(const NetworkCase& c, const VectorXd& P_in0_bus,
                                   const EquilibriumOptions& opt) {
    c.validate();
    const int nb = static_cast<int>(c.buses.size());
    if (P_in0_bus.size() != nb)
        throw ValidationError("solve_equilibrium: injection vector has wrong dimension");
    const StateMap sm = make_state_map(c);
    const int na = static_cast<int>(sm.angle_bus_idx.size());

    VectorXd ang = VectorXd::Zero(na);  // flat start
    double last_res = 0.0;
    bool converged = false;
    for (int it = 0; it <= opt.max_iter; ++it) {
        VectorXd delta = VectorXd::Zero(nb);
        for (int k = 0; k < na; ++k) delta(sm.angle_bus_idx[k]) = ang(k);
        VectorXd mismatch = P_in0_bus - electrical_power(c, delta);
        VectorXd red(na);
        for (int k = 0; k < na; ++k) red(k) = mismatch(sm.angle_bus_idx[k]);
        last_res = red.lpNorm<Eigen::Infinity>();
        if (last_res <= opt.tol) {
            converged = true;
            break;
        }
        if (it == opt.max_iter) break;
        MatrixXd Jfull = electrical_power_jacobian(c, delta);
        MatrixXd J(na, na);
        for (int r = 0; r < na; ++r)
            for (int col = 0; col < na; ++col)
                J(r, col) = -Jfull(sm.angle_bus_idx[r], sm.angle_bus_idx[col]);
        Eigen::FullPivLU<MatrixXd> lu(J);
        if (!lu.isInvertible())
            throw NumericalError("solve_equilibrium: singular Jacobian at iteration " +
                                 std::to_string(it));
        ang -= lu.solve(red);
        if (!ang.allFinite())
            throw NumericalError("solve_equilibrium: iterate diverged");
    }
    if (!converged) {
        std::ostringstream os;
        os << "solve_equilibrium: no convergence after " << opt.max_iter
           << " iterations (residual " << last_res << ")";
        throw NumericalError(os.str());
    }
    // full balance check, including the grounded reference row
    VectorXd delta = VectorXd::Zero(nb);
    for (int k = 0; k < na; ++k) delta(sm.angle_bus_idx[k]) = ang(k);
    const VectorXd full_res = P_in0_bus - electrical_power(c, delta);
    const double full_norm = full_res.lpNorm<Eigen::Infinity>();
    if (full_norm > opt.tol * 1e2) {
        std::ostringstream os;
        os << "solve_equilibrium: reference-bus balance residual " << full_norm
           << " (injections do not balance)";
        throw NumericalError(os.str());
    }

    EquilibriumPoint eq;
    eq.x = VectorXd::Zero(sm.n);
    eq.x.tail(na) = ang;
    eq.residual_norm = full_norm;
    return eq;
}

VectorXd reduced_rhs(const NetworkCase& c, const VectorXd& x, const VectorXd& P_in0_bus) {
    const StateMap sm = make_state_map(c);
    if (x.size() != sm.n) throw ValidationError("reduced_rhs: state dimension mismatch");
    const int ng = static_cast<int>(sm.gen_bus_idx.size());
    const VectorXd delta = bus_angles(c, sm, x);
    const VectorXd pe = electrical_power(c, delta);
    VectorXd dx = VectorXd::Zero(sm.n);
    for (int gi = 0; gi < ng; ++gi) {
        const auto& g = c.generators[gi];
        const int bi = sm.gen_bus_idx[gi];
        dx(gi) = (P_in0_bus(bi) - pe(bi) - g.damping * x(gi)) / g.inertia;
        const int as = sm.angle_state_of_bus[bi];
        if (as >= 0) dx(as) = x(gi);
    }
    for (int k = 0; k < static_cast<int>(sm.angle_bus_idx.size()); ++k) {
        const int bi = sm.angle_bus_idx[k];
        if (c.buses[bi].kind != BusKind::Load) continue;
        const Load* l = c.load_at(c.buses[bi].id);
        dx(ng + k) = (P_in0_bus(bi) - pe(bi)) / l->freq_coeff;
    }
    return dx;
}

LinearModel linearize(const NetworkCase& c, const EquilibriumPoint& eq,
                      const MeasurementSelection& meas) {
    c.validate();
    const StateMap sm = make_state_map(c);
    const int ng = static_cast<int>(sm.gen_bus_idx.size());
    const int na = static_cast<int>(sm.angle_bus_idx.size());
    const int n = sm.n;
    if (eq.x.size() != n) throw ValidationError("linearize: equilibrium dimension mismatch");
    EquilibriumOptions defaults;
    if (eq.residual_norm > defaults.tol * 1e2)
        throw ValidationError("linearize: equilibrium residual above tolerance");

    const VectorXd delta = bus_angles(c, sm, eq.x);
    const MatrixXd dPe = electrical_power_jacobian(c, delta);

    MatrixXd A0 = MatrixXd::Zero(n, n);
    for (int gi = 0; gi < ng; ++gi) {
        const auto& g = c.generators[gi];
        const int bi = sm.gen_bus_idx[gi];
        A0(gi, gi) = -g.damping / g.inertia;
        for (int k = 0; k < na; ++k)
            A0(gi, ng + k) = -dPe(bi, sm.angle_bus_idx[k]) / g.inertia;
        const int as = sm.angle_state_of_bus[bi];
        if (as >= 0) A0(as, gi) = 1.0;
    }
    for (int k = 0; k < na; ++k) {
        const int bi = sm.angle_bus_idx[k];
        if (c.buses[bi].kind != BusKind::Load) continue;
        const Load* l = c.load_at(c.buses[bi].id);
        for (int k2 = 0; k2 < na; ++k2)
            A0(ng + k, ng + k2) = -dPe(bi, sm.angle_bus_idx[k2]) / l->freq_coeff;
    }

    // per-bus injection map
    const int nb = static_cast<int>(c.buses.size());
    MatrixXd B_bus = MatrixXd::Zero(n, nb);
    for (int gi = 0; gi < ng; ++gi)
        B_bus(gi, sm.gen_bus_idx[gi]) = 1.0 / c.generators[gi].inertia;
    for (int k = 0; k < na; ++k) {
        const int bi = sm.angle_bus_idx[k];
        if (c.buses[bi].kind != BusKind::Load) continue;
        B_bus(ng + k, bi) = 1.0 / c.load_at(c.buses[bi].id)->freq_coeff;
    }

    LinearModel model;
    model.A0 = A0;
    model.B_bus = B_bus;
    model.x_eq = eq.x;
    for (const auto& b : c.buses) model.bus_ids.push_back(b.id);
    model.injection_buses = c.channel_buses();
    model.B0.resize(n, static_cast<Eigen::Index>(model.injection_buses.size()));
    for (size_t ch = 0; ch < model.injection_buses.size(); ++ch)
        model.B0.col(static_cast<Eigen::Index>(ch)) =
            B_bus.col(c.bus_index(model.injection_buses[ch]));

    for (int gi = 0; gi < ng; ++gi)
        model.state_labels.push_back("omega:" + std::to_string(c.buses[sm.gen_bus_idx[gi]].id));
    for (int k = 0; k < na; ++k)
        model.state_labels.push_back("angle:" + std::to_string(c.buses[sm.angle_bus_idx[k]].id));

    // measurement matrix
    std::vector<int> rows;
    switch (meas.mode) {
        case MeasurementSelection::Mode::FullState:
            for (int r = 0; r < n; ++r) rows.push_back(r);
            break;
        case MeasurementSelection::Mode::Generators: {
            for (int gi = 0; gi < ng; ++gi) rows.push_back(gi);
            for (int gi = 0; gi < ng; ++gi) {
                const int as = sm.angle_state_of_bus[sm.gen_bus_idx[gi]];
                if (as >= 0) rows.push_back(as);
            }
            break;
        }
        case MeasurementSelection::Mode::Rows:
            rows = meas.rows;
            for (int r : rows)
                if (r < 0 || r >= n)
                    throw ValidationError("linearize: measurement row " +
                                          std::to_string(r) + " out of range");
            break;
    }
    if (rows.empty()) throw ValidationError("linearize: empty measurement selection");
    model.C0 = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
    for (size_t r = 0; r < rows.size(); ++r) {
        model.C0(static_cast<Eigen::Index>(r), rows[r]) = 1.0;
        model.measurement_labels.push_back(model.state_labels[rows[r]]);
    }
    return model;
}

AssumptionReport check_assumptions(const LinearModel& model) {
    AssumptionReport rep;
    const int n = model.n();
    Eigen::EigenSolver<MatrixXd> es(model.A0);
    rep.max_real_eig = es.eigenvalues().real().maxCoeff();
    rep.hurwitz = rep.max_real_eig < 0.0;

    auto numerical_rank = [](const MatrixXd& M) {
        if (M.size() == 0) return 0;
        Eigen::JacobiSVD<MatrixXd> svd(M);
        const auto& sv = svd.singularValues();
        if (sv.size() == 0 || sv(0) == 0.0) return 0;
        const double thresh = std::max(M.rows(), M.cols()) *
                              std::numeric_limits<double>::epsilon() * sv(0);
        int r = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > thresh) ++r;
        return r;
    };

    // powers are rescaled per block to tame conditioning; block scaling does
    // not change the column span, hence not the rank
    const double anorm = std::max(1.0, model.A0.norm());
    MatrixXd ctrb(n, n * model.m());
    MatrixXd blk = model.B0;
    for (int k = 0; k < n; ++k) {
        ctrb.middleCols(static_cast<Eigen::Index>(k) * model.m(), model.m()) = blk;
        blk = (model.A0 * blk) / anorm;
    }
    rep.controllability_rank = numerical_rank(ctrb);
    rep.controllable = rep.controllability_rank == n;

    MatrixXd obsv(n * model.s(), n);
    MatrixXd orow = model.C0;
    for (int k = 0; k < n; ++k) {
        obsv.middleRows(static_cast<Eigen::Index>(k) * model.s(), model.s()) = orow;
        orow = (orow * model.A0) / anorm;
    }
    rep.observability_rank = numerical_rank(obsv);
    rep.observable = rep.observability_rank == n;
    rep.rank_C0 = numerical_rank(model.C0);
    return rep;
}

json model_to_json(const LinearModel& m) {
    json j;
    j["n"] = m.n();
    j["m"] = m.m();
    j["s"] = m.s();
    j["A0"] = matrix_to_json(m.A0);
    j["B0"] = matrix_to_json(m.B0);
    j["C0"] = matrix_to_json(m.C0);
    j["state_labels"] = m.state_labels;
    j["injection_buses"] = m.injection_buses;
    j["measurement_labels"] = m.measurement_labels;
    return j;
}

json assumptions_to_json(const AssumptionReport& r) {
    json j;
    j["hurwitz"] = r.hurwitz;
    j["max_real_eig"] = r.max_real_eig;
    j["controllable"] = r.controllable;
    j["controllability_rank"] = r.controllability_rank;
    j["observable"] = r.observable;
    j["observability_rank"] = r.observability_rank;
    j["rank_C0"] = r.rank_C0;
    return j;
}

}  // namespace gridsyn::net
