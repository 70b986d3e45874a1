// gridsyn: sparse stochastic-stabilizing controller synthesis for power
// networks, with MSES certification and Monte Carlo validation.

#include "gridsyn/errors.hpp"
#include "gridsyn/jsonio.hpp"
#include "gridsyn/mses.hpp"
#include "gridsyn/netmodel.hpp"
#include "gridsyn/sde.hpp"
#include "gridsyn/stochastic.hpp"
#include "gridsyn/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;
using namespace gridsyn;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSolver = 4;
constexpr int kExitSimulation = 5;

struct CommonOpts {
    std::string case_path;
    std::string meas = "full";
    std::string out_dir = ".";
    double w1 = 1.0, w2 = 1.0, w3 = 1.0, w4 = 1.0;
    std::string p_norm = "1";
    double sigma_scale = 1.0;
    uint64_t seed = 0;
    double dt = 1e-3;
    double horizon = 10.0;
    int paths = 100;
    bool strict = false;
    bool lqr = false;
    std::string gain_path;
    std::string cert_path;
    std::string w3_grid = "0.5,1,2,4";
    std::string scenario_path;
    int bins = 41;
};

net::MeasurementSelection parse_meas(const std::string& s) {
    if (s == "full") return net::MeasurementSelection::full();
    if (s == "generators") return net::MeasurementSelection::generators();
    if (s.rfind("rows=", 0) == 0) {
        std::vector<int> rows;
        std::stringstream ss(s.substr(5));
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) rows.push_back(std::stoi(tok));
        return net::MeasurementSelection::row_list(rows);
    }
    throw ValidationError("--meas: expected full, generators, or rows=i,j,...");
}

synth::SynthesisWeights parse_weights(const CommonOpts& o) {
    synth::SynthesisWeights w;
    w.w1 = o.w1;
    w.w2 = o.w2;
    w.w3 = o.w3;
    w.w4 = o.w4;
    if (o.p_norm == "1")
        w.p = synth::RowNorm::L1;
    else if (o.p_norm == "2")
        w.p = synth::RowNorm::L2;
    else if (o.p_norm == "inf")
        w.p = synth::RowNorm::LInf;
    else
        throw ValidationError("--p: expected 1, 2, or inf");
    w.validate();
    return w;
}

struct BuiltModel {
    net::NetworkCase c;
    net::LinearModel model;
    Eigen::VectorXd P_in0_channels;
};

BuiltModel build_model(const CommonOpts& o) {
    BuiltModel bm;
    bm.c = net::load_case(o.case_path);
    const Eigen::VectorXd pbus = net::nominal_injection(bm.c);
    const net::EquilibriumPoint eq = net::solve_equilibrium(bm.c, pbus);
    bm.model = net::linearize(bm.c, eq, parse_meas(o.meas));
    bm.P_in0_channels.resize(static_cast<Eigen::Index>(bm.model.injection_buses.size()));
    for (size_t i = 0; i < bm.model.injection_buses.size(); ++i)
        bm.P_in0_channels(static_cast<Eigen::Index>(i)) =
            pbus(bm.c.bus_index(bm.model.injection_buses[i]));
    return bm;
}

void ensure_outdir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
}

std::vector<sde::ScenarioEvent> load_scenario(const std::string& path, double horizon) {
    std::vector<sde::ScenarioEvent> events;
    if (path.empty()) return events;
    const json doc = read_json_file(path);
    for (const auto& ej : doc.at("events")) {
        sde::ScenarioEvent ev;
        ev.time = ej.at("time").get<double>();
        ev.bus = ej.at("bus").get<int>();
        const std::string kind = ej.at("kind").get<std::string>();
        if (kind == "generation_step")
            ev.kind = sde::ScenarioEvent::Kind::GenerationStep;
        else if (kind == "noncontrollable_load_step")
            ev.kind = sde::ScenarioEvent::Kind::NoncontrollableLoadStep;
        else
            throw ValidationError("scenario: unknown event kind " + kind);
        ev.magnitude = ej.at("magnitude").get<double>();
        if (ev.time < 0 || ev.time > horizon)
            throw ValidationError("scenario: event time outside horizon");
        events.push_back(ev);
    }
    return events;
}

int cmd_linearize(const CommonOpts& o) {
    const BuiltModel bm = build_model(o);
    ensure_outdir(o.out_dir);
    write_json_file(o.out_dir + "/model.json", net::model_to_json(bm.model));
    write_json_file(o.out_dir + "/assumptions.json",
                    net::assumptions_to_json(net::check_assumptions(bm.model)));
    std::cerr << "linearize: n=" << bm.model.n() << " m=" << bm.model.m()
              << " s=" << bm.model.s() << "\n";
    return 0;
}

void write_support_csv(const std::string& path, const synth::SynthesisResult& r,
                       const std::vector<int>& buses) {
    std::ofstream out(path);
    out << "channel,bus,gain_norm\n";
    const std::vector<int> sup = synth::row_support(r.K0, 1e-6);
    for (int i : sup)
        out << i << "," << buses[static_cast<size_t>(i)] << "," << r.K0.row(i).norm()
            << "\n";
}

int cmd_synth(const CommonOpts& o) {
    const BuiltModel bm = build_model(o);
    const synth::SynthesisWeights w = parse_weights(o);
    const net::AssumptionReport rep = net::check_assumptions(bm.model);
    synth::SynthesisResult res;
    if (rep.rank_C0 == bm.model.n()) {
        std::cerr << "synth: rank(C0) = n, full-state path\n";
        res = synth::synthesize_full_state(bm.model, w);
    } else {
        std::cerr << "synth: rank(C0) = " << rep.rank_C0 << " < n = " << bm.model.n()
                  << ", two-stage path\n";
        const Eigen::MatrixXd Q = synth::stage1_precompute(bm.model, w);
        res = synth::stage2_gain(bm.model, Q, w);
    }
    ensure_outdir(o.out_dir);
    json gain;
    gain["K0"] = matrix_to_json(res.K0);
    gain["injection_buses"] = bm.model.injection_buses;
    gain["measurement_labels"] = bm.model.measurement_labels;
    gain["two_stage"] = res.two_stage;
    write_json_file(o.out_dir + "/gain.json", gain);
    write_json_file(o.out_dir + "/certificate.json",
                    synth::result_to_json(res, bm.model.injection_buses));
    write_support_csv(o.out_dir + "/support.csv", res, bm.model.injection_buses);
    return 0;
}

int cmd_pareto(const CommonOpts& o) {
    const BuiltModel bm = build_model(o);
    const synth::SynthesisWeights w = parse_weights(o);
    std::vector<double> grid;
    {
        std::stringstream ss(o.w3_grid);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) grid.push_back(std::stod(tok));
    }
    const auto points = synth::pareto_sweep(bm.model, w, grid);
    ensure_outdir(o.out_dir);
    std::ofstream out(o.out_dir + "/pareto.csv");
    out << "w3,bus,gain_norm,sigma_star,gamma2_star,status\n";
    out.precision(12);
    for (const auto& pt : points) {
        if (!pt.converged) {
            out << pt.w3 << ",,,,," << "failed\n";
            continue;
        }
        for (Eigen::Index i = 0; i < pt.gain_norms.size(); ++i) {
            out << pt.w3 << "," << bm.model.injection_buses[static_cast<size_t>(i)] << ","
                << pt.gain_norms(i) << ",";
            if (std::isinf(pt.sigma_star(i)))
                out << "inf";
            else
                out << pt.sigma_star(i);
            out << "," << pt.gamma2_star << ",ok\n";
        }
    }
    return 0;
}

int cmd_simulate(const CommonOpts& o) {
    const BuiltModel bm = build_model(o);
    const std::string gain_file =
        o.gain_path.empty() ? o.out_dir + "/gain.json" : o.gain_path;
    const json gj = read_json_file(gain_file);
    const Eigen::MatrixXd K0 = matrix_from_json(gj.at("K0"));

    // channel sigmas: sigma_scale times the certified critical values
    const std::string cert_file =
        o.cert_path.empty() ? o.out_dir + "/certificate.json" : o.cert_path;
    const int m = bm.model.m();
    stoch::UncertaintySpec spec = stoch::UncertaintySpec::all_additive(m, 0.0);
    if (fs::exists(cert_file)) {
        const json cj = read_json_file(cert_file);
        const json& sig = cj.at("sigma_star");
        for (int i = 0; i < m && i < static_cast<int>(sig.size()); ++i)
            spec.sigma(i) = sig.at(i).is_null() ? 0.0
                                                : o.sigma_scale * sig.at(i).get<double>();
    } else {
        std::cerr << "simulate: no certificate at " << cert_file
                  << "; multiplicative noise disabled\n";
    }

    sde::SimConfig cfg;
    cfg.dt = o.dt;
    cfg.horizon = o.horizon;
    cfg.paths = o.paths;
    cfg.seed = o.seed;
    cfg.multiplicative = true;
    cfg.additive = true;
    cfg.scenario = load_scenario(o.scenario_path, o.horizon);

    const stoch::ClosedLoopModel cl =
        stoch::assemble_closed_loop(bm.model, K0, spec, bm.P_in0_channels);
    const stoch::ShiftedModel sm = stoch::shift_coordinates(cl);
    const sde::SdeSystem sys = sde::make_scenario_system(sm, bm.model, bm.c, cfg.scenario);
    const sde::EnsembleStats stats = sde::simulate_ensemble(sys, cfg);

    ensure_outdir(o.out_dir);
    {
        std::ofstream out(o.out_dir + "/ensemble.csv");
        out << "time,mean_sq,stderr\n";
        out.precision(12);
        for (Eigen::Index i = 0; i < stats.times.size(); ++i)
            out << stats.times(i) << "," << stats.mean_sq(i) << "," << stats.std_err(i)
                << "\n";
    }
    // growth flag: terminal mean square against the mid-horizon value
    const Eigen::Index nt = stats.times.size();
    const double mid = stats.mean_sq(nt / 2);
    const bool unstable = stats.mean_sq(nt - 1) > 10.0 * std::max(mid, 1e-300);
    json hist = sde::histogram_to_json(sde::frequency_distribution(stats, o.bins));
    hist["sigma_scale"] = o.sigma_scale;
    hist["stability_flag"] = unstable ? "unstable" : "stable";
    write_json_file(o.out_dir + "/hist.json", hist);

    if (o.lqr) {
        if (bm.model.s() != bm.model.n())
            throw ValidationError("--lqr baseline requires full-state measurements");
        const Eigen::MatrixXd Qw =
            Eigen::MatrixXd::Identity(bm.model.n(), bm.model.n());
        const Eigen::MatrixXd Rw = Eigen::MatrixXd::Identity(m, m);
        const Eigen::MatrixXd Klqr = synth::design_lqr(bm.model, Qw, Rw);
        const sde::CompareReport cmp = sde::compare_controllers(
            bm.model, bm.c, K0, Klqr, spec, bm.P_in0_channels, cfg);
        json cj = sde::compare_to_json(cmp);
        cj["a"]["name"] = "synthesized";
        cj["b"]["name"] = "lqr";
        write_json_file(o.out_dir + "/compare.json", cj);
    }
    if (o.strict && stats.truncated_paths > 0) {
        std::cerr << "simulate: " << stats.truncated_paths
                  << " path(s) truncated (non-finite state)\n";
        return kExitSimulation;
    }
    std::cerr << "simulate: " << (unstable ? "unstable" : "stable") << ", terminal mean_sq "
              << stats.mean_sq(nt - 1) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse stochastic-stabilizing grid controller synthesis"};
    app.require_subcommand(1);
    CommonOpts o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--case", o.case_path, "network case JSON")->required();
        sub->add_option("--meas", o.meas, "full | generators | rows=i,j,...");
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--w1", o.w1);
        sub->add_option("--w2", o.w2);
        sub->add_option("--w3", o.w3);
        sub->add_option("--w4", o.w4, "sparsity weight (0 disables)");
        sub->add_option("--p", o.p_norm, "row norm: 1 | 2 | inf");
        sub->add_option("--sigma-scale", o.sigma_scale);
        sub->add_option("--seed", o.seed);
        sub->add_option("--dt", o.dt);
        sub->add_option("--horizon", o.horizon);
        sub->add_option("--paths", o.paths);
        sub->add_flag("--strict", o.strict);
    };

    CLI::App* lin = app.add_subcommand("linearize", "build the (A0,B0,C0) plant");
    add_common(lin);
    CLI::App* syn = app.add_subcommand("synth", "synthesize a certified sparse gain");
    add_common(syn);
    CLI::App* par = app.add_subcommand("pareto", "sweep w3 for the effort/uncertainty front");
    add_common(par);
    par->add_option("--w3-grid", o.w3_grid, "comma-separated w3 values");
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo closed-loop validation");
    add_common(sim);
    sim->add_option("--gain", o.gain_path, "gain.json path (default <out>/gain.json)");
    sim->add_option("--certificate", o.cert_path,
                    "certificate.json path (default <out>/certificate.json)");
    sim->add_option("--scenario", o.scenario_path, "scenario events JSON");
    sim->add_option("--bins", o.bins, "histogram bins");
    sim->add_flag("--lqr", o.lqr, "also run an LQR baseline comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (lin->parsed()) return cmd_linearize(o);
        if (syn->parsed()) return cmd_synth(o);
        if (par->parsed()) return cmd_pareto(o);
        if (sim->parsed()) return cmd_simulate(o);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const SimulationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSimulation;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
