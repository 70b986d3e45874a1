#include "gridsyn/sde.hpp"

#include "gridsyn/errors.hpp"
#include "gridsyn/philox.hpp"
#include "gridsyn/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <thread>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

namespace gridsyn::sde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SimConfig::validate() const {
    if (!(dt > 0)) throw ValidationError("sim: dt must be positive");
    if (!(horizon >= dt)) throw ValidationError("sim: horizon must be at least dt");
    if (paths < 1) throw ValidationError("sim: paths must be >= 1");
    if (record_points < 2) throw ValidationError("sim: record_points must be >= 2");
    for (const auto& ev : scenario)
        if (ev.time < 0.0 || ev.time > horizon)
            throw ValidationError("sim: event time outside [0, horizon]");
}

namespace {

struct StateRows {
    // parsed from model state labels
    std::vector<std::pair<int, int>> omega_rows;  // (bus id, row)
    std::vector<std::pair<int, int>> angle_rows;
};

StateRows parse_labels(const net::LinearModel& model) {
    StateRows sr;
    for (size_t r = 0; r < model.state_labels.size(); ++r) {
        const std::string& lbl = model.state_labels[r];
        const auto colon = lbl.find(':');
        const int bus = std::stoi(lbl.substr(colon + 1));
        if (lbl.rfind("omega:", 0) == 0)
            sr.omega_rows.push_back({bus, static_cast<int>(r)});
        else
            sr.angle_rows.push_back({bus, static_cast<int>(r)});
    }
    return sr;
}

std::vector<SdeSystem::FreqRow> make_freq_rows(const net::NetworkCase& c,
                                               const net::LinearModel& model) {
    const StateRows sr = parse_labels(model);
    std::vector<SdeSystem::FreqRow> rows;
    for (const auto& b : c.buses) {
        if (b.id == c.reference_bus) continue;  // grounded, no deviation
        if (b.kind == net::BusKind::GeneratorInternal) {
            for (const auto& [bus, r] : sr.omega_rows)
                if (bus == b.id) rows.push_back({b.id, true, r});
        } else {
            for (const auto& [bus, r] : sr.angle_rows)
                if (bus == b.id) rows.push_back({b.id, false, r});
        }
    }
    return rows;
}

std::vector<SdeSystem::MulChannel> make_channels(const stoch::ClosedLoopModel& cl,
                                                 const VectorXd* offsets) {
    std::vector<SdeSystem::MulChannel> out;
    for (int i = 0; i < cl.m(); ++i) {
        SdeSystem::MulChannel ch;
        ch.B = cl.B.col(i);
        ch.C = cl.C.row(i);
        ch.sigma = cl.spec.sigma(i);
        ch.offset = offsets ? (*offsets)(i) : 0.0;
        out.push_back(std::move(ch));
    }
    return out;
}

MatrixXd make_additive_columns(const stoch::ClosedLoopModel& cl) {
    MatrixXd B_add(cl.n(), static_cast<Eigen::Index>(cl.spec.additive_channels.size()));
    for (size_t k = 0; k < cl.spec.additive_channels.size(); ++k)
        B_add.col(static_cast<Eigen::Index>(k)) = cl.B.col(cl.spec.additive_channels[k]);
    return B_add;
}

SdeSystem::Event resolve_event(const net::NetworkCase& c, const net::LinearModel& model,
                               const ScenarioEvent& ev) {
    SdeSystem::Event out;
    out.time = ev.time;
    const int bi = c.bus_index(ev.bus);
    if (bi < 0)
        throw ValidationError("scenario: unknown bus " + std::to_string(ev.bus));
    if (ev.kind == ScenarioEvent::Kind::GenerationStep) {
        if (!c.generator_at(ev.bus))
            throw ValidationError("scenario: no generator at bus " + std::to_string(ev.bus));
        out.injection = ev.magnitude;
    } else {
        if (!c.load_at(ev.bus))
            throw ValidationError("scenario: no load at bus " + std::to_string(ev.bus));
        out.injection = -ev.magnitude;  // load increase withdraws power
    }
    out.bus_index = bi;
    out.magnitude = ev.magnitude;
    out.direction = model.B_bus.col(bi) * out.injection;
    return out;
}

}  // namespace

SdeSystem make_mses_system(const stoch::ShiftedModel& sm) {
    SdeSystem sys;
    sys.A = sm.base.A;
    sys.forcing = VectorXd::Zero(sys.A.rows());
    sys.channels = make_channels(sm.base, nullptr);
    sys.B_add.resize(sys.A.rows(), 0);
    sys.effort_rows = sm.base.C;
    return sys;
}

SdeSystem make_scenario_system(const stoch::ShiftedModel& sm, const net::LinearModel& model,
                               const net::NetworkCase& c,
                               const std::vector<ScenarioEvent>& events) {
    SdeSystem sys;
    sys.A = sm.base.A;
    sys.forcing = VectorXd::Zero(sys.A.rows());
    sys.channels = make_channels(sm.base, &sm.forcing_coeff);
    sys.B_add = make_additive_columns(sm.base);
    for (const auto& ev : events) sys.events.push_back(resolve_event(c, model, ev));
    sys.freq_rows = make_freq_rows(c, model);
    sys.effort_rows = sm.base.C;
    return sys;
}

SdeSystem make_nonlinear_system(const net::NetworkCase& c, const net::LinearModel& model,
                                const stoch::ClosedLoopModel& cl,
                                const std::vector<ScenarioEvent>& events) {
    SdeSystem sys;
    sys.A = cl.A;  // used only for dimensioning/readout defaults
    sys.forcing = VectorXd::Zero(cl.n());
    sys.channels = make_channels(cl, nullptr);
    sys.B_add = make_additive_columns(cl);
    for (const auto& ev : events) sys.events.push_back(resolve_event(c, model, ev));
    sys.freq_rows = make_freq_rows(c, model);
    sys.effort_rows = cl.C;
    sys.nonlinear_case = c;
    sys.x_eq = model.x_eq;
    sys.P_bus_nominal = net::nominal_injection(c);
    for (int bus : cl.injection_buses) sys.channel_bus_idx.push_back(c.bus_index(bus));
    return sys;
}

namespace {

struct RecordingPlan {
    std::vector<int64_t> steps;  // recorded step indices (0 = initial state)
    VectorXd times;
    std::vector<int> window_rec;  // recorded indices inside the stationary window
    std::vector<int> freq_rec;    // recorded indices pooled into the histogram
};

RecordingPlan make_plan(const SimConfig& cfg) {
    const int64_t nsteps = std::llround(cfg.horizon / cfg.dt);
    RecordingPlan plan;
    const int rec = std::min<int64_t>(cfg.record_points, nsteps + 1);
    for (int j = 0; j < rec; ++j) {
        const int64_t k = (nsteps * j) / (rec - 1);
        if (plan.steps.empty() || plan.steps.back() != k) plan.steps.push_back(k);
    }
    plan.times.resize(static_cast<Eigen::Index>(plan.steps.size()));
    for (size_t j = 0; j < plan.steps.size(); ++j)
        plan.times(static_cast<Eigen::Index>(j)) = cfg.dt * static_cast<double>(plan.steps[j]);
    // stationary window: last 20% of the horizon
    const double t0 = 0.8 * cfg.horizon;
    for (size_t j = 0; j < plan.steps.size(); ++j)
        if (plan.times(static_cast<Eigen::Index>(j)) >= t0)
            plan.window_rec.push_back(static_cast<int>(j));
    // histogram sampling times: an even subset of the window
    const int want = std::max(1, cfg.freq_sample_points);
    const int wn = static_cast<int>(plan.window_rec.size());
    if (wn > 0) {
        for (int j = 0; j < std::min(want, wn); ++j) {
            const int idx = plan.window_rec[(static_cast<int64_t>(wn - 1) * j) /
                                            std::max(1, std::min(want, wn) - 1)];
            if (plan.freq_rec.empty() || plan.freq_rec.back() != idx)
                plan.freq_rec.push_back(idx);
        }
    }
    return plan;
}

// One Euler-Maruyama path; calls sink(rec_index, z, drift) at recorded steps.
template <typename Sink>
bool run_path(const SdeSystem& sys, const SimConfig& cfg, const RecordingPlan& plan,
              int path, Sink&& sink) {
    const int n = sys.n();
    VectorXd z = cfg.z0.size() > 0 ? cfg.z0 : VectorXd::Zero(n);
    if (z.size() != n) throw ValidationError("sim: z0 dimension mismatch");
    const int64_t nsteps = std::llround(cfg.horizon / cfg.dt);
    const double sdt = std::sqrt(cfg.dt);
    const bool nonlinear = sys.nonlinear_case.has_value();

    VectorXd p_bus;
    auto drift_at = [&](const VectorXd& zz, double t) -> VectorXd {
        if (!nonlinear) {
            VectorXd d = sys.A * zz + sys.forcing;
            for (const auto& ev : sys.events)
                if (t >= ev.time) d += ev.direction;
            return d;
        }
        p_bus = sys.P_bus_nominal;
        const VectorXd u = -(sys.effort_rows * zz);  // deterministic feedback
        for (size_t i = 0; i < sys.channel_bus_idx.size(); ++i)
            p_bus(sys.channel_bus_idx[i]) += u(static_cast<Eigen::Index>(i));
        for (const auto& ev : sys.events)
            if (t >= ev.time) p_bus(ev.bus_index) += ev.injection;
        return net::reduced_rhs(*sys.nonlinear_case, VectorXd(sys.x_eq + zz), p_bus);
    };

    size_t next_rec = 0;
    bool truncated = false;
    VectorXd drift = drift_at(z, 0.0);
    if (plan.steps[0] == 0) {
        sink(0, z, drift);
        next_rec = 1;
    }
    for (int64_t k = 0; k < nsteps; ++k) {
        const double t = cfg.dt * static_cast<double>(k);
        drift = drift_at(z, t);
        VectorXd znew = z + cfg.dt * drift;
        if (cfg.multiplicative) {
            for (size_t i = 0; i < sys.channels.size(); ++i) {
                const auto& ch = sys.channels[i];
                const double se = ch.sigma * cfg.sigma_scale;
                if (se == 0.0) continue;
                const double dw =
                    sdt * normal_draw(cfg.seed, static_cast<uint32_t>(path),
                                      static_cast<uint64_t>(k), static_cast<uint32_t>(i), 0);
                znew += se * (ch.C.dot(z) + ch.offset) * dw * ch.B;
            }
        }
        if (cfg.additive) {
            for (int a = 0; a < sys.B_add.cols(); ++a) {
                const double dz =
                    sdt * normal_draw(cfg.seed, static_cast<uint32_t>(path),
                                      static_cast<uint64_t>(k), static_cast<uint32_t>(a), 1);
                znew += sys.B_add.col(a) * dz;
            }
        }
        if (!znew.allFinite()) {
            truncated = true;  // freeze the state; record remaining points as-is
            break;
        }
        z = znew;
        if (next_rec < plan.steps.size() && plan.steps[next_rec] == k + 1) {
            drift = drift_at(z, cfg.dt * static_cast<double>(k + 1));
            sink(static_cast<int>(next_rec), z, drift);
            ++next_rec;
        }
    }
    if (truncated) {
        VectorXd d = drift_at(z, cfg.horizon);
        for (; next_rec < plan.steps.size(); ++next_rec)
            sink(static_cast<int>(next_rec), z, d);
    }
    return truncated;
}

}  // namespace

Trajectory simulate_path(const SdeSystem& sys, const SimConfig& cfg, int path_index) {
    cfg.validate();
    if (path_index < 0 || path_index >= cfg.paths)
        throw ValidationError("simulate_path: path index out of range");
    const RecordingPlan plan = make_plan(cfg);
    Trajectory traj;
    traj.times = plan.times;
    traj.states.resize(sys.n(), static_cast<Eigen::Index>(plan.steps.size()));
    const bool trunc =
        run_path(sys, cfg, plan, path_index,
                 [&](int rec, const VectorXd& z, const VectorXd&) { traj.states.col(rec) = z; });
    traj.truncated = trunc;
    return traj;
}

namespace {

struct ChunkAccum {
    VectorXd sum_ms, sum_ms2;
    MatrixXd freq_sum;            // bus x rec
    VectorXd effort_sum;          // per channel
    VectorXd fv_sum, fv_sum2;     // per bus over window samples
    std::vector<double> freq_samples;
    int truncated = 0;

    void init(int nrec, int nbus, int nch) {
        sum_ms = VectorXd::Zero(nrec);
        sum_ms2 = VectorXd::Zero(nrec);
        freq_sum = MatrixXd::Zero(nbus, nrec);
        effort_sum = VectorXd::Zero(nch);
        fv_sum = VectorXd::Zero(nbus);
        fv_sum2 = VectorXd::Zero(nbus);
    }
};

}  // namespace

EnsembleStats simulate_ensemble(const SdeSystem& sys, const SimConfig& cfg) {
    cfg.validate();
    const RecordingPlan plan = make_plan(cfg);
    const int nrec = static_cast<int>(plan.steps.size());
    const int nbus = static_cast<int>(sys.freq_rows.size());
    const int nch = static_cast<int>(sys.effort_rows.rows());

    std::vector<bool> in_window(nrec, false), in_freq(nrec, false);
    for (int j : plan.window_rec) in_window[static_cast<size_t>(j)] = true;
    for (int j : plan.freq_rec) in_freq[static_cast<size_t>(j)] = true;

    constexpr int kChunk = 256;  // fixed chunking keeps reductions order-stable
    const int nchunks = (cfg.paths + kChunk - 1) / kChunk;

    auto run_chunk = [&](int ci) {
        ChunkAccum acc;
        acc.init(nrec, nbus, nch);
        const int p0 = ci * kChunk;
        const int p1 = std::min(cfg.paths, p0 + kChunk);
        for (int p = p0; p < p1; ++p) {
            const bool trunc = run_path(
                sys, cfg, plan, p, [&](int rec, const VectorXd& z, const VectorXd& drift) {
                    const double ms = z.squaredNorm();
                    acc.sum_ms(rec) += ms;
                    acc.sum_ms2(rec) += ms * ms;
                    if (nch > 0) acc.effort_sum += (sys.effort_rows * z).cwiseAbs();
                    for (int b = 0; b < nbus; ++b) {
                        const auto& fr = sys.freq_rows[static_cast<size_t>(b)];
                        const double f = fr.direct ? z(fr.row) : drift(fr.row);
                        acc.freq_sum(b, rec) += f;
                        if (in_window[static_cast<size_t>(rec)]) {
                            acc.fv_sum(b) += f;
                            acc.fv_sum2(b) += f * f;
                        }
                        if (in_freq[static_cast<size_t>(rec)])
                            acc.freq_samples.push_back(f);
                    }
                });
            if (trunc) acc.truncated++;
        }
        return acc;
    };

    std::vector<ChunkAccum> parts(static_cast<size_t>(nchunks));
    const int workers = std::max(1, cfg.threads);
    if (workers == 1) {
        for (int ci = 0; ci < nchunks; ++ci) parts[static_cast<size_t>(ci)] = run_chunk(ci);
    } else {
        std::vector<std::future<void>> futs;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w)
            futs.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const int ci = next.fetch_add(1);
                    if (ci >= nchunks) return;
                    parts[static_cast<size_t>(ci)] = run_chunk(ci);
                }
            }));
        for (auto& f : futs) f.get();
    }

    ChunkAccum total;
    total.init(nrec, nbus, nch);
    for (const auto& part : parts) {  // fixed merge order
        total.sum_ms += part.sum_ms;
        total.sum_ms2 += part.sum_ms2;
        total.freq_sum += part.freq_sum;
        total.effort_sum += part.effort_sum;
        total.fv_sum += part.fv_sum;
        total.fv_sum2 += part.fv_sum2;
        total.freq_samples.insert(total.freq_samples.end(), part.freq_samples.begin(),
                                  part.freq_samples.end());
        total.truncated += part.truncated;
    }

    EnsembleStats st;
    st.times = plan.times;
    st.paths = cfg.paths;
    st.truncated_paths = total.truncated;
    const double N = static_cast<double>(cfg.paths);
    st.mean_sq = total.sum_ms / N;
    st.std_err.resize(nrec);
    for (int j = 0; j < nrec; ++j) {
        if (cfg.paths > 1) {
            const double var =
                (total.sum_ms2(j) - total.sum_ms(j) * total.sum_ms(j) / N) / (N - 1.0);
            st.std_err(j) = std::sqrt(std::max(0.0, var) / N);
        } else {
            st.std_err(j) = 0.0;
        }
    }
    st.mean_freq = total.freq_sum / N;
    st.mean_abs_effort =
        nch > 0 ? VectorXd(total.effort_sum / (N * nrec)) : VectorXd(0);
    for (const auto& fr : sys.freq_rows) st.freq_bus_ids.push_back(fr.bus);
    const double wcount = N * static_cast<double>(plan.window_rec.size());
    st.freq_variance.resize(nbus);
    for (int b = 0; b < nbus; ++b) {
        if (wcount > 1) {
            const double var =
                (total.fv_sum2(b) - total.fv_sum(b) * total.fv_sum(b) / wcount) /
                (wcount - 1.0);
            st.freq_variance(b) = std::max(0.0, var);
        } else {
            st.freq_variance(b) = 0.0;
        }
    }
    st.freq_samples = std::move(total.freq_samples);
    st.samples_per_path = static_cast<int>(plan.freq_rec.size()) * nbus;
    return st;
}

Histogram frequency_distribution(const EnsembleStats& stats, int bins) {
    if (bins < 1) throw ValidationError("frequency_distribution: bins must be >= 1");
    if (stats.freq_samples.empty())
        throw ValidationError("frequency_distribution: empty sample set");
    const auto [mn_it, mx_it] =
        std::minmax_element(stats.freq_samples.begin(), stats.freq_samples.end());
    double lo = *mn_it, hi = *mx_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        h.edges(b) = lo + (hi - lo) * static_cast<double>(b) / bins;
    h.counts = VectorXd::Zero(bins);
    const double width = (hi - lo) / bins;
    for (double f : stats.freq_samples) {
        int b = static_cast<int>((f - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        h.counts(b) += 1.0;
    }
    const double N = static_cast<double>(stats.freq_samples.size());
    h.density = h.counts / (N * width);
    double m1 = 0.0;
    for (double f : stats.freq_samples) m1 += f;
    m1 /= N;
    double m2 = 0.0, m4 = 0.0;
    for (double f : stats.freq_samples) {
        const double d = f - m1;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= N;
    m4 /= N;
    h.mean = m1;
    h.variance = m2;
    h.excess_kurtosis = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;
    return h;
}

namespace {

ControllerReport run_controller(const net::LinearModel& model, const net::NetworkCase& c,
                                const MatrixXd& K, const stoch::UncertaintySpec& spec,
                                const VectorXd& P_in0, const SimConfig& cfg,
                                const std::string& name) {
    const stoch::ClosedLoopModel cl = stoch::assemble_closed_loop(model, K, spec, P_in0);
    const stoch::ShiftedModel sm = stoch::shift_coordinates(cl);
    const SdeSystem sys = make_scenario_system(sm, model, c, cfg.scenario);
    ControllerReport rep;
    rep.name = name;
    rep.stats = simulate_ensemble(sys, cfg);
    rep.freq_nadir = rep.stats.mean_freq.size() > 0 ? rep.stats.mean_freq.minCoeff() : 0.0;
    rep.freq_zenith = rep.stats.mean_freq.size() > 0 ? rep.stats.mean_freq.maxCoeff() : 0.0;
    rep.mean_abs_effort = rep.stats.mean_abs_effort;
    const int m = static_cast<int>(K.rows());
    rep.engaged_fraction =
        m > 0 ? static_cast<double>(synth::row_support(K, 1e-6).size()) / m : 0.0;
    return rep;
}

}  // namespace

CompareReport compare_controllers(const net::LinearModel& model, const net::NetworkCase& c,
                                  const MatrixXd& K_a, const MatrixXd& K_b,
                                  const stoch::UncertaintySpec& spec, const VectorXd& P_in0,
                                  const SimConfig& cfg) {
    if (K_a.rows() != K_b.rows() || K_a.cols() != K_b.cols())
        throw ValidationError("compare_controllers: gain dimensions differ");
    CompareReport rep;
    // identical seed/streams: common random numbers across both loops
    rep.a = run_controller(model, c, K_a, spec, P_in0, cfg, "a");
    rep.b = run_controller(model, c, K_b, spec, P_in0, cfg, "b");
    return rep;
}

json stats_to_json(const EnsembleStats& s) {
    json j;
    j["times"] = vector_to_json(s.times);
    j["mean_sq"] = vector_to_json(s.mean_sq);
    j["std_err"] = vector_to_json(s.std_err);
    j["paths"] = s.paths;
    j["truncated_paths"] = s.truncated_paths;
    j["freq_bus_ids"] = s.freq_bus_ids;
    j["freq_variance"] = vector_to_json(s.freq_variance);
    j["samples_per_path"] = s.samples_per_path;
    return j;
}

json histogram_to_json(const Histogram& h) {
    json j;
    j["edges"] = vector_to_json(h.edges);
    j["counts"] = vector_to_json(h.counts);
    j["density"] = vector_to_json(h.density);
    j["mean"] = h.mean;
    j["variance"] = h.variance;
    j["excess_kurtosis"] = h.excess_kurtosis;
    return j;
}

namespace {
json controller_to_json(const ControllerReport& r) {
    json j;
    j["name"] = r.name;
    j["freq_nadir_rad_s"] = r.freq_nadir;
    j["freq_zenith_rad_s"] = r.freq_zenith;
    j["freq_nadir_hz"] = 60.0 + r.freq_nadir / (2.0 * M_PI);
    j["freq_zenith_hz"] = 60.0 + r.freq_zenith / (2.0 * M_PI);
    j["mean_abs_effort"] = vector_to_json(r.mean_abs_effort);
    j["engaged_fraction"] = r.engaged_fraction;
    return j;
}
}  // namespace

json compare_to_json(const CompareReport& r) {
    json j;
    j["a"] = controller_to_json(r.a);
    j["b"] = controller_to_json(r.b);
    return j;
}

}  // namespace gridsyn::sde
