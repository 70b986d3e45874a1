#pragma once

#include "gridsyn/jsonio.hpp"
#include "gridsyn/netmodel.hpp"
#include "gridsyn/stochastic.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridsyn::sde {

struct ScenarioEvent {
    double time = 0.0;
    int bus = 0;
    enum class Kind { GenerationStep, NoncontrollableLoadStep } kind = Kind::GenerationStep;
    double magnitude = 0.0;  // p.u., applied as a persistent step from `time`
};

struct SimConfig {
    double dt = 1e-3;
    double horizon = 10.0;
    int paths = 1;
    uint64_t seed = 0;
    double sigma_scale = 1.0;     // scales every channel sigma
    bool multiplicative = true;   // apply the sigma channels
    bool additive = false;        // apply additive noise on the spec's channels
    std::vector<ScenarioEvent> scenario;
    enum class Source { LinearClosedLoop, NonlinearSwing } source = Source::LinearClosedLoop;
    Eigen::VectorXd z0;           // initial deviation state; empty = zero
    int record_points = 401;      // recorded time samples (including t = 0)
    int freq_sample_points = 20;  // per-path sampling times for the histogram pool
    int threads = 1;              // chunk workers; results identical for any value

    void validate() const;
};

// Fully assembled simulation system (linear or nonlinear path).
struct SdeSystem {
    // linear part
    Eigen::MatrixXd A;
    Eigen::VectorXd forcing;  // constant drift offset
    struct MulChannel {
        Eigen::VectorXd B;
        Eigen::RowVectorXd C;
        double sigma = 0.0;
        double offset = 0.0;  // dz += sigma (C z + offset) B dW
    };
    std::vector<MulChannel> channels;
    Eigen::MatrixXd B_add;  // additive noise columns
    struct Event {
        double time = 0.0;
        Eigen::VectorXd direction;  // state-space drift direction (linear path)
        double magnitude = 0.0;
        int bus_index = -1;         // bus-space injection (nonlinear path)
        double injection = 0.0;
    };
    std::vector<Event> events;
    // frequency readout rows: omega states read directly, load buses through
    // the drift of their angle state
    struct FreqRow {
        int bus = 0;
        bool direct = false;  // true: state value, false: drift row
        int row = 0;
    };
    std::vector<FreqRow> freq_rows;
    // gain row map for control-effort reporting: dP_cd = C z
    Eigen::MatrixXd effort_rows;

    // nonlinear path data (empty when unused)
    std::optional<net::NetworkCase> nonlinear_case;
    Eigen::VectorXd x_eq;              // equilibrium state for deviations
    Eigen::VectorXd P_bus_nominal;     // per-bus nominal injections
    std::vector<int> channel_bus_idx;  // channel -> bus index (nonlinear path)

    int n() const { return static_cast<int>(A.rows()); }
};

// Eq.(10): pure multiplicative z-tilde system (MSES validation).
SdeSystem make_mses_system(const stoch::ShiftedModel& sm);
// Eq.(7): closed loop with constant forcing, additive noise and events.
// Deviations are measured from the deterministic equilibrium -A^{-1}B P_in0,
// which makes the multiplicative noise pick up the offset term of Eq.(8).
SdeSystem make_scenario_system(const stoch::ShiftedModel& sm, const net::LinearModel& model,
                               const net::NetworkCase& c,
                               const std::vector<ScenarioEvent>& events);
// Nonlinear swing dynamics with output feedback applied at the load channels.
SdeSystem make_nonlinear_system(const net::NetworkCase& c, const net::LinearModel& model,
                                const stoch::ClosedLoopModel& cl,
                                const std::vector<ScenarioEvent>& events);

struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd states;  // n x (#times)
    bool truncated = false;
    int truncated_step = -1;
};

Trajectory simulate_path(const SdeSystem& sys, const SimConfig& cfg, int path_index);

struct EnsembleStats {
    Eigen::VectorXd times;
    Eigen::VectorXd mean_sq;       // E ||z||^2 per recorded time
    Eigen::VectorXd std_err;       // sample std / sqrt(paths)
    std::vector<int> freq_bus_ids;
    Eigen::VectorXd freq_variance;  // per bus over the stationary window
    Eigen::MatrixXd mean_freq;      // bus x recorded time, ensemble mean (rad/s)
    Eigen::VectorXd mean_abs_effort;  // per channel, time/path average |dP_cd|
    std::vector<double> freq_samples;  // pooled over window x buses x paths
    int samples_per_path = 0;
    int paths = 0;
    int truncated_paths = 0;
};

EnsembleStats simulate_ensemble(const SdeSystem& sys, const SimConfig& cfg);

struct Histogram {
    Eigen::VectorXd edges;   // bins+1
    Eigen::VectorXd counts;  // bins
    Eigen::VectorXd density;
    double excess_kurtosis = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

Histogram frequency_distribution(const EnsembleStats& stats, int bins);

struct ControllerReport {
    std::string name;
    double freq_nadir = 0.0;   // min over time/buses of mean frequency deviation (rad/s)
    double freq_zenith = 0.0;  // max
    Eigen::VectorXd mean_abs_effort;  // per channel average |dP_cd|
    double engaged_fraction = 0.0;    // |row_support| / m
    EnsembleStats stats;
};

struct CompareReport {
    ControllerReport a, b;
};

// Runs both closed loops under common random numbers (identical streams).
CompareReport compare_controllers(const net::LinearModel& model, const net::NetworkCase& c,
                                  const Eigen::MatrixXd& K_a, const Eigen::MatrixXd& K_b,
                                  const stoch::UncertaintySpec& spec,
                                  const Eigen::VectorXd& P_in0, const SimConfig& cfg);

json stats_to_json(const EnsembleStats& s);
json histogram_to_json(const Histogram& h);
json compare_to_json(const CompareReport& r);

}  // namespace gridsyn::sde
