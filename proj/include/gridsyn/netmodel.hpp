#pragma once

#include "gridsyn/jsonio.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gridsyn::net {

// Network-preserving swing model. Generator-internal buses carry second-order
// swing states (omega, angle); load buses carry first-order frequency-dependent
// angle states. The reference bus angle is grounded: its angle state row and
// column are deleted and all remaining angles are measured against it.

enum class BusKind { GeneratorInternal, Load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double voltage = 1.0;  // magnitude, p.u.
};

struct Line {
    int from = 0;
    int to = 0;
    double admittance = 0.0;  // modulus Y_ij, p.u.
    double angle = 0.0;       // admittance angle theta_ij, rad
};

struct Generator {
    int bus = 0;
    double inertia = 0.0;     // M_i
    double damping = 0.0;     // D_i
    double mech_power = 0.0;  // P_g_i, p.u.
};

struct Load {
    int bus = 0;
    double freq_coeff = 0.0;      // D_i
    double demand = 0.0;          // P_d_i
    double controllable = 0.0;    // P_cd0_i
    double noncontrollable = 0.0; // P_ncd0_i
};

struct NetworkCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    int reference_bus = 0;
    // When set, generator buses contribute injection channels in addition to
    // the (non-reference) load buses.
    bool generator_channels = false;

    int bus_index(int id) const;  // -1 when absent
    const Generator* generator_at(int bus_id) const;
    const Load* load_at(int bus_id) const;

    // Injection channel bus ids: loads except the reference bus (case order),
    // then generators when generator_channels is set.
    std::vector<int> channel_buses() const;

    void validate() const;  // throws ValidationError naming the offending field
};

NetworkCase case_from_json(const json& j);
json case_to_json(const NetworkCase& c);
NetworkCase load_case(const std::string& path);

// Electrical power injected into the network at every bus (case bus order):
// P_e_i = sum_j E_i E_j Y_ij cos(delta_i - delta_j - theta_ij).
Eigen::VectorXd electrical_power(const NetworkCase& c, const Eigen::VectorXd& delta);
// d P_e / d delta, full bus dimension
Eigen::MatrixXd electrical_power_jacobian(const NetworkCase& c,
                                          const Eigen::VectorXd& delta);

// Nominal bus injections: P_g at generator buses, -(P_cd0 + P_ncd0) at loads.
Eigen::VectorXd nominal_injection(const NetworkCase& c);

struct EquilibriumPoint {
    Eigen::VectorXd x;           // reduced state (omegas, relative angles)
    double residual_norm = 0.0;  // inf-norm of the full power balance residual
};

struct EquilibriumOptions {
    double tol = 1e-10;
    int max_iter = 50;
};

// Newton on the grounded angle subsystem from a flat start. P_in0_bus is the
// per-bus injection vector (case bus order); see nominal_injection.
EquilibriumPoint solve_equilibrium(const NetworkCase& c,
                                   const Eigen::VectorXd& P_in0_bus,
                                   const EquilibriumOptions& opt = {});

struct MeasurementSelection {
    enum class Mode { FullState, Generators, Rows } mode = Mode::FullState;
    std::vector<int> rows;  // used by Mode::Rows

    static MeasurementSelection full() { return {}; }
    static MeasurementSelection generators() {
        return {Mode::Generators, {}};
    }
    static MeasurementSelection row_list(std::vector<int> r) {
        return {Mode::Rows, std::move(r)};
    }
};

struct LinearModel {
    Eigen::MatrixXd A0;  // n x n
    Eigen::MatrixXd B0;  // n x m, injection channels
    Eigen::MatrixXd C0;  // s x n
    std::vector<std::string> state_labels;
    std::vector<int> injection_buses;    // channel -> bus id
    std::vector<std::string> measurement_labels;
    // Injection map over all buses (case bus order); used for scenario events.
    Eigen::MatrixXd B_bus;
    std::vector<int> bus_ids;
    Eigen::VectorXd x_eq;  // linearization point (reduced state)

    int n() const { return static_cast<int>(A0.rows()); }
    int m() const { return static_cast<int>(B0.cols()); }
    int s() const { return static_cast<int>(C0.rows()); }
};

LinearModel linearize(const NetworkCase& c, const EquilibriumPoint& eq,
                      const MeasurementSelection& meas = {});

// Right-hand side of the grounded reduced nonlinear model (for oracles and
// nonlinear simulation): x = (omegas, relative angles), per-bus injections.
Eigen::VectorXd reduced_rhs(const NetworkCase& c, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& P_in0_bus);

struct AssumptionReport {
    bool hurwitz = false;
    double max_real_eig = 0.0;
    bool controllable = false;
    int controllability_rank = 0;
    bool observable = false;
    int observability_rank = 0;
    int rank_C0 = 0;
};

AssumptionReport check_assumptions(const LinearModel& model);

json model_to_json(const LinearModel& m);
json assumptions_to_json(const AssumptionReport& r);

}  // namespace gridsyn::net
