#pragma once

#include "gridsyn/jsonio.hpp"
#include "gridsyn/netmodel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gridsyn::stoch {

// Closed-loop stochastic system assembly: output feedback with multiplicative
// gain uncertainty per injection channel and optional additive load noise.

struct UncertaintySpec {
    Eigen::VectorXd sigma;              // per-channel multiplicative std dev
    std::vector<int> additive_channels; // channel indices carrying additive noise

    static UncertaintySpec uniform(int m, double s);
    // additive on all channels
    static UncertaintySpec all_additive(int m, double s);
    void validate(int m) const;
};

struct ClosedLoopModel {
    Eigen::MatrixXd A;   // A0 - B0 K0 C0
    Eigen::MatrixXd B;   // = B0
    Eigen::MatrixXd C;   // = K0 C0
    Eigen::MatrixXd K0;  // m x s
    Eigen::VectorXd P_in0;
    UncertaintySpec spec;
    std::vector<int> injection_buses;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
};

struct ShiftedModel {
    ClosedLoopModel base;
    Eigen::VectorXd z_offset;       // A^{-1} B P_in0
    Eigen::VectorXd forcing_coeff;  // per channel: -C_i A^{-1} B P_in0
};

// Rank-one multiplicative channel (column of B, row of C).
struct Channel {
    Eigen::VectorXd B_col;
    Eigen::RowVectorXd C_row;
    double sigma = 0.0;
    bool active = false;  // sigma > 0 and C_row nonzero
};

ClosedLoopModel assemble_closed_loop(const net::LinearModel& model,
                                     const Eigen::MatrixXd& K0,
                                     const UncertaintySpec& spec,
                                     const Eigen::VectorXd& P_in0);

// Requires A Hurwitz; throws NumericalError("shift undefined") otherwise.
ShiftedModel shift_coordinates(const ClosedLoopModel& cl);

std::vector<Channel> multiplicative_channels(const ClosedLoopModel& cl);

bool is_hurwitz(const Eigen::MatrixXd& A, double* max_real_part = nullptr);

json closed_loop_to_json(const ClosedLoopModel& cl);

}  // namespace gridsyn::stoch
