#include "gridsyn/stochastic.hpp"

#include "gridsyn/errors.hpp"

#include <cmath>

namespace gridsyn::stoch {

using Eigen::MatrixXd;
using Eigen::VectorXd;

UncertaintySpec UncertaintySpec::uniform(int m, double s) {
    UncertaintySpec u;
    u.sigma = VectorXd::Constant(m, s);
    return u;
}

UncertaintySpec UncertaintySpec::all_additive(int m, double s) {
    UncertaintySpec u = uniform(m, s);
    for (int i = 0; i < m; ++i) u.additive_channels.push_back(i);
    return u;
}

void UncertaintySpec::validate(int m) const {
    if (sigma.size() != m)
        throw ValidationError("uncertainty: sigma length does not match channel count");
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) < 0.0)
            throw ValidationError("uncertainty: sigma must be nonnegative (channel " +
                                  std::to_string(i) + ")");
    for (int ch : additive_channels)
        if (ch < 0 || ch >= m)
            throw ValidationError("uncertainty: additive channel index out of range");
}

bool is_hurwitz(const MatrixXd& A, double* max_real_part) {
    Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
    const double mr = es.eigenvalues().real().maxCoeff();
    if (max_real_part) *max_real_part = mr;
    return mr < 0.0;
}

ClosedLoopModel assemble_closed_loop(const net::LinearModel& model, const MatrixXd& K0,
                                     const UncertaintySpec& spec, const VectorXd& P_in0) {
    const int m = model.m();
    const int s = model.s();
    if (K0.rows() != m || K0.cols() != s)
        throw ValidationError("assemble_closed_loop: K0 must be " + std::to_string(m) +
                              "x" + std::to_string(s));
    if (P_in0.size() != m)
        throw ValidationError("assemble_closed_loop: P_in0 length mismatch");
    spec.validate(m);

    ClosedLoopModel cl;
    cl.C = K0 * model.C0;
    cl.A = model.A0 - model.B0 * cl.C;
    cl.B = model.B0;
    cl.K0 = K0;
    cl.P_in0 = P_in0;
    cl.spec = spec;
    cl.injection_buses = model.injection_buses;
    return cl;
}

ShiftedModel shift_coordinates(const ClosedLoopModel& cl) {
    double max_re = 0.0;
    if (!is_hurwitz(cl.A, &max_re))
        throw NumericalError("shift undefined: closed-loop A is not Hurwitz (max Re " +
                             std::to_string(max_re) + ")");
    Eigen::PartialPivLU<MatrixXd> lu(cl.A);
    const VectorXd rhs = cl.B * cl.P_in0;
    ShiftedModel sm;
    sm.base = cl;
    sm.z_offset = lu.solve(rhs);
    if (!sm.z_offset.allFinite())
        throw NumericalError("shift undefined: A numerically singular");
    sm.forcing_coeff = -cl.C * sm.z_offset;
    return sm;
}

std::vector<Channel> multiplicative_channels(const ClosedLoopModel& cl) {
    std::vector<Channel> out;
    for (int i = 0; i < cl.m(); ++i) {
        Channel ch;
        ch.B_col = cl.B.col(i);
        ch.C_row = cl.C.row(i);
        ch.sigma = cl.spec.sigma(i);
        ch.active = ch.sigma > 0.0 && ch.C_row.norm() > 0.0;
        out.push_back(std::move(ch));
    }
    return out;
}

json closed_loop_to_json(const ClosedLoopModel& cl) {
    json j;
    j["A"] = matrix_to_json(cl.A);
    j["B"] = matrix_to_json(cl.B);
    j["C"] = matrix_to_json(cl.C);
    j["K0"] = matrix_to_json(cl.K0);
    j["P_in0"] = vector_to_json(cl.P_in0);
    j["sigma"] = vector_to_json(cl.spec.sigma);
    j["additive_channels"] = cl.spec.additive_channels;
    j["injection_buses"] = cl.injection_buses;
    return j;
}

}  // namespace gridsyn::stoch
