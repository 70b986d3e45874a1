#pragma once

#include "gridsyn/jsonio.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gridsyn::conic {

// Standard-form cone program
//
//   minimize    c'x
//   subject to  A x = b          (equalities)
//               G x + s = h,     s in K
//
// where K is an ordered product of nonnegative, second-order, and PSD
// cones. The cone list partitions the slack vector s. PSD blocks are
// stored in packed symmetric (svec) form with off-diagonal entries
// scaled by sqrt(2), so inner products of packed vectors are Euclidean.

enum class ConeKind { Nonneg, Soc, Psd };

struct ConeBlock {
    ConeKind kind;
    int size;  // vector length for Nonneg/Soc; matrix side for Psd

    int dim() const { return kind == ConeKind::Psd ? size * (size + 1) / 2 : size; }
};

// svec packing order: for j = 0..p-1, i = 0..j (upper triangle by columns).
inline int svec_dim(int side) { return side * (side + 1) / 2; }
Eigen::VectorXd svec(const Eigen::MatrixXd& S);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side);

struct Triplet {
    int row;
    int col;
    double value;
};

struct ConicProgram {
    Eigen::VectorXd c;
    std::vector<Triplet> eq;   // A, row-sorted not required
    Eigen::VectorXd b;         // equality rhs; b.size() = number of equality rows
    std::vector<Triplet> ineq; // G
    Eigen::VectorXd h;
    std::vector<ConeBlock> cones;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_eq() const { return static_cast<int>(b.size()); }
    int cone_dim() const;

    // Structural checks: cone dims partition h, triplet indices in range.
    void validate() const;

    json to_json() const;
    static ConicProgram from_json(const json& j);
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

std::string to_string(SolveStatus s);

struct ConicSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x;  // primal variables
    Eigen::VectorXd y;  // equality duals
    Eigen::VectorXd z;  // cone duals
    Eigen::VectorXd s;  // cone slacks
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 100;
    bool verbose = false;
    // fraction-to-boundary step scaling
    double step_scale = 0.99;
    // Ruiz equilibration sweeps (0 disables)
    int equilibrate_sweeps = 4;
};

ConicSolution solve(const ConicProgram& prog, const SolverOptions& opt = {});
ConicSolution solve(const ConicProgram& prog, double tol, int max_iter);

}  // namespace gridsyn::conic
