#pragma once

#include "gridsyn/conic.hpp"
#include "gridsyn/netmodel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gridsyn::synth {

enum class RowNorm { L1, L2, LInf };

struct SynthesisWeights {
    double w1 = 1.0;  // on gamma1 (certificate conditioning)
    double w2 = 1.0;  // on gamma2 (transient performance)
    double w3 = 1.0;  // on sum beta_i (uncertainty budget)
    double w4 = 1.0;  // on the row-sparsity penalty; 0 disables it
    RowNorm p = RowNorm::L1;

    void validate() const;
};

struct SynthesisResult {
    Eigen::MatrixXd Q_star;      // n x n positive definite
    Eigen::MatrixXd M_star;      // m x n (equals K0 C0 Q* on the two-stage path)
    Eigen::MatrixXd K0;          // m x s
    double gamma1_star = 0.0;
    double gamma2_star = 0.0;
    Eigen::VectorXd beta_star;   // m (full-state path; empty on two-stage)
    Eigen::VectorXd sigma_star;  // m; +inf sentinel on channels without feedback
    double objective = 0.0;
    double strictness_eps = 0.0;
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalFailure;
    bool two_stage = false;
};

// Full-state synthesis (requires rank(C0) = n). w4 = 0 gives the plain
// multi-objective problem, w4 > 0 adds the l_{1,p} row-sparsity penalty.
SynthesisResult synthesize_full_state(const net::LinearModel& model,
                                      const SynthesisWeights& weights);

// K0 = M* (Q*)^{-1} (C0'C0)^{-1} C0'; requires rank(C0) = n.
Eigen::MatrixXd recover_gain_full_rank(const Eigen::MatrixXd& M_star,
                                       const Eigen::MatrixXd& Q_star,
                                       const Eigen::MatrixXd& C0);

// Stage 1 of the partial-measurement path: the sparsity problem with the
// added open-loop constraint A0 Q + Q A0' < 0; returns Q* only.
Eigen::MatrixXd stage1_precompute(const net::LinearModel& model,
                                  const SynthesisWeights& weights);

// Stage 2: fixed Q* gain synthesis over K with the closed-loop performance
// LMI; works for any measurement rank.
SynthesisResult stage2_gain(const net::LinearModel& model, const Eigen::MatrixXd& Q_star,
                            const SynthesisWeights& weights);

struct ParetoPoint {
    double w3 = 0.0;
    Eigen::VectorXd gain_norms;  // ||K0_i||_2 per channel
    Eigen::VectorXd sigma_star;
    double gamma2_star = 0.0;
    bool converged = false;
    std::string error;
};

std::vector<ParetoPoint> pareto_sweep(const net::LinearModel& model,
                                      const SynthesisWeights& weights,
                                      const std::vector<double>& w3_grid);

// Rows with ||K0_i||_2 > rel_tol * max_j ||K0_j||_2. rel_tol in (0,1).
std::vector<int> row_support(const Eigen::MatrixXd& K0, double rel_tol = 1e-6);

// Continuous-time LQR via Newton-Kleinman iteration seeded at zero gain
// (A0 must be Hurwitz); returns K = R^{-1} B0' P.
Eigen::MatrixXd design_lqr(const net::LinearModel& model,
                           const Eigen::MatrixXd& state_weight,
                           const Eigen::MatrixXd& input_weight);

// Symmetric PSD square root by eigendecomposition.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& S);

json result_to_json(const SynthesisResult& r, const std::vector<int>& injection_buses);

}  // namespace gridsyn::synth
