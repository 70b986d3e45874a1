#pragma once

#include "gridsyn/conic.hpp"
#include "gridsyn/stochastic.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gridsyn::mses {

// Mean-square exponential stability certificates for
//   dz = A z dt + sum_i sigma_i B_i C_i z dW_i.
//
// Primal condition:  A'P + PA + sum_i sigma_i^2 C_i'B_i' P B_i C_i < 0, P > 0.
// Dual condition:    AQ + QA' + sum_i sigma_i^2 B_i C_i Q C_i'B_i' < 0, Q > 0.
//
// The feasibility problem is solved as a margin maximization: the certificate
// is normalized to trace = n and the reported margin is the largest t with
// LMI(P) + t I <= 0. Feasible means margin exceeds the strictness shift.

enum class CertificateForm { Primal, Dual };

struct MsesCertificate {
    bool feasible = false;
    CertificateForm form = CertificateForm::Primal;
    Eigen::MatrixXd P;      // Lyapunov certificate (P for primal, Q for dual)
    double margin = 0.0;    // -lambda_max of the LMI residual at the certificate
    double strictness = 0.0;
    // decay-bound constants reported from certificate eigenvalue bounds:
    // E||z(t)||^2 <= decay_gamma1 * exp(-decay_gamma2 t) * ||z(0)||^2
    double decay_gamma1 = 0.0;
    double decay_gamma2 = 0.0;
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalFailure;
};

MsesCertificate verify_mses(const Eigen::MatrixXd& A,
                            const std::vector<stoch::Channel>& channels,
                            const Eigen::VectorXd& sigma, double tol = 1e-8);

MsesCertificate verify_mses_dual(const Eigen::MatrixXd& A,
                                 const std::vector<stoch::Channel>& channels,
                                 const Eigen::VectorXd& sigma, double tol = 1e-8);

// Largest t such that the system stays MSES at sigma = t * direction.
// Returns +infinity when no finite boundary exists (e.g. all channels inert).
double critical_sigma_search(const Eigen::MatrixXd& A,
                             const std::vector<stoch::Channel>& channels,
                             const Eigen::VectorXd& direction, double rel_tol = 1e-3);

// Solves A Q + Q A' + W = 0 (A Hurwitz, W symmetric) by Bartels-Stewart.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W);

// LMI residual evaluated at a given certificate (for independent re-checks).
Eigen::MatrixXd mses_residual(const Eigen::MatrixXd& A,
                              const std::vector<stoch::Channel>& channels,
                              const Eigen::VectorXd& sigma, const Eigen::MatrixXd& P,
                              CertificateForm form);

json certificate_to_json(const MsesCertificate& cert);

}  // namespace gridsyn::mses
