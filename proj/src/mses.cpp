#include "gridsyn/mses.hpp"

#include "gridsyn/errors.hpp"
#include "gridsyn/lmi.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace gridsyn::mses {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MsesCertificate verify_impl(const MatrixXd& A, const std::vector<stoch::Channel>& channels,
                            const VectorXd& sigma, double tol, CertificateForm form) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) throw ValidationError("verify_mses: A must be square");
    if (static_cast<int>(channels.size()) != sigma.size())
        throw ValidationError("verify_mses: sigma length does not match channels");
    for (const auto& ch : channels)
        if (ch.B_col.size() != n || ch.C_row.size() != n)
            throw ValidationError("verify_mses: channel dimension mismatch");

    // Analytic preclusion for extreme channel couplings: testing the LMI
    // against v = B_hat_i bounds the attainable margin by
    // n |A|_2^2 / (kappa_i (c_i' b_i)^2) with kappa_i = sigma_i^2 |B|^2 |C|^2.
    // When the bound sits below the strictness shift there is no point in
    // (and little numerical hope of) solving the SDP.
    {
        const double a2 = A.jacobiSvd().singularValues()(0);
        const double eps_strict = 1e-8 * A.norm();
        for (size_t i = 0; i < channels.size(); ++i) {
            const double sg = sigma(static_cast<Eigen::Index>(i));
            const double bn = channels[i].B_col.norm();
            const double cn = channels[i].C_row.norm();
            if (sg == 0.0 || bn == 0.0 || cn == 0.0) continue;
            const double kappa = sg * sg * bn * bn * cn * cn;
            const double align =
                std::abs((channels[i].C_row * channels[i].B_col).value()) / (bn * cn);
            if (align == 0.0) continue;
            const double bound = n * a2 * a2 / (kappa * align * align);
            if (bound < 0.5 * eps_strict) {
                MsesCertificate cert;
                cert.form = form;
                cert.feasible = false;
                cert.margin = bound;
                cert.strictness = eps_strict;
                cert.P = Eigen::MatrixXd::Zero(n, n);
                cert.solver_status = conic::SolveStatus::Optimal;
                return cert;
            }
        }
    }

    // Margin maximization: max t  s.t.  -LMI(P) - t I >= 0, P >= 0, tr(P) = n.
    // Channel quadratic terms enter through scalar slacks:
    //   primal: u_i = B_i' P B_i, term sigma_i^2 u_i C_i'C_i
    //   dual:   u_i = C_i Q C_i', term sigma_i^2 u_i B_i B_i'
    conic::ProgramBuilder pb;
    const conic::SymVar P = pb.add_symmetric(n);
    const int t = pb.add_scalar();
    pb.set_objective_term(t, -1.0);

    const MatrixXd& Adir = (form == CertificateForm::Primal) ? MatrixXd(A.transpose()) : A;

    conic::AffineMatrix lmi(n);
    lmi.add_lyapunov(Adir, P, -1.0);
    lmi.add_scalar_diag(t, -1.0);

    for (size_t i = 0; i < channels.size(); ++i) {
        const double sg = sigma(static_cast<Eigen::Index>(i));
        VectorXd quad_vec = (form == CertificateForm::Primal)
                                ? VectorXd(channels[i].B_col)
                                : VectorXd(channels[i].C_row.transpose());
        VectorXd outer_vec = (form == CertificateForm::Primal)
                                 ? VectorXd(channels[i].C_row.transpose())
                                 : VectorXd(channels[i].B_col);
        // channel coupling kappa = sigma^2 |B|^2 |C|^2 lives in one equality
        // row; the LMI itself only sees unit-scale vectors
        const double kappa = sg * sg * quad_vec.squaredNorm() * outer_vec.squaredNorm();
        if (kappa == 0.0) continue;
        quad_vec.normalize();
        outer_vec.normalize();
        const int u = pb.add_scalar();
        // equality u = kappa * quad_vec' P quad_vec
        conic::LinExpr eq = conic::LinExpr::var(u, -1.0);
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                const double coef =
                    kappa * (a == b ? 1.0 : 2.0) * quad_vec(a) * quad_vec(b);
                if (coef != 0.0) eq.add(P.at(a, b), coef);
            }
        pb.add_equality(eq);
        // -u * outer outer'
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                const double coef = -outer_vec(a) * outer_vec(b);
                if (coef != 0.0) lmi.add_scalar_at(a, b, u, coef);
            }
    }
    pb.add_psd(lmi);

    conic::AffineMatrix ppos(n);
    ppos.add_sym(P, 1.0);
    pb.add_psd(ppos);

    conic::LinExpr trace_eq = conic::LinExpr::of(-static_cast<double>(n));
    for (int a = 0; a < n; ++a) trace_eq.add(P.at(a, a), 1.0);
    pb.add_equality(trace_eq);

    // deterministic tolerance ladder: the margin problem sits on a degenerate
    // face on the infeasible side, where the last digit of feasibility
    // tolerance may be out of reach
    const conic::ConicProgram prog = pb.build();
    conic::ConicSolution sol;
    for (double t_solve : {tol, 10 * tol, 100 * tol}) {
        conic::SolverOptions sopt;
        sopt.tol = t_solve;
        sopt.verbose = std::getenv("GRIDSYN_MSES_VERBOSE") != nullptr;
        sol = conic::solve(prog, sopt);
        if (sol.status == conic::SolveStatus::Optimal) break;
    }
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverError("verify_mses: solver failure (" + conic::to_string(sol.status) + ")");

    MsesCertificate cert;
    cert.form = form;
    cert.solver_status = sol.status;
    cert.strictness = 1e-8 * A.norm();
    cert.P.resize(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            cert.P(a, b) = sol.x(P.at(a, b));
            cert.P(b, a) = cert.P(a, b);
        }
    cert.margin = sol.x(t);
    cert.feasible = cert.margin > cert.strictness;
    if (cert.feasible) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(cert.P, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        const double lmax = es.eigenvalues().maxCoeff();
        if (lmin > 0) {
            if (form == CertificateForm::Primal) {
                cert.decay_gamma1 = lmax / lmin;
                cert.decay_gamma2 = cert.margin / lmax;
            } else {
                cert.decay_gamma1 = lmax / lmin;
                cert.decay_gamma2 = cert.margin * lmin / (lmax * lmax);
            }
        }
    }
    return cert;
}

}  // namespace

MsesCertificate verify_mses(const MatrixXd& A, const std::vector<stoch::Channel>& channels,
                            const VectorXd& sigma, double tol) {
    return verify_impl(A, channels, sigma, tol, CertificateForm::Primal);
}

MsesCertificate verify_mses_dual(const MatrixXd& A,
                                 const std::vector<stoch::Channel>& channels,
                                 const VectorXd& sigma, double tol) {
    return verify_impl(A, channels, sigma, tol, CertificateForm::Dual);
}

MatrixXd mses_residual(const MatrixXd& A, const std::vector<stoch::Channel>& channels,
                       const VectorXd& sigma, const MatrixXd& P, CertificateForm form) {
    MatrixXd R;
    if (form == CertificateForm::Primal) {
        R = A.transpose() * P + P * A;
        for (size_t i = 0; i < channels.size(); ++i) {
            const double s2 = sigma(static_cast<Eigen::Index>(i)) *
                              sigma(static_cast<Eigen::Index>(i));
            if (s2 == 0.0) continue;
            const double quad = channels[i].B_col.dot(P * channels[i].B_col);
            R += s2 * quad * channels[i].C_row.transpose() * channels[i].C_row;
        }
    } else {
        R = A * P + P * A.transpose();
        for (size_t i = 0; i < channels.size(); ++i) {
            const double s2 = sigma(static_cast<Eigen::Index>(i)) *
                              sigma(static_cast<Eigen::Index>(i));
            if (s2 == 0.0) continue;
            const double quad = channels[i].C_row * P * channels[i].C_row.transpose();
            R += s2 * quad * channels[i].B_col * channels[i].B_col.transpose();
        }
    }
    return R;
}

double critical_sigma_search(const MatrixXd& A, const std::vector<stoch::Channel>& channels,
                             const VectorXd& direction, double rel_tol) {
    if (direction.size() != static_cast<Eigen::Index>(channels.size()))
        throw ValidationError("critical_sigma_search: direction length mismatch");
    if (direction.minCoeff() < 0.0 || direction.maxCoeff() <= 0.0)
        throw ValidationError("critical_sigma_search: direction must be nonnegative, nonzero");
    double max_re = 0.0;
    if (!stoch::is_hurwitz(A, &max_re))
        throw NumericalError("critical_sigma_search: A is not Hurwitz (max Re " +
                             std::to_string(max_re) + ")");

    bool any_active = false;
    for (size_t i = 0; i < channels.size(); ++i)
        if (direction(static_cast<Eigen::Index>(i)) > 0.0 &&
            channels[i].B_col.norm() > 0.0 && channels[i].C_row.norm() > 0.0)
            any_active = true;
    if (!any_active) return kInf;  // no coupling: MSES at any level

    auto feasible_at = [&](double t) {
        return verify_mses(A, channels, VectorXd(t * direction)).feasible;
    };

    const double cap = 1e10;
    double lo = 0.0, hi = 1.0;
    if (feasible_at(hi)) {
        while (hi < cap) {
            lo = hi;
            hi *= 2.0;
            if (!feasible_at(hi)) break;
        }
        if (hi >= cap) return kInf;
    } else {
        while (hi > 1e-12) {
            hi /= 2.0;
            if (feasible_at(hi)) {
                lo = hi;
                hi *= 2.0;
                break;
            }
        }
        if (lo == 0.0)
            throw NumericalError("critical_sigma_search: no feasible bracket found");
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (feasible_at(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& W) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || W.rows() != n || W.cols() != n)
        throw ValidationError("solve_lyapunov: dimension mismatch");
    const double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, W.cwiseAbs().maxCoeff()))
        throw ValidationError("solve_lyapunov: W is not symmetric");

    // Bartels-Stewart with a complex Schur form: A = U T U*, solve
    // T Y + Y T* = -U* W U column by column (back substitution).
    Eigen::ComplexSchur<MatrixXd> schur(A);
    if (schur.info() != Eigen::Success)
        throw NumericalError("solve_lyapunov: Schur decomposition failed");
    const Eigen::MatrixXcd T = schur.matrixT();
    const Eigen::MatrixXcd U = schur.matrixU();
    const Eigen::MatrixXcd C = U.adjoint() * W * U;

    const double diag_scale = T.diagonal().cwiseAbs().maxCoeff();
    Eigen::MatrixXcd Y(n, n);
    for (int k = n - 1; k >= 0; --k) {
        Eigen::VectorXcd rhs = -C.col(k);
        for (int j = k + 1; j < n; ++j) rhs -= std::conj(T(k, j)) * Y.col(j);
        Eigen::MatrixXcd Tk = T;
        Tk.diagonal().array() += std::conj(T(k, k));
        for (int i = 0; i < n; ++i)
            if (std::abs(Tk(i, i)) < 1e-12 * std::max(1.0, diag_scale))
                throw NumericalError(
                    "solve_lyapunov: eigenvalue pair sums to ~0 (ill-posed)");
        Y.col(k) = Tk.triangularView<Eigen::Upper>().solve(rhs);
    }
    MatrixXd Q = (U * Y * U.adjoint()).real();
    Q = 0.5 * (Q + Q.transpose());

    const double res = (A * Q + Q * A.transpose() + W).norm();
    if (res > 1e-8 * std::max(1.0, W.norm() + A.norm() * Q.norm()))
        throw NumericalError("solve_lyapunov: residual " + std::to_string(res) +
                             " too large (A may not be Hurwitz)");
    return Q;
}

json certificate_to_json(const MsesCertificate& cert) {
    json j;
    j["feasible"] = cert.feasible;
    j["form"] = cert.form == CertificateForm::Primal ? "primal" : "dual";
    j["margin"] = cert.margin;
    j["strictness"] = cert.strictness;
    j["decay_bounds"] = json{{"gamma1", cert.decay_gamma1}, {"gamma2", cert.decay_gamma2}};
    j["certificate"] = matrix_to_json(cert.P);
    return j;
}

}  // namespace gridsyn::mses
