#include "gridsyn/synth.hpp"

#include "gridsyn/errors.hpp"
#include "gridsyn/lmi.hpp"
#include "gridsyn/mses.hpp"
#include "gridsyn/stochastic.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>

namespace gridsyn::synth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// tolerance ladder shared by the synthesis solves
conic::ConicSolution solve_with_retry(const conic::ConicProgram& prog) {
    conic::ConicSolution sol;
    for (double tol : {1e-8, 1e-7, 1e-6}) {
        conic::SolverOptions opt;
        opt.tol = tol;
        opt.max_iter = 200;
        opt.verbose = std::getenv("GRIDSYN_SYNTH_VERBOSE") != nullptr;
        sol = conic::solve(prog, opt);
        if (sol.status != conic::SolveStatus::NumericalFailure) break;
    }
    return sol;
}
}

void SynthesisWeights::validate() const {
    if (!(w1 > 0) || !(w2 > 0) || !(w3 > 0))
        throw ValidationError("weights: w1, w2, w3 must be positive");
    if (w4 < 0) throw ValidationError("weights: w4 must be nonnegative");
}

MatrixXd symmetric_sqrt(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric_sqrt: eigendecomposition failed");
    VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

namespace {

struct SymRead {
    const conic::SymVar var;
    MatrixXd operator()(const VectorXd& x) const {
        MatrixXd M(var.side, var.side);
        for (int a = 0; a < var.side; ++a)
            for (int b = a; b < var.side; ++b) {
                M(a, b) = x(var.at(a, b));
                M(b, a) = M(a, b);
            }
        return M;
    }
};

// Adds the l_{1,p} row-sparsity penalty on an affine row family:
// entry(i, j) is the LinExpr for row i, column j of the penalized matrix.
void add_row_norm_penalty(conic::ProgramBuilder& pb, double weight, RowNorm p, int rows,
                          int cols,
                          const std::function<conic::LinExpr(int, int)>& entry) {
    if (weight <= 0.0) return;
    switch (p) {
        case RowNorm::L1:
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) {
                    const int t = pb.add_scalar();
                    pb.set_objective_term(t, weight);
                    conic::LinExpr e = entry(i, j);
                    conic::LinExpr plus = conic::LinExpr::var(t), minus = conic::LinExpr::var(t);
                    plus.constant = e.constant;
                    minus.constant = -e.constant;
                    for (const auto& [v, c] : e.terms) {
                        plus.add(v, c);
                        minus.add(v, -c);
                    }
                    pb.add_nonneg(plus);   // t + e >= 0
                    pb.add_nonneg(minus);  // t - e >= 0
                }
            break;
        case RowNorm::L2:
            for (int i = 0; i < rows; ++i) {
                const int t = pb.add_scalar();
                pb.set_objective_term(t, weight);
                std::vector<conic::LinExpr> tail;
                for (int j = 0; j < cols; ++j) tail.push_back(entry(i, j));
                pb.add_soc(conic::LinExpr::var(t), tail);
            }
            break;
        case RowNorm::LInf:
            for (int i = 0; i < rows; ++i) {
                const int t = pb.add_scalar();
                pb.set_objective_term(t, weight);
                for (int j = 0; j < cols; ++j) {
                    conic::LinExpr e = entry(i, j);
                    conic::LinExpr plus = conic::LinExpr::var(t), minus = conic::LinExpr::var(t);
                    plus.constant = e.constant;
                    minus.constant = -e.constant;
                    for (const auto& [v, c] : e.terms) {
                        plus.add(v, c);
                        minus.add(v, -c);
                    }
                    pb.add_nonneg(plus);
                    pb.add_nonneg(minus);
                }
            }
            break;
    }
}

// Shared assembly for the full-state problem (14)/(20) and stage 1 (21).
SynthesisResult solve_full_state(const net::LinearModel& model,
                                 const SynthesisWeights& weights, bool stage1_constraint) {
    weights.validate();
    const int n = model.n();
    const int m = model.m();
    const MatrixXd& A0 = model.A0;
    const MatrixXd& B0 = model.B0;
    const double eps = 1e-8 * A0.norm();

    conic::ProgramBuilder pb;
    const conic::SymVar Q = pb.add_symmetric(n);
    const conic::MatVar M = pb.add_matrix(m, n);
    const int g1 = pb.add_scalar();
    const int g2 = pb.add_scalar();
    std::vector<int> beta(m);
    for (int i = 0; i < m; ++i) beta[i] = pb.add_scalar();

    pb.set_objective_term(g1, -weights.w1);
    pb.set_objective_term(g2, -weights.w2);
    for (int i = 0; i < m; ++i) pb.set_objective_term(beta[i], weights.w3);
    pb.add_nonneg(conic::LinExpr::var(g1));
    pb.add_nonneg(conic::LinExpr::var(g2));

    // I - Q >= 0
    conic::AffineMatrix upper(n);
    upper.add_constant_diag(1.0);
    upper.add_sym(Q, -1.0);
    pb.add_psd(upper);
    // Q - gamma1 I - eps I >= 0
    conic::AffineMatrix lower(n);
    lower.add_sym(Q, 1.0);
    lower.add_scalar_diag(g1, -1.0);
    lower.add_constant_diag(-eps);
    pb.add_psd(lower);
    // per-channel blocks [[beta_i, M_i],[M_i', Q]] - eps I >= 0
    for (int i = 0; i < m; ++i) {
        conic::AffineMatrix blockm(n + 1);
        blockm.add_scalar_at(0, 0, beta[i], 1.0);
        for (int j = 0; j < n; ++j) blockm.add_entry(0, 1 + j, M.at(i, j), 1.0);
        blockm.add_sym(Q, 1.0, 1);
        blockm.add_constant_diag(-eps);
        pb.add_psd(blockm);
    }
    // performance LMI: -(A0 Q + Q A0') + B0 M + M'B0' - B0 B0' - gamma2 I - eps I >= 0
    conic::AffineMatrix perf(n);
    perf.add_lyapunov(A0, Q, -1.0);
    perf.add_input_product(B0, M, 1.0);
    perf.add_constant(MatrixXd(-B0 * B0.transpose()));
    perf.add_scalar_diag(g2, -1.0);
    perf.add_constant_diag(-eps);
    pb.add_psd(perf);
    // stage-1 extra open-loop constraint: -(A0 Q + Q A0') - eps I >= 0
    if (stage1_constraint) {
        conic::AffineMatrix open_loop(n);
        open_loop.add_lyapunov(A0, Q, -1.0);
        open_loop.add_constant_diag(-eps);
        pb.add_psd(open_loop);
    }
    add_row_norm_penalty(pb, weights.w4, weights.p, m, n, [&](int i, int j) {
        return conic::LinExpr::var(M.at(i, j));
    });

    const conic::ConicSolution sol = solve_with_retry(pb.build());
    if (sol.status == conic::SolveStatus::Infeasible ||
        sol.status == conic::SolveStatus::Unbounded)
        throw SolverError(
            "synthesize_full_state: problem reported " + conic::to_string(sol.status) +
            " for a Hurwitz plant (internal inconsistency)");
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverError("synthesize_full_state: solver failure");

    SynthesisResult res;
    res.solver_status = sol.status;
    res.strictness_eps = eps;
    res.objective = sol.primal_objective;
    res.Q_star = SymRead{Q}(sol.x);
    res.M_star.resize(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) res.M_star(i, j) = sol.x(M.at(i, j));
    res.gamma1_star = sol.x(g1);
    res.gamma2_star = sol.x(g2);
    res.beta_star.resize(m);
    for (int i = 0; i < m; ++i) res.beta_star(i) = sol.x(beta[i]);
    // critical uncertainties (18): sigma_i = 1/sqrt(beta_i); channels whose M
    // row vanished carry no feedback and admit unbounded uncertainty
    res.sigma_star.resize(m);
    const double mnorm = res.M_star.norm();
    for (int i = 0; i < m; ++i) {
        const double row = res.M_star.row(i).norm();
        res.sigma_star(i) =
            (row <= 1e-9 * std::max(1.0, mnorm)) ? kInf : 1.0 / std::sqrt(res.beta_star(i));
    }
    return res;
}

int numerical_rank(const MatrixXd& M) {
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double thresh =
        std::max(M.rows(), M.cols()) * std::numeric_limits<double>::epsilon() * sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++r;
    return r;
}

}  // namespace

SynthesisResult synthesize_full_state(const net::LinearModel& model,
                                      const SynthesisWeights& weights) {
    const net::AssumptionReport rep = net::check_assumptions(model);
    if (!rep.hurwitz)
        throw ValidationError("synthesize_full_state: A0 is not Hurwitz (max Re " +
                              std::to_string(rep.max_real_eig) + ")");
    if (rep.rank_C0 != model.n())
        throw ValidationError(
            "synthesize_full_state: rank(C0) < n; use the two-stage path");
    SynthesisResult res = solve_full_state(model, weights, /*stage1_constraint=*/false);
    res.K0 = recover_gain_full_rank(res.M_star, res.Q_star, model.C0);
    return res;
}

MatrixXd recover_gain_full_rank(const MatrixXd& M_star, const MatrixXd& Q_star,
                                const MatrixXd& C0) {
    const int n = static_cast<int>(Q_star.rows());
    if (numerical_rank(C0) != n)
        throw ValidationError("recover_gain_full_rank: rank(C0) < n; route to two-stage");
    const MatrixXd CtC = C0.transpose() * C0;
    Eigen::JacobiSVD<MatrixXd> svd(CtC);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12)
        throw NumericalError("recover_gain_full_rank: C0'C0 is ill-conditioned");
    const MatrixXd MQ = M_star * Q_star.llt().solve(MatrixXd::Identity(n, n));
    const MatrixXd K0 = MQ * CtC.ldlt().solve(C0.transpose());
    const double ref = MQ.norm();
    if (ref > 0.0 && (K0 * C0 - MQ).norm() > 1e-8 * ref)
        throw NumericalError("recover_gain_full_rank: K0 C0 does not reproduce M Q^{-1}");
    return K0;
}

MatrixXd stage1_precompute(const net::LinearModel& model, const SynthesisWeights& weights) {
    double max_re = 0.0;
    if (!stoch::is_hurwitz(model.A0, &max_re))
        throw ValidationError("stage1_precompute: A0 is not Hurwitz (max Re " +
                              std::to_string(max_re) + ")");
    return solve_full_state(model, weights, /*stage1_constraint=*/true).Q_star;
}

SynthesisResult stage2_gain(const net::LinearModel& model, const MatrixXd& Q_star,
                            const SynthesisWeights& weights) {
    weights.validate();
    const int n = model.n();
    const int m = model.m();
    const int s = model.s();
    if (Q_star.rows() != n || Q_star.cols() != n)
        throw ValidationError("stage2_gain: Q* dimension mismatch");
    const MatrixXd& A0 = model.A0;
    const MatrixXd& B0 = model.B0;
    const MatrixXd& C0 = model.C0;
    const double eps = 1e-8 * A0.norm();
    const MatrixXd sqrtQ = symmetric_sqrt(Q_star);
    const MatrixXd CQh = C0 * sqrtQ;   // s x n
    const MatrixXd CQ = C0 * Q_star;   // s x n

    conic::ProgramBuilder pb;
    const conic::MatVar K = pb.add_matrix(m, s);
    const int g2 = pb.add_scalar();  // free: the open-loop slack need not cover
                                     // sum B_i B_i' at a nonnegative gamma2
    pb.set_objective_term(g2, -weights.w2);

    // performance LMI (22):
    //  -(A0 Q* + Q* A0') + B0 K C0 Q* + (B0 K C0 Q*)' - sum B_i B_i' - g2 I - eps I >= 0
    conic::AffineMatrix perf(n);
    perf.add_constant(MatrixXd(-(A0 * Q_star + Q_star * A0.transpose()) -
                               B0 * B0.transpose()));
    perf.add_scalar_diag(g2, -1.0);
    perf.add_constant_diag(-eps);
    // coefficient of K_rc: (B0 col r)(row c of C0 Q*) + transpose
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < s; ++c) {
            const int var = K.at(r, c);
            for (int i = 0; i < n; ++i) {
                const double bi = B0(i, r);
                if (bi == 0.0) continue;
                for (int j = 0; j < n; ++j) {
                    const double v = bi * CQ(c, j);
                    if (v == 0.0) continue;
                    int a = i, b = j;
                    double val = v;
                    if (a == b) val *= 2.0;
                    if (a > b) std::swap(a, b);
                    perf.add_scalar_at(a, b, var, val);
                }
            }
        }
    pb.add_psd(perf);

    // w3 * sum_i ||K_i C0 sqrt(Q*)||_2 via SOC epigraphs
    std::vector<int> soc_t(m);
    for (int i = 0; i < m; ++i) {
        soc_t[i] = pb.add_scalar();
        pb.set_objective_term(soc_t[i], weights.w3);
        std::vector<conic::LinExpr> tail;
        for (int j = 0; j < n; ++j) {
            conic::LinExpr e;
            for (int c = 0; c < s; ++c)
                if (CQh(c, j) != 0.0) e.add(K.at(i, c), CQh(c, j));
            tail.push_back(e);
        }
        pb.add_soc(conic::LinExpr::var(soc_t[i]), tail);
    }
    // w4 * ||K C0 Q*||_{1,p}
    add_row_norm_penalty(pb, weights.w4, weights.p, m, n, [&](int i, int j) {
        conic::LinExpr e;
        for (int c = 0; c < s; ++c)
            if (CQ(c, j) != 0.0) e.add(K.at(i, c), CQ(c, j));
        return e;
    });

    const conic::ConicSolution sol = solve_with_retry(pb.build());
    if (sol.status == conic::SolveStatus::Infeasible)
        throw SolverError(
            "stage2_gain: reported infeasible, contradicting the stage-1 certificate "
            "(internal inconsistency)");
    if (sol.status != conic::SolveStatus::Optimal)
        throw SolverError("stage2_gain: solver failure (" + conic::to_string(sol.status) +
                          ")");

    SynthesisResult res;
    res.two_stage = true;
    res.solver_status = sol.status;
    res.strictness_eps = eps;
    res.objective = sol.primal_objective;
    res.Q_star = Q_star;
    res.gamma2_star = sol.x(g2);
    res.K0.resize(m, s);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < s; ++c) res.K0(r, c) = sol.x(K.at(r, c));
    res.M_star = res.K0 * CQ;  // K0 C0 Q*, the M-equivalent of the direct path
    res.gamma1_star = 0.0;
    // allowable uncertainties (23): sigma_i < 1 / ||K0_i C0 sqrt(Q*)||_2
    res.sigma_star.resize(m);
    const double knorm = res.K0.norm();
    for (int i = 0; i < m; ++i) {
        const double rn = (res.K0.row(i) * CQh).norm();
        res.sigma_star(i) =
            (res.K0.row(i).norm() <= 1e-9 * std::max(1.0, knorm) || rn == 0.0)
                ? kInf
                : 1.0 / rn;
    }
    return res;
}

std::vector<ParetoPoint> pareto_sweep(const net::LinearModel& model,
                                      const SynthesisWeights& weights,
                                      const std::vector<double>& w3_grid) {
    if (w3_grid.empty()) throw ValidationError("pareto_sweep: empty w3 grid");
    for (double w3 : w3_grid)
        if (!(w3 > 0)) throw ValidationError("pareto_sweep: w3 values must be positive");
    std::vector<ParetoPoint> out;
    for (double w3 : w3_grid) {
        ParetoPoint pt;
        pt.w3 = w3;
        SynthesisWeights w = weights;
        w.w3 = w3;
        try {
            const SynthesisResult r = synthesize_full_state(model, w);
            pt.gain_norms.resize(r.K0.rows());
            for (int i = 0; i < r.K0.rows(); ++i) pt.gain_norms(i) = r.K0.row(i).norm();
            pt.sigma_star = r.sigma_star;
            pt.gamma2_star = r.gamma2_star;
            pt.converged = true;
        } catch (const std::exception& e) {
            pt.converged = false;
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

std::vector<int> row_support(const MatrixXd& K0, double rel_tol) {
    if (!(rel_tol > 0.0) || !(rel_tol < 1.0))
        throw ValidationError("row_support: rel_tol must lie in (0,1)");
    double maxn = 0.0;
    for (int i = 0; i < K0.rows(); ++i) maxn = std::max(maxn, K0.row(i).norm());
    std::vector<int> out;
    if (maxn == 0.0) return out;
    for (int i = 0; i < K0.rows(); ++i)
        if (K0.row(i).norm() > rel_tol * maxn) out.push_back(i);
    return out;
}

MatrixXd design_lqr(const net::LinearModel& model, const MatrixXd& state_weight,
                    const MatrixXd& input_weight) {
    const int n = model.n();
    const int m = model.m();
    if (state_weight.rows() != n || state_weight.cols() != n)
        throw ValidationError("design_lqr: state weight dimension mismatch");
    if (input_weight.rows() != m || input_weight.cols() != m)
        throw ValidationError("design_lqr: input weight dimension mismatch");
    {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(state_weight, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, state_weight.norm()))
            throw ValidationError("design_lqr: state weight must be PSD");
    }
    Eigen::LLT<MatrixXd> Rchol(input_weight);
    if (Rchol.info() != Eigen::Success)
        throw ValidationError("design_lqr: input weight must be positive definite");
    double max_re = 0.0;
    if (!stoch::is_hurwitz(model.A0, &max_re))
        throw ValidationError("design_lqr: A0 must be Hurwitz for the zero-gain seed");

    // Newton-Kleinman: P_k solves (A - B K_k)' P + P (A - B K_k) + Q + K_k' R K_k = 0
    MatrixXd K = MatrixXd::Zero(m, n);
    MatrixXd P = MatrixXd::Zero(n, n);
    std::vector<double> history;
    for (int it = 0; it < 60; ++it) {
        const MatrixXd Acl = model.A0 - model.B0 * K;
        const MatrixXd W = state_weight + K.transpose() * input_weight * K;
        const MatrixXd Pn = mses::solve_lyapunov(MatrixXd(Acl.transpose()), W);
        const MatrixXd Kn = Rchol.solve(model.B0.transpose() * Pn);
        const double care_res =
            (model.A0.transpose() * Pn + Pn * model.A0 -
             Pn * model.B0 * Rchol.solve(model.B0.transpose() * Pn) + state_weight)
                .norm();
        history.push_back(care_res);
        const double dp = (Pn - P).norm();
        P = Pn;
        K = Kn;
        if (care_res <= 1e-10 * std::max(1.0, state_weight.norm()) ||
            dp <= 1e-13 * std::max(1.0, P.norm()))
            return K;
    }
    std::ostringstream os;
    os << "design_lqr: Newton-Kleinman did not converge; residual history:";
    for (double r : history) os << " " << r;
    throw NumericalError(os.str());
}

json result_to_json(const SynthesisResult& r, const std::vector<int>& injection_buses) {
    json j;
    j["two_stage"] = r.two_stage;
    j["K0"] = matrix_to_json(r.K0);
    j["Q_star"] = matrix_to_json(r.Q_star);
    j["M_star"] = matrix_to_json(r.M_star);
    j["gamma1_star"] = r.gamma1_star;
    j["gamma2_star"] = r.gamma2_star;
    if (r.beta_star.size() > 0) j["beta_star"] = vector_to_json(r.beta_star);
    json sig = json::array();
    for (Eigen::Index i = 0; i < r.sigma_star.size(); ++i) {
        if (std::isinf(r.sigma_star(i)))
            sig.push_back(nullptr);  // unbounded channel
        else
            sig.push_back(r.sigma_star(i));
    }
    j["sigma_star"] = sig;
    j["objective"] = r.objective;
    j["strictness_eps"] = r.strictness_eps;
    j["solver_status"] = conic::to_string(r.solver_status);
    j["injection_buses"] = injection_buses;
    return j;
}

}  // namespace gridsyn::synth
