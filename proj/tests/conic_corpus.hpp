#pragma once

// Analytic LP/SOC/SDP instances with known optima, used by the solver unit
// tests and by the acceptance suite.

#include "gridsyn/lmi.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace testutil {

struct CorpusInstance {
    std::string name;
    gridsyn::conic::ConicProgram prog;
    double optimum;
};

inline std::vector<CorpusInstance> conic_oracle_corpus() {
    using namespace gridsyn::conic;
    std::vector<CorpusInstance> out;
    auto push = [&](const std::string& name, ProgramBuilder& pb, double opt) {
        out.push_back({name, pb.build(), opt});
    };
    const double s2 = std::sqrt(2.0);

    {  // 1: min x, x >= 3
        ProgramBuilder pb;
        int x = pb.add_scalar();
        pb.set_objective_term(x, 1.0);
        pb.add_nonneg(LinExpr::var(x).operator+=(-3.0));
        push("lp_bound", pb, 3.0);
    }
    {  // 2: min x1 + 2 x2, x1 + x2 = 1, x >= 0
        ProgramBuilder pb;
        int x1 = pb.add_scalar(), x2 = pb.add_scalar();
        pb.set_objective_term(x1, 1.0);
        pb.set_objective_term(x2, 2.0);
        LinExpr eq;
        eq.add(x1, 1.0).add(x2, 1.0);
        eq += -1.0;
        pb.add_equality(eq);
        pb.add_nonneg(LinExpr::var(x1));
        pb.add_nonneg(LinExpr::var(x2));
        push("lp_simplex_vertex", pb, 1.0);
    }
    {  // 3: min -x1 - x2, x1 <= 2, x2 <= 3, x >= 0
        ProgramBuilder pb;
        int x1 = pb.add_scalar(), x2 = pb.add_scalar();
        pb.set_objective_term(x1, -1.0);
        pb.set_objective_term(x2, -1.0);
        LinExpr u1 = LinExpr::of(2.0);
        u1.add(x1, -1.0);
        LinExpr u2 = LinExpr::of(3.0);
        u2.add(x2, -1.0);
        pb.add_nonneg(u1);
        pb.add_nonneg(u2);
        pb.add_nonneg(LinExpr::var(x1));
        pb.add_nonneg(LinExpr::var(x2));
        push("lp_box", pb, -5.0);
    }
    {  // 4: min x1, x1 - x2 = 0, x2 >= 5
        ProgramBuilder pb;
        int x1 = pb.add_scalar(), x2 = pb.add_scalar();
        pb.set_objective_term(x1, 1.0);
        LinExpr eq;
        eq.add(x1, 1.0).add(x2, -1.0);
        pb.add_equality(eq);
        pb.add_nonneg(LinExpr::var(x2).operator+=(-5.0));
        push("lp_chain", pb, 5.0);
    }
    {  // 5: max 3x1 + 2x2, x1 + x2 <= 4, x1 <= 2, x >= 0 -> -10
        ProgramBuilder pb;
        int x1 = pb.add_scalar(), x2 = pb.add_scalar();
        pb.set_objective_term(x1, -3.0);
        pb.set_objective_term(x2, -2.0);
        LinExpr c1 = LinExpr::of(4.0);
        c1.add(x1, -1.0).add(x2, -1.0);
        LinExpr c2 = LinExpr::of(2.0);
        c2.add(x1, -1.0);
        pb.add_nonneg(c1);
        pb.add_nonneg(c2);
        pb.add_nonneg(LinExpr::var(x1));
        pb.add_nonneg(LinExpr::var(x2));
        push("lp_two_constraints", pb, -10.0);
    }
    {  // 6: badly scaled LP: min 1e6 x, 1e-4 x >= 3 -> x* = 3e4, obj 3e10
        ProgramBuilder pb;
        int x = pb.add_scalar();
        pb.set_objective_term(x, 1e6);
        LinExpr e;
        e.add(x, 1e-4);
        e += -3.0;
        pb.add_nonneg(e);
        push("lp_badly_scaled", pb, 3e10);
    }
    {  // 7: min t, ||(3,4)|| <= t
        ProgramBuilder pb;
        int t = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        pb.add_soc(LinExpr::var(t), {LinExpr::of(3.0), LinExpr::of(4.0)});
        push("soc_norm", pb, 5.0);
    }
    {  // 8: min t, ||(x-1, x+1)|| <= t -> sqrt(2) at x = 0
        ProgramBuilder pb;
        int t = pb.add_scalar(), x = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        LinExpr e1 = LinExpr::var(x);
        e1 += -1.0;
        LinExpr e2 = LinExpr::var(x);
        e2 += 1.0;
        pb.add_soc(LinExpr::var(t), {e1, e2});
        push("soc_fit", pb, s2);
    }
    {  // 9: distance from (1,2,3) to span{(1,1,1)} = sqrt(2)
        ProgramBuilder pb;
        int t = pb.add_scalar(), x = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        std::vector<LinExpr> tail;
        for (double p : {1.0, 2.0, 3.0}) {
            LinExpr e = LinExpr::of(p);
            e.add(x, -1.0);
            tail.push_back(e);
        }
        pb.add_soc(LinExpr::var(t), tail);
        push("soc_projection", pb, s2);
    }
    {  // 10: min x, ||(x, 3)|| <= 5 -> -4
        ProgramBuilder pb;
        int x = pb.add_scalar();
        pb.set_objective_term(x, 1.0);
        pb.add_soc(LinExpr::of(5.0), {LinExpr::var(x), LinExpr::of(3.0)});
        push("soc_ball", pb, -4.0);
    }
    {  // 11: min t, ||(t-2, 1)|| <= t -> 5/4
        ProgramBuilder pb;
        int t = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        LinExpr e = LinExpr::var(t);
        e += -2.0;
        pb.add_soc(LinExpr::var(t), {e, LinExpr::of(1.0)});
        push("soc_shifted", pb, 1.25);
    }
    {  // 12: min t, ||(2, t-1)|| <= t+1 -> 1
        ProgramBuilder pb;
        int t = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        LinExpr head = LinExpr::var(t);
        head += 1.0;
        LinExpr e = LinExpr::var(t);
        e += -1.0;
        pb.add_soc(head, {LinExpr::of(2.0), e});
        push("soc_rotated", pb, 1.0);
    }
    {  // 13: min x, [[x,1],[1,x]] >= 0 -> 1
        ProgramBuilder pb;
        int x = pb.add_scalar();
        pb.set_objective_term(x, 1.0);
        AffineMatrix blk(2);
        Eigen::MatrixXd C(2, 2);
        C << 0, 1, 1, 0;
        blk.add_constant(C);
        blk.add_scalar_diag(x, 1.0);
        pb.add_psd(blk);
        push("sdp_eig", pb, 1.0);
    }
    {  // 14: min x + y, [[x,2],[2,y]] >= 0 -> 4 at x = y = 2
        ProgramBuilder pb;
        int x = pb.add_scalar(), y = pb.add_scalar();
        pb.set_objective_term(x, 1.0);
        pb.set_objective_term(y, 1.0);
        AffineMatrix blk(2);
        Eigen::MatrixXd C(2, 2);
        C << 0, 2, 2, 0;
        blk.add_constant(C);
        blk.add_scalar_at(0, 0, x, 1.0);
        blk.add_scalar_at(1, 1, y, 1.0);
        pb.add_psd(blk);
        push("sdp_amgm", pb, 4.0);
    }
    {  // 15: max t, diag(1,2) - t I >= 0 -> -1 (as minimization of -t)
        ProgramBuilder pb;
        int t = pb.add_scalar();
        pb.set_objective_term(t, -1.0);
        AffineMatrix blk(2);
        Eigen::MatrixXd C(2, 2);
        C << 1, 0, 0, 2;
        blk.add_constant(C);
        blk.add_scalar_diag(t, -1.0);
        pb.add_psd(blk);
        push("sdp_lambda_min", pb, -1.0);
    }
    {  // 16: min t, t I - R >= 0, R = [[1,.5],[.5,1]] -> 1.5
        ProgramBuilder pb;
        int t = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        AffineMatrix blk(2);
        Eigen::MatrixXd C(2, 2);
        C << -1, -0.5, -0.5, -1;
        blk.add_constant(C);
        blk.add_scalar_diag(t, 1.0);
        pb.add_psd(blk);
        push("sdp_lambda_max", pb, 1.5);
    }
    {  // 17: scalar Lyapunov: min p, -2p + 1 <= 0 -> 0.5
        ProgramBuilder pb;
        int p = pb.add_scalar();
        pb.set_objective_term(p, 1.0);
        LinExpr e = LinExpr::var(p, 2.0);
        e += -1.0;
        pb.add_nonneg(e);
        push("lp_scalar_lyapunov", pb, 0.5);
    }
    {  // 18: max x, [[1,x],[x,1]] >= 0 -> -1 (minimizing -x)
        ProgramBuilder pb;
        int x = pb.add_scalar();
        pb.set_objective_term(x, -1.0);
        AffineMatrix blk(2);
        blk.add_constant_diag(1.0);
        blk.add_scalar_at(0, 1, x, 1.0);
        pb.add_psd(blk);
        push("sdp_correlation", pb, -1.0);
    }
    {  // 19: min tr P, A'P + PA <= -I, A=[[0,1],[-2,-3]]; optimum = tr(P0)
        // where P0 solves the Lyapunov equation (Kronecker oracle: P0 =
        // [[1.25, 0.25],[0.25, 0.25]], trace 1.5)
        ProgramBuilder pb;
        SymVar P = pb.add_symmetric(2);
        pb.set_objective_term(P.at(0, 0), 1.0);
        pb.set_objective_term(P.at(1, 1), 1.0);
        Eigen::MatrixXd A(2, 2);
        A << 0, 1, -2, -3;
        AffineMatrix blk(2);
        blk.add_lyapunov(Eigen::MatrixXd(A.transpose()), P, -1.0);
        blk.add_constant_diag(-1.0);
        pb.add_psd(blk);
        AffineMatrix pos(2);
        pos.add_sym(P, 1.0);
        pb.add_psd(pos);
        push("sdp_lyapunov_trace", pb, 1.5);
    }
    {  // 20: min t, t I - R >= 0 (3x3 tridiagonal, lambda_max = 2 + sqrt(2))
        ProgramBuilder pb;
        int t = pb.add_scalar();
        pb.set_objective_term(t, 1.0);
        AffineMatrix blk(3);
        Eigen::MatrixXd C(3, 3);
        C << -2, -1, 0, -1, -2, -1, 0, -1, -2;
        blk.add_constant(C);
        blk.add_scalar_diag(t, 1.0);
        pb.add_psd(blk);
        push("sdp_tridiag", pb, 2.0 + s2);
    }
    {  // 21: mixed LP+SOC: min x + t, x >= 1, ||(x,1)|| <= t -> 1 + sqrt(2)
        ProgramBuilder pb;
        int x = pb.add_scalar(), t = pb.add_scalar();
        pb.set_objective_term(x, 1.0);
        pb.set_objective_term(t, 1.0);
        pb.add_nonneg(LinExpr::var(x).operator+=(-1.0));
        pb.add_soc(LinExpr::var(t), {LinExpr::var(x), LinExpr::of(1.0)});
        push("mixed_lp_soc", pb, 1.0 + s2);
    }
    {  // 22: mixed SDP+eq: min tr(X), [[x11,1],[1,x22]] >= 0, x11 = 4 x22
        // -> x11 x22 >= 1, x11 = 4 x22 -> x22 = 1/2, x11 = 2, tr = 2.5
        ProgramBuilder pb;
        int x11 = pb.add_scalar(), x22 = pb.add_scalar();
        pb.set_objective_term(x11, 1.0);
        pb.set_objective_term(x22, 1.0);
        LinExpr eq = LinExpr::var(x11);
        eq.add(x22, -4.0);
        pb.add_equality(eq);
        AffineMatrix blk(2);
        Eigen::MatrixXd C(2, 2);
        C << 0, 1, 1, 0;
        blk.add_constant(C);
        blk.add_scalar_at(0, 0, x11, 1.0);
        blk.add_scalar_at(1, 1, x22, 1.0);
        pb.add_psd(blk);
        push("sdp_with_equality", pb, 2.5);
    }
    return out;
}

}  // namespace testutil
