#include "gridsyn/conic.hpp"

#include "gridsyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace gridsyn::conic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);
}  // namespace

Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
    const int p = static_cast<int>(S.rows());
    Eigen::VectorXd v(svec_dim(p));
    int k = 0;
    for (int j = 0; j < p; ++j)
        for (int i = 0; i <= j; ++i)
            v(k++) = (i == j) ? S(i, j) : kSqrt2 * S(i, j);
    return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side) {
    Eigen::MatrixXd S(side, side);
    int k = 0;
    for (int j = 0; j < side; ++j)
        for (int i = 0; i <= j; ++i) {
            const double val = (i == j) ? v(k) : v(k) / kSqrt2;
            S(i, j) = val;
            S(j, i) = val;
            ++k;
        }
    return S;
}

int ConicProgram::cone_dim() const {
    int d = 0;
    for (const auto& cb : cones) d += cb.dim();
    return d;
}

void ConicProgram::validate() const {
    const int n = num_vars();
    const int q = cone_dim();
    if (h.size() != q) throw ValidationError("conic: cone dims do not partition h");
    for (const auto& cb : cones)
        if (cb.size <= 0) throw ValidationError("conic: nonpositive cone size");
    for (const auto& t : ineq)
        if (t.row < 0 || t.row >= q || t.col < 0 || t.col >= n)
            throw ValidationError("conic: G triplet out of range");
    for (const auto& t : eq)
        if (t.row < 0 || t.row >= num_eq() || t.col < 0 || t.col >= n)
            throw ValidationError("conic: A triplet out of range");
}

json ConicProgram::to_json() const {
    json j;
    j["c"] = vector_to_json(c);
    json cones_j = json::array();
    for (const auto& cb : cones) {
        const char* kind = cb.kind == ConeKind::Nonneg ? "nonneg"
                         : cb.kind == ConeKind::Soc    ? "soc"
                                                       : "psd";
        cones_j.push_back(json{{"kind", kind}, {"size", cb.size}});
    }
    j["cones"] = cones_j;
    auto trips = [](const std::vector<Triplet>& ts) {
        json a = json::array();
        for (const auto& t : ts) a.push_back(json::array({t.row, t.col, t.value}));
        return a;
    };
    j["G"] = trips(ineq);
    j["h"] = vector_to_json(h);
    j["A"] = trips(eq);
    j["b"] = vector_to_json(b);
    return j;
}

ConicProgram ConicProgram::from_json(const json& j) {
    ConicProgram p;
    p.c = vector_from_json(j.at("c"));
    for (const auto& cj : j.at("cones")) {
        const std::string kind = cj.at("kind").get<std::string>();
        ConeKind k = kind == "nonneg" ? ConeKind::Nonneg
                   : kind == "soc"    ? ConeKind::Soc
                   : kind == "psd"    ? ConeKind::Psd
                                      : throw ParseError("conic: unknown cone kind " + kind);
        p.cones.push_back({k, cj.at("size").get<int>()});
    }
    auto trips = [](const json& a) {
        std::vector<Triplet> ts;
        for (const auto& e : a)
            ts.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
        return ts;
    };
    p.ineq = trips(j.at("G"));
    p.h = vector_from_json(j.at("h"));
    p.eq = trips(j.at("A"));
    p.b = vector_from_json(j.at("b"));
    p.validate();
    return p;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "numerical_failure";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Cone geometry on raw (unscaled) slices
// ---------------------------------------------------------------------------

// Smallest Jordan eigenvalue of v with respect to the cone.
double cone_min_eig(const ConeBlock& cb, const Eigen::Ref<const VectorXd>& v) {
    switch (cb.kind) {
        case ConeKind::Nonneg:
            return v.minCoeff();
        case ConeKind::Soc:
            return v(0) - v.tail(v.size() - 1).norm();
        case ConeKind::Psd: {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(v, cb.size),
                                                       Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff();
        }
    }
    return 0.0;
}

// Unit element of the cone's Jordan algebra.
void cone_identity(const ConeBlock& cb, Eigen::Ref<VectorXd> v) {
    switch (cb.kind) {
        case ConeKind::Nonneg:
            v.setOnes();
            break;
        case ConeKind::Soc:
            v.setZero();
            v(0) = 1.0;
            break;
        case ConeKind::Psd:
            v = svec(MatrixXd::Identity(cb.size, cb.size));
            break;
    }
}

// Largest step t such that v + t*dv stays in the cone (v strictly inside).
double cone_max_step(const ConeBlock& cb, const Eigen::Ref<const VectorXd>& v,
                     const Eigen::Ref<const VectorXd>& dv) {
    switch (cb.kind) {
        case ConeKind::Nonneg: {
            double t = kInf;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (dv(i) < 0.0) t = std::min(t, -v(i) / dv(i));
            return t;
        }
        case ConeKind::Soc: {
            const auto vb = v.tail(v.size() - 1);
            const auto db = dv.tail(dv.size() - 1);
            const double a = dv(0) * dv(0) - db.squaredNorm();
            const double bq = v(0) * dv(0) - vb.dot(db);
            const double cq = v(0) * v(0) - vb.squaredNorm();  // > 0 inside
            double t = kInf;
            // roots of a t^2 + 2 b t + c = 0 crossing out of the cone
            const double disc = bq * bq - a * cq;
            if (std::abs(a) < 1e-300) {
                if (bq < 0.0) t = -cq / (2.0 * bq);
            } else if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double r1 = (-bq - sq) / a;
                const double r2 = (-bq + sq) / a;
                for (double r : {r1, r2})
                    if (r > 0.0 && v(0) + r * dv(0) >= 0.0) t = std::min(t, r);
            }
            if (dv(0) < 0.0) t = std::min(t, -v(0) / dv(0));
            return t;
        }
        case ConeKind::Psd: {
            MatrixXd V = smat(v, cb.size);
            const MatrixXd D = smat(dv, cb.size);
            Eigen::LLT<MatrixXd> llt(V);
            if (llt.info() != Eigen::Success) {
                // iterate numerically touching the boundary: shift minimally
                Eigen::SelfAdjointEigenSolver<MatrixXd> esv(V, Eigen::EigenvaluesOnly);
                const double lmin = esv.eigenvalues().minCoeff();
                const double shift = std::max(0.0, -lmin) +
                                     1e-14 * std::max(1.0, std::abs(V.trace()));
                V.diagonal().array() += shift;
                llt.compute(V);
                if (llt.info() != Eigen::Success) return 0.0;
            }
            MatrixXd L = llt.matrixL();
            MatrixXd T = L.triangularView<Eigen::Lower>().solve(D);
            MatrixXd W = L.triangularView<Eigen::Lower>()
                             .solve(T.transpose())
                             .transpose();  // L^{-1} D L^{-T}
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()),
                                                       Eigen::EigenvaluesOnly);
            const double lmin = es.eigenvalues().minCoeff();
            return lmin < 0.0 ? -1.0 / lmin : kInf;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling per cone block
// ---------------------------------------------------------------------------

struct BlockScaling {
    ConeBlock cone;
    int offset = 0;  // row offset into the cone-space vector
    // Nonneg
    VectorXd w;  // w_i = sqrt(s_i / z_i)
    // Soc
    double eta = 1.0;
    VectorXd wbar;  // hyperbolic scaling point, w0^2 - |w1|^2 = 1
    // Psd: scaled as V -> R' V R, with lam = R' Z R = R^{-1} S R^{-T} diagonal
    MatrixXd R, Rinv, RRtInv;
    VectorXd lam;  // scaled point lambda (= W z = W^{-T} s), block-local
};

// W v for one block
VectorXd bs_apply_W(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    switch (B.cone.kind) {
        case ConeKind::Nonneg:
            return B.w.cwiseProduct(v);
        case ConeKind::Soc: {
            const auto vb = v.tail(v.size() - 1);
            const double w0 = B.wbar(0);
            const auto wb = B.wbar.tail(B.wbar.size() - 1);
            VectorXd out(v.size());
            const double a = wb.dot(vb);
            out(0) = w0 * v(0) + a;
            out.tail(v.size() - 1) = vb + (v(0) + a / (1.0 + w0)) * wb;
            return B.eta * out;
        }
        case ConeKind::Psd: {
            const MatrixXd V = smat(v, B.cone.size);
            return svec(B.R.transpose() * V * B.R);
        }
    }
    return v;
}

VectorXd bs_apply_Wt(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    if (B.cone.kind == ConeKind::Psd) {
        const MatrixXd V = smat(v, B.cone.size);
        return svec(B.R * V * B.R.transpose());
    }
    return bs_apply_W(B, v);  // diagonal and SOC scalings are symmetric
}

VectorXd bs_apply_Winv(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    switch (B.cone.kind) {
        case ConeKind::Nonneg:
            return v.cwiseQuotient(B.w);
        case ConeKind::Soc: {
            const auto vb = v.tail(v.size() - 1);
            const double w0 = B.wbar(0);
            const auto wb = B.wbar.tail(B.wbar.size() - 1);
            VectorXd out(v.size());
            const double a = wb.dot(vb);
            out(0) = w0 * v(0) - a;
            out.tail(v.size() - 1) = vb + (-v(0) + a / (1.0 + w0)) * wb;
            return out / B.eta;
        }
        case ConeKind::Psd: {
            const MatrixXd V = smat(v, B.cone.size);
            return svec(B.Rinv.transpose() * V * B.Rinv);
        }
    }
    return v;
}

VectorXd bs_apply_WinvT(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    if (B.cone.kind == ConeKind::Psd) {
        const MatrixXd V = smat(v, B.cone.size);
        return svec(B.Rinv * V * B.Rinv.transpose());
    }
    return bs_apply_Winv(B, v);
}

// (W'W)^{-1} v
VectorXd bs_apply_WtWinv(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    if (B.cone.kind == ConeKind::Psd) {
        const MatrixXd V = smat(v, B.cone.size);
        return svec(B.RRtInv * V * B.RRtInv);
    }
    return bs_apply_Winv(B, bs_apply_WinvT(B, v));
}

VectorXd bs_apply_WtW(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    return bs_apply_Wt(B, bs_apply_W(B, v));
}

// Jordan product u o v in the scaled space
VectorXd bs_jordan(const BlockScaling& B, const Eigen::Ref<const VectorXd>& u,
                   const Eigen::Ref<const VectorXd>& v) {
    switch (B.cone.kind) {
        case ConeKind::Nonneg:
            return u.cwiseProduct(v);
        case ConeKind::Soc: {
            VectorXd out(u.size());
            out(0) = u.dot(v);
            out.tail(u.size() - 1) =
                u(0) * v.tail(v.size() - 1) + v(0) * u.tail(u.size() - 1);
            return out;
        }
        case ConeKind::Psd: {
            const MatrixXd U = smat(u, B.cone.size);
            const MatrixXd V = smat(v, B.cone.size);
            return svec(0.5 * (U * V + V * U));
        }
    }
    return u;
}

// lambda \ v (Jordan division by the scaled point)
VectorXd bs_lambda_div(const BlockScaling& B, const Eigen::Ref<const VectorXd>& v) {
    switch (B.cone.kind) {
        case ConeKind::Nonneg:
            return v.cwiseQuotient(B.lam);
        case ConeKind::Soc: {
            const double l0 = B.lam(0);
            const auto lb = B.lam.tail(B.lam.size() - 1);
            const double det = l0 * l0 - lb.squaredNorm();
            VectorXd out(v.size());
            const double u0 = (l0 * v(0) - lb.dot(v.tail(v.size() - 1))) / det;
            out(0) = u0;
            out.tail(v.size() - 1) = (v.tail(v.size() - 1) - u0 * lb) / l0;
            return out;
        }
        case ConeKind::Psd: {
            // lam is svec of a diagonal matrix; solve (L_i + L_j)/2 * U_ij = V_ij
            const int p = B.cone.size;
            VectorXd diag(p);
            int k = 0;
            for (int j = 0; j < p; ++j)
                for (int i = 0; i <= j; ++i) {
                    if (i == j) diag(j) = B.lam(k);
                    ++k;
                }
            VectorXd out(v.size());
            k = 0;
            for (int j = 0; j < p; ++j)
                for (int i = 0; i <= j; ++i) {
                    out(k) = 2.0 * v(k) / (diag(i) + diag(j));
                    ++k;
                }
            return out;
        }
    }
    return v;
}

BlockScaling compute_scaling(const ConeBlock& cb, int offset,
                             const Eigen::Ref<const VectorXd>& s,
                             const Eigen::Ref<const VectorXd>& z) {
    BlockScaling B;
    B.cone = cb;
    B.offset = offset;
    switch (cb.kind) {
        case ConeKind::Nonneg:
            B.w = (s.cwiseQuotient(z)).cwiseSqrt();
            B.lam = (s.cwiseProduct(z)).cwiseSqrt();
            break;
        case ConeKind::Soc: {
            const int d = cb.size;
            const auto sb = s.tail(d - 1);
            const auto zb = z.tail(d - 1);
            const double rs = std::sqrt(s(0) * s(0) - sb.squaredNorm());
            const double rz = std::sqrt(z(0) * z(0) - zb.squaredNorm());
            VectorXd sn = s / rs, zn = z / rz;
            const double gamma = std::sqrt((1.0 + sn.dot(zn)) / 2.0);
            B.wbar.resize(d);
            B.wbar(0) = (sn(0) + zn(0)) / (2.0 * gamma);
            B.wbar.tail(d - 1) = (sn.tail(d - 1) - zn.tail(d - 1)) / (2.0 * gamma);
            B.eta = std::sqrt(rs / rz);
            // lambda from the closed form lam = W z
            B.lam = bs_apply_W(B, z);
            break;
        }
        case ConeKind::Psd: {
            const int p = cb.size;
            MatrixXd S = smat(s, p), Z = smat(z, p);
            Eigen::LLT<MatrixXd> ls(S), lz(Z);
            double jitter = 0.0;
            for (int attempt = 0; attempt < 3 && (ls.info() != Eigen::Success ||
                                                  lz.info() != Eigen::Success);
                 ++attempt) {
                jitter = (jitter == 0.0) ? 1e-14 * (S.trace() + Z.trace()) / p
                                         : jitter * 100.0;
                ls.compute(S + jitter * MatrixXd::Identity(p, p));
                lz.compute(Z + jitter * MatrixXd::Identity(p, p));
            }
            if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) {
                Eigen::SelfAdjointEigenSolver<MatrixXd> es_s(S, Eigen::EigenvaluesOnly);
                Eigen::SelfAdjointEigenSolver<MatrixXd> es_z(Z, Eigen::EigenvaluesOnly);
                throw SolverError(
                    "conic: NT scaling breakdown on a PSD block (side " +
                    std::to_string(p) + ", lambda_min(S) " +
                    std::to_string(es_s.eigenvalues().minCoeff()) + ", lambda_min(Z) " +
                    std::to_string(es_z.eigenvalues().minCoeff()) + ")");
            }
            MatrixXd Ls = ls.matrixL(), Lz = lz.matrixL();
            Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls,
                                           Eigen::ComputeFullU | Eigen::ComputeFullV);
            const VectorXd sig = svd.singularValues();
            const MatrixXd SigInvHalf = sig.cwiseSqrt().cwiseInverse().asDiagonal();
            B.R = Ls * svd.matrixV() * SigInvHalf;
            B.Rinv = SigInvHalf * svd.matrixU().transpose() * Lz.transpose();
            B.RRtInv = B.Rinv.transpose() * B.Rinv;
            B.lam = svec(MatrixXd(sig.asDiagonal()));
            break;
        }
    }
    return B;
}

// ---------------------------------------------------------------------------
// Problem data in block form
// ---------------------------------------------------------------------------

struct LocalTriplet {
    int row;   // block-local row
    int lcol;  // index into BlockCols::cols
    double value;
};

struct BlockData {
    ConeBlock cone;
    int offset;                // global row offset in cone space
    std::vector<int> cols;     // sorted global variable indices appearing in block
    std::vector<LocalTriplet> entries;
};

struct ProblemData {
    int n = 0, p = 0, q = 0;
    VectorXd c, b, h;
    std::vector<Triplet> G, A;
    std::vector<BlockData> blocks;
    double deg = 0.0;  // total barrier degree

    VectorXd G_mul(const VectorXd& x) const {
        VectorXd out = VectorXd::Zero(q);
        for (const auto& t : G) out(t.row) += t.value * x(t.col);
        return out;
    }
    VectorXd Gt_mul(const VectorXd& v) const {
        VectorXd out = VectorXd::Zero(n);
        for (const auto& t : G) out(t.col) += t.value * v(t.row);
        return out;
    }
    VectorXd A_mul(const VectorXd& x) const {
        VectorXd out = VectorXd::Zero(p);
        for (const auto& t : A) out(t.row) += t.value * x(t.col);
        return out;
    }
    VectorXd At_mul(const VectorXd& v) const {
        VectorXd out = VectorXd::Zero(n);
        for (const auto& t : A) out(t.col) += t.value * v(t.row);
        return out;
    }
};

ProblemData build_problem(const ConicProgram& prog) {
    ProblemData P;
    P.n = prog.num_vars();
    P.p = prog.num_eq();
    P.q = prog.cone_dim();
    P.c = prog.c;
    P.b = prog.b;
    P.h = prog.h;
    P.G = prog.ineq;
    P.A = prog.eq;
    int off = 0;
    for (const auto& cb : prog.cones) {
        BlockData bd;
        bd.cone = cb;
        bd.offset = off;
        off += cb.dim();
        P.blocks.push_back(std::move(bd));
        switch (cb.kind) {
            case ConeKind::Nonneg: P.deg += cb.size; break;
            case ConeKind::Soc: P.deg += 1; break;
            case ConeKind::Psd: P.deg += cb.size; break;
        }
    }
    // route triplets into blocks
    std::vector<int> blk_of_row(P.q);
    for (size_t bi = 0; bi < P.blocks.size(); ++bi) {
        const auto& bd = P.blocks[bi];
        for (int r = 0; r < bd.cone.dim(); ++r) blk_of_row[bd.offset + r] = static_cast<int>(bi);
    }
    std::vector<std::vector<Triplet>> per_block(P.blocks.size());
    for (const auto& t : P.G) per_block[blk_of_row[t.row]].push_back(t);
    for (size_t bi = 0; bi < P.blocks.size(); ++bi) {
        auto& bd = P.blocks[bi];
        std::vector<int> cols;
        for (const auto& t : per_block[bi]) cols.push_back(t.col);
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        bd.cols = cols;
        for (const auto& t : per_block[bi]) {
            const int lc = static_cast<int>(
                std::lower_bound(cols.begin(), cols.end(), t.col) - cols.begin());
            bd.entries.push_back({t.row - bd.offset, lc, t.value});
        }
    }
    return P;
}

// Per-block vector views
Eigen::Ref<const VectorXd> blk(const VectorXd& v, const BlockData& bd) {
    return v.segment(bd.offset, bd.cone.dim());
}

// Apply a scaling op across all blocks.
template <typename Op>
VectorXd apply_all(const std::vector<BlockScaling>& W, const VectorXd& v, Op op) {
    VectorXd out(v.size());
    for (const auto& B : W)
        out.segment(B.offset, B.cone.dim()) = op(B, v.segment(B.offset, B.cone.dim()));
    return out;
}

// ---------------------------------------------------------------------------
// KKT: solve [0 A' G'; A 0 0; G 0 -W'W] (dx,dy,dz) = (bx,by,bz)
// via normal equations S = G'(W'W)^{-1}G and a Schur complement over A.
// ---------------------------------------------------------------------------

struct KktFactor {
    const ProblemData* P = nullptr;
    const std::vector<BlockScaling>* W = nullptr;
    MatrixXd S;  // G'(W'W)^{-1}G, possibly jittered
    Eigen::LLT<MatrixXd> S_llt;
    MatrixXd AS;       // A S^{-1} A'
    Eigen::LDLT<MatrixXd> AS_ldlt;
    bool ok = false;
};

// Columns of (W'W)^{-1} G restricted to one block, as a dense (dim x |cols|) matrix.
MatrixXd scaled_block_columns(const BlockData& bd, const BlockScaling& B) {
    const int dim = bd.cone.dim();
    const int nc = static_cast<int>(bd.cols.size());
    MatrixXd M = MatrixXd::Zero(dim, nc);
    switch (bd.cone.kind) {
        case ConeKind::Nonneg: {
            for (const auto& t : bd.entries)
                M(t.row, t.lcol) += t.value / (B.w(t.row) * B.w(t.row));
            break;
        }
        case ConeKind::Soc: {
            // gather sparse columns then apply the closed-form inverse twice
            MatrixXd cols = MatrixXd::Zero(dim, nc);
            for (const auto& t : bd.entries) cols(t.row, t.lcol) += t.value;
            for (int j = 0; j < nc; ++j)
                M.col(j) = bs_apply_Winv(B, bs_apply_WinvT(B, cols.col(j)));
            break;
        }
        case ConeKind::Psd: {
            const int p = bd.cone.size;
            // column entry counts to pick sparse vs dense congruence
            std::vector<int> nnz(nc, 0);
            for (const auto& t : bd.entries) nnz[t.lcol]++;
            std::vector<std::vector<LocalTriplet>> by_col(nc);
            for (const auto& t : bd.entries) by_col[t.lcol].push_back(t);
            MatrixXd C(p, p), E(p, p);
            for (int j = 0; j < nc; ++j) {
                if (nnz[j] * 2 <= p) {
                    // rank-two accumulation per stored entry
                    C.setZero();
                    for (const auto& t : by_col[j]) {
                        // svec row t.row corresponds to entry (i,k), i<=k
                        int kk = t.row;
                        int colk = 0;
                        while (kk >= colk + 1) {
                            kk -= colk + 1;
                            ++colk;
                        }
                        const int i = kk, k2 = colk;
                        const double alpha = (i == k2) ? t.value : t.value / kSqrt2;
                        const auto u = B.RRtInv.col(i);
                        const auto v = B.RRtInv.col(k2);
                        if (i == k2) {
                            C.noalias() += alpha * u * u.transpose();
                        } else {
                            C.noalias() += alpha * u * v.transpose();
                            C.noalias() += alpha * v * u.transpose();
                        }
                    }
                    M.col(j) = svec(C);
                } else {
                    VectorXd col = VectorXd::Zero(bd.cone.dim());
                    for (const auto& t : by_col[j]) col(t.row) += t.value;
                    E = smat(col, p);
                    C.noalias() = B.RRtInv * E * B.RRtInv;
                    M.col(j) = svec(C);
                }
            }
            break;
        }
    }
    return M;
}

KktFactor kkt_factor(const ProblemData& P, const std::vector<BlockScaling>& W) {
    KktFactor F;
    F.P = &P;
    F.W = &W;
    F.S = MatrixXd::Zero(P.n, P.n);
    for (size_t bi = 0; bi < P.blocks.size(); ++bi) {
        const auto& bd = P.blocks[bi];
        if (bd.cols.empty()) continue;
        const int nc = static_cast<int>(bd.cols.size());
        if (bd.cone.kind == ConeKind::Nonneg) {
            // accumulate row outer products directly
            std::vector<std::vector<std::pair<int, double>>> rows(bd.cone.dim());
            for (const auto& t : bd.entries) rows[t.row].push_back({bd.cols[t.lcol], t.value});
            const auto& B = W[bi];
            for (int r = 0; r < bd.cone.dim(); ++r) {
                const double wi = 1.0 / (B.w(r) * B.w(r));
                for (const auto& [j1, v1] : rows[r])
                    for (const auto& [j2, v2] : rows[r]) F.S(j1, j2) += wi * v1 * v2;
            }
            continue;
        }
        MatrixXd M = scaled_block_columns(bd, W[bi]);
        MatrixXd local = MatrixXd::Zero(nc, nc);
        for (const auto& t : bd.entries) local.row(t.lcol) += t.value * M.row(t.row);
        for (int i = 0; i < nc; ++i)
            for (int j = 0; j < nc; ++j) F.S(bd.cols[i], bd.cols[j]) += local(i, j);
    }
    // factor with escalating jitter if needed
    double jitter = 0.0;
    const double base = std::max(1e-30, F.S.trace() / std::max(1, P.n));
    for (int attempt = 0; attempt < 6; ++attempt) {
        F.S_llt.compute(F.S + jitter * MatrixXd::Identity(P.n, P.n));
        if (F.S_llt.info() == Eigen::Success) {
            F.ok = true;
            break;
        }
        jitter = (jitter == 0.0) ? 1e-14 * base : jitter * 100.0;
    }
    if (!F.ok) return F;
    if (P.p > 0) {
        MatrixXd At = MatrixXd::Zero(P.n, P.p);
        for (const auto& t : P.A) At(t.col, t.row) += t.value;
        MatrixXd SAt = F.S_llt.solve(At);
        F.AS = At.transpose() * SAt;
        F.AS_ldlt.compute(F.AS);
        if (F.AS_ldlt.info() != Eigen::Success) F.ok = false;
    }
    return F;
}

struct KktSol {
    VectorXd dx, dy, dz;
};

KktSol kkt_solve_once(const KktFactor& F, const VectorXd& bx, const VectorXd& by,
                      const VectorXd& bz) {
    const ProblemData& P = *F.P;
    const std::vector<BlockScaling>& W = *F.W;
    // rhs for normal equations: bx + G'(W'W)^{-1} bz
    VectorXd wz = apply_all(W, bz, bs_apply_WtWinv);
    VectorXd rhs = bx + P.Gt_mul(wz);
    KktSol sol;
    if (P.p > 0) {
        VectorXd t1 = F.S_llt.solve(rhs);
        VectorXd r2 = P.A_mul(t1) - by;
        sol.dy = F.AS_ldlt.solve(r2);
        sol.dx = F.S_llt.solve(rhs - P.At_mul(sol.dy));
    } else {
        sol.dy.resize(0);
        sol.dx = F.S_llt.solve(rhs);
    }
    sol.dz = apply_all(W, VectorXd(P.G_mul(sol.dx) - bz), bs_apply_WtWinv);
    return sol;
}

KktSol kkt_solve(const KktFactor& F, const VectorXd& bx, const VectorXd& by,
                 const VectorXd& bz) {
    const ProblemData& P = *F.P;
    const std::vector<BlockScaling>& W = *F.W;
    KktSol sol = kkt_solve_once(F, bx, by, bz);
    // iterative refinement: the scaling gets extremely ill-conditioned near
    // convergence, and direction quality decides whether the last digits of
    // the gap are reachable
    const double scale =
        1.0 + std::max({bx.lpNorm<Eigen::Infinity>(),
                        by.size() ? by.lpNorm<Eigen::Infinity>() : 0.0,
                        bz.lpNorm<Eigen::Infinity>()});
    auto residual_of = [&](const KktSol& c) {
        VectorXd r1 = bx - P.At_mul(c.dy) - P.Gt_mul(c.dz);
        VectorXd r2 = by - P.A_mul(c.dx);
        VectorXd r3 = bz - P.G_mul(c.dx) + apply_all(W, c.dz, bs_apply_WtW);
        return std::max({r1.lpNorm<Eigen::Infinity>(),
                         r2.size() ? r2.lpNorm<Eigen::Infinity>() : 0.0,
                         r3.lpNorm<Eigen::Infinity>()});
    };
    KktSol best = sol;
    double best_res = residual_of(best);
    for (int pass = 0; pass < 3 && best_res > 1e-13 * scale; ++pass) {
        VectorXd r1 = bx - P.At_mul(best.dy) - P.Gt_mul(best.dz);
        VectorXd r2 = by - P.A_mul(best.dx);
        VectorXd r3 = bz - P.G_mul(best.dx) + apply_all(W, best.dz, bs_apply_WtW);
        KktSol corr = kkt_solve_once(F, r1, r2, r3);
        KktSol cand = best;
        cand.dx += corr.dx;
        if (P.p > 0) cand.dy += corr.dy;
        cand.dz += corr.dz;
        const double cand_res = residual_of(cand);
        if (cand_res >= 0.9 * best_res) break;  // no further progress
        best = std::move(cand);
        best_res = cand_res;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Equilibration (Ruiz). Row scaling is uniform within SOC/PSD blocks so the
// cones are preserved; nonneg rows scale individually.
// ---------------------------------------------------------------------------

struct Scaling {
    VectorXd drow;  // cone rows
    VectorXd deq;   // equality rows
    VectorXd dcol;  // variables
};

Scaling equilibrate(ConicProgram& prog, int sweeps) {
    const int n = prog.num_vars();
    const int q = prog.cone_dim();
    const int p = prog.num_eq();
    Scaling sc;
    sc.drow = VectorXd::Ones(q);
    sc.deq = VectorXd::Ones(p);
    sc.dcol = VectorXd::Ones(n);
    if (sweeps <= 0 || (q == 0 && p == 0)) return sc;

    std::vector<int> blk_of_row(q);
    std::vector<int> blk_start;
    {
        int off = 0, bi = 0;
        for (const auto& cb : prog.cones) {
            blk_start.push_back(off);
            for (int r = 0; r < cb.dim(); ++r) blk_of_row[off + r] = bi;
            off += cb.dim();
            ++bi;
        }
    }
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        VectorXd rmax = VectorXd::Zero(q), emax = VectorXd::Zero(p),
                 cmax = VectorXd::Zero(n);
        for (const auto& t : prog.ineq) {
            const double v = std::abs(t.value) * sc.drow(t.row) * sc.dcol(t.col);
            rmax(t.row) = std::max(rmax(t.row), v);
            cmax(t.col) = std::max(cmax(t.col), v);
        }
        for (const auto& t : prog.eq) {
            const double v = std::abs(t.value) * sc.deq(t.row) * sc.dcol(t.col);
            emax(t.row) = std::max(emax(t.row), v);
            cmax(t.col) = std::max(cmax(t.col), v);
        }
        // uniform scale per SOC/PSD block
        int bi = 0;
        for (const auto& cb : prog.cones) {
            if (cb.kind != ConeKind::Nonneg) {
                double m = 0.0;
                for (int r = 0; r < cb.dim(); ++r) m = std::max(m, rmax(blk_start[bi] + r));
                for (int r = 0; r < cb.dim(); ++r) rmax(blk_start[bi] + r) = m;
            }
            ++bi;
        }
        auto update = [](VectorXd& d, const VectorXd& m) {
            for (Eigen::Index i = 0; i < d.size(); ++i)
                if (m(i) > 0.0) d(i) /= std::sqrt(m(i));
        };
        update(sc.drow, rmax);
        update(sc.deq, emax);
        update(sc.dcol, cmax);
    }
    for (auto& t : prog.ineq) t.value *= sc.drow(t.row) * sc.dcol(t.col);
    for (auto& t : prog.eq) t.value *= sc.deq(t.row) * sc.dcol(t.col);
    for (int i = 0; i < q; ++i) prog.h(i) *= sc.drow(i);
    for (int i = 0; i < p; ++i) prog.b(i) *= sc.deq(i);
    for (int j = 0; j < n; ++j) prog.c(j) *= sc.dcol(j);
    return sc;
}

}  // namespace

ConicSolution solve(const ConicProgram& prog_in, double tol, int max_iter) {
    SolverOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return solve(prog_in, opt);
}

ConicSolution solve(const ConicProgram& prog_in, const SolverOptions& opt) {
    prog_in.validate();
    if (!(opt.tol > 0)) throw ValidationError("conic: tol must be positive");

    ConicSolution sol;

    // Degenerate programs without cone constraints
    if (prog_in.cone_dim() == 0) {
        const int n = prog_in.num_vars();
        if (prog_in.num_eq() == 0) {
            sol.x = VectorXd::Zero(n);
            if (prog_in.c.norm() == 0.0) {
                sol.status = SolveStatus::Optimal;
            } else {
                sol.status = SolveStatus::Unbounded;
                sol.x = -prog_in.c;  // improving ray
            }
            return sol;
        }
        // min c'x s.t. Ax=b: bounded iff c in range(A')
        MatrixXd A = MatrixXd::Zero(prog_in.num_eq(), n);
        for (const auto& t : prog_in.eq) A(t.row, t.col) += t.value;
        VectorXd y = A.transpose()
                         .colPivHouseholderQr()
                         .solve(-prog_in.c);
        if ((A.transpose() * y + prog_in.c).norm() <= opt.tol * (1 + prog_in.c.norm())) {
            sol.x = A.colPivHouseholderQr().solve(prog_in.b);
            sol.y = y;
            sol.status = SolveStatus::Optimal;
            sol.primal_objective = prog_in.c.dot(sol.x);
            sol.dual_objective = sol.primal_objective;
        } else {
            sol.status = SolveStatus::Unbounded;
        }
        return sol;
    }

    ConicProgram prog = prog_in;  // equilibration mutates a copy
    Scaling esc = equilibrate(prog, opt.equilibrate_sweeps);
    ProblemData P = build_problem(prog);

    const double bnorm = std::max(1.0, std::hypot(P.b.norm(), P.h.norm()));
    const double cnorm = std::max(1.0, P.c.norm());

    // --- initial point: two KKT solves at W = I ------------------------------
    std::vector<BlockScaling> W0;
    for (const auto& bd : P.blocks) {
        BlockScaling B;
        B.cone = bd.cone;
        B.offset = bd.offset;
        switch (bd.cone.kind) {
            case ConeKind::Nonneg:
                B.w = VectorXd::Ones(bd.cone.size);
                B.lam = B.w;
                break;
            case ConeKind::Soc:
                B.eta = 1.0;
                B.wbar = VectorXd::Zero(bd.cone.size);
                B.wbar(0) = 1.0;
                B.lam = B.wbar;
                break;
            case ConeKind::Psd:
                B.R = MatrixXd::Identity(bd.cone.size, bd.cone.size);
                B.Rinv = B.R;
                B.RRtInv = B.R;
                B.lam = svec(B.R);
                break;
        }
        W0.push_back(std::move(B));
    }
    KktFactor F0 = kkt_factor(P, W0);
    if (!F0.ok) {
        sol.status = SolveStatus::NumericalFailure;
        return sol;
    }
    VectorXd x, y, z, s;
    {
        // residual-free warm point from two solves at W = I
        KktSol init_p = kkt_solve(F0, VectorXd::Zero(P.n), P.b, P.h);
        x = init_p.dx;
        s = P.h - P.G_mul(x);
        KktSol init_d = kkt_solve(F0, -P.c, VectorXd::Zero(P.p), VectorXd::Zero(P.q));
        y = init_d.dy;
        z = init_d.dz;
        // shift into the cone interior; fall back to the unit point when the
        // warm point is badly off-center (uneven complementarity products
        // destabilize the first Mehrotra steps)
        auto shift = [&](VectorXd& v) {
            double worst = kInf;
            for (const auto& bd : P.blocks)
                worst = std::min(worst, cone_min_eig(bd.cone, blk(v, bd)));
            if (worst < 1e-8) {
                VectorXd e(P.q);
                for (const auto& bd : P.blocks)
                    cone_identity(bd.cone, e.segment(bd.offset, bd.cone.dim()));
                v += (1.0 - worst) * e;
            }
            return worst;
        };
        const double shift_s = shift(s);
        const double shift_z = shift(z);
        const double spread = std::max(std::abs(shift_s), std::abs(shift_z));
        if (spread > 10.0) {
            x.setZero();
            if (P.p > 0) y.setZero();
            for (const auto& bd : P.blocks) {
                cone_identity(bd.cone, s.segment(bd.offset, bd.cone.dim()));
                cone_identity(bd.cone, z.segment(bd.offset, bd.cone.dim()));
            }
        }
    }
    double tau = 1.0, kappa = 1.0;

    auto record = [&](double v) { sol.residual_history.push_back(v); };

    // best-iterate safeguard: near the end of the path the scaled KKT system
    // can lose accuracy; never let the reported iterate be worse than the
    // best one visited
    struct Snapshot {
        VectorXd x, y, z, s;
        double tau = 1.0, kappa = 1.0;
        double pres = 0.0, dres = 0.0, relgap = 0.0;
        double merit = std::numeric_limits<double>::infinity();
    } best;
    double best_cert = std::numeric_limits<double>::infinity();
    int stalled = 0;

    bool fallback_centering = false;
    for (int iter = 0; iter <= opt.max_iter; ++iter) {
        // residuals of the homogeneous embedding
        VectorXd rx = P.At_mul(y) + P.Gt_mul(z) + P.c * tau;
        VectorXd ry = -P.A_mul(x) + P.b * tau;
        VectorXd rz = -P.G_mul(x) + P.h * tau - s;
        const double rtau = -P.c.dot(x) - P.b.dot(y) - P.h.dot(z) - kappa;

        const double gap_hs = s.dot(z) + tau * kappa;
        const double mu = gap_hs / (P.deg + 1.0);

        const double pcost = P.c.dot(x) / tau;
        const double dcost = (-P.b.dot(y) - P.h.dot(z)) / tau;
        const double pres = std::hypot(ry.norm(), rz.norm()) / tau / bnorm;
        const double dres = rx.norm() / tau / cnorm;
        const double scz = s.dot(z) / (tau * tau);
        const double relgap = scz / std::max(1.0, std::abs(pcost));
        record(std::max({pres, dres, relgap}));

        if (opt.verbose) {
            std::fprintf(stderr, "iter %3d  pcost % .6e  dcost % .6e  pres %.2e  dres %.2e  gap %.2e  tau %.2e kap %.2e\n",
                         iter, pcost, dcost, pres, dres, relgap, tau, kappa);
        }

        auto unscale_and_fill = [&](SolveStatus st) {
            sol.status = st;
            sol.x = esc.dcol.cwiseProduct(x) / tau;
            sol.y = esc.deq.cwiseProduct(y) / tau;
            sol.z = esc.drow.cwiseProduct(z) / tau;
            sol.s = s.cwiseQuotient(esc.drow) / tau;
            sol.iterations = iter;
            sol.primal_objective = prog_in.c.dot(sol.x);
            sol.dual_objective = -prog_in.b.dot(sol.y) - prog_in.h.dot(sol.z);
            sol.primal_residual = pres;
            sol.dual_residual = dres;
            sol.gap = relgap;
        };

        if (pres <= opt.tol && dres <= opt.tol && relgap <= opt.tol) {
            unscale_and_fill(SolveStatus::Optimal);
            return sol;
        }
        // infeasibility certificates from the improving rays; only meaningful
        // once the embedding is heading to the tau = 0 face
        double cert_p = kInf, cert_d = kInf;
        const bool ray_gate = tau <= 0.1 * kappa;
        const double ray_d = ray_gate ? -P.b.dot(y) - P.h.dot(z) : -1.0;
        if (ray_d > 0.0) {
            cert_p = (P.At_mul(y) + P.Gt_mul(z)).norm() / ray_d / cnorm;
            if (cert_p <= opt.tol) {
                sol.status = SolveStatus::Infeasible;
                sol.y = esc.deq.cwiseProduct(y) / ray_d;
                sol.z = esc.drow.cwiseProduct(z) / ray_d;
                sol.iterations = iter;
                return sol;
            }
        }
        const double ray_p = ray_gate ? -P.c.dot(x) : -1.0;
        if (ray_p > 0.0) {
            cert_d =
                std::hypot(P.A_mul(x).norm(), (P.G_mul(x) + s).norm()) / ray_p / bnorm;
            if (cert_d <= opt.tol) {
                sol.status = SolveStatus::Unbounded;
                sol.x = esc.dcol.cwiseProduct(x) / ray_p;
                sol.iterations = iter;
                return sol;
            }
        }
        // progress toward optimality and toward an infeasibility certificate
        // is tracked separately; a transiently small certificate metric must
        // not freeze the optimality baseline
        const double opt_merit = std::max({pres, dres, relgap});
        const double cert_merit = std::min(cert_p, cert_d);
        if (opt_merit < 0.9 * best.merit) {
            best = Snapshot{x, y, z, s, tau, kappa, pres, dres, relgap, opt_merit};
            stalled = 0;
        } else if (cert_merit < 0.9 * best_cert) {
            best_cert = cert_merit;
            stalled = 0;
        } else if (++stalled >= 10) {
            x = best.x;
            y = best.y;
            z = best.z;
            s = best.s;
            tau = best.tau;
            kappa = best.kappa;
            unscale_and_fill(SolveStatus::NumericalFailure);
            sol.primal_residual = best.pres;
            sol.dual_residual = best.dres;
            sol.gap = best.relgap;
            return sol;
        }
        if (iter == opt.max_iter) {
            unscale_and_fill(SolveStatus::NumericalFailure);
            return sol;
        }

        // NT scaling and factorization
        std::vector<BlockScaling> W;
        try {
            for (size_t bi = 0; bi < P.blocks.size(); ++bi)
                W.push_back(compute_scaling(P.blocks[bi].cone, P.blocks[bi].offset,
                                            blk(s, P.blocks[bi]), blk(z, P.blocks[bi])));
        } catch (const SolverError& e) {
            if (opt.verbose) std::fprintf(stderr, "%s\n", e.what());
            unscale_and_fill(SolveStatus::NumericalFailure);
            return sol;
        }
        KktFactor F = kkt_factor(P, W);
        if (!F.ok) {
            if (opt.verbose)
                std::fprintf(stderr,
                             "kkt factorization failed: |S| %.3e, diag range [%.3e, %.3e], "
                             "finite %d, eq rows %d\n",
                             F.S.norm(), F.S.diagonal().minCoeff(),
                             F.S.diagonal().maxCoeff(), int(F.S.allFinite()), P.p);
            unscale_and_fill(SolveStatus::NumericalFailure);
            return sol;
        }

        VectorXd lam(P.q);
        for (const auto& B : W) lam.segment(B.offset, B.cone.dim()) = B.lam;

        // u1 = KKT(-c, b, h), the tau-coefficient solve (shared by both steps)
        KktSol u1 = kkt_solve(F, -P.c, P.b, P.h);
        const double denom_base = -P.c.dot(u1.dx) - P.b.dot(u1.dy) - P.h.dot(u1.dz);

        auto direction = [&](double sigma, const VectorXd& ds_corr, double dk_corr,
                             VectorXd& dxo, VectorXd& dyo, VectorXd& dzo, VectorXd& dso,
                             double& dtauo, double& dkappao) {
            // d_s = sigma*mu*e - lam o lam - corr, in scaled space
            VectorXd d_s(P.q);
            for (const auto& B : W) {
                const int d = B.cone.dim();
                VectorXd e(d);
                cone_identity(B.cone, e);
                d_s.segment(B.offset, d) =
                    sigma * mu * e - bs_jordan(B, B.lam, B.lam);
            }
            d_s -= ds_corr;
            const double d_k = sigma * mu - tau * kappa - dk_corr;
            // lambda \ d_s then W'(.)
            VectorXd lds(P.q), wt_lds(P.q);
            for (const auto& B : W) {
                const int d = B.cone.dim();
                lds.segment(B.offset, d) = bs_lambda_div(B, d_s.segment(B.offset, d));
                wt_lds.segment(B.offset, d) = bs_apply_Wt(B, lds.segment(B.offset, d));
            }
            const double om = 1.0 - sigma;
            KktSol u2 = kkt_solve(F, -om * rx, om * ry, om * rz - wt_lds);
            const double num = -om * rtau + P.c.dot(u2.dx) + P.b.dot(u2.dy) +
                               P.h.dot(u2.dz) + d_k / tau;
            const double den = denom_base + kappa / tau;
            dtauo = num / den;
            dxo = u2.dx + dtauo * u1.dx;
            dyo = (P.p > 0) ? VectorXd(u2.dy + dtauo * u1.dy) : VectorXd();
            dzo = u2.dz + dtauo * u1.dz;
            // recover ds from the primal row (not from W'W dz, whose
            // conditioning would leak solve error into primal feasibility)
            dso = om * rz - P.G_mul(dxo) + P.h * dtauo;
            dkappao = (d_k - kappa * dtauo) / tau;
        };

        auto max_step = [&](const VectorXd& ds, const VectorXd& dz, double dtau,
                            double dkappa) {
            double a = kInf;
            for (const auto& bd : P.blocks) {
                a = std::min(a, cone_max_step(bd.cone, blk(s, bd),
                                              ds.segment(bd.offset, bd.cone.dim())));
                a = std::min(a, cone_max_step(bd.cone, blk(z, bd),
                                              dz.segment(bd.offset, bd.cone.dim())));
            }
            if (dtau < 0.0) a = std::min(a, -tau / dtau);
            if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
            return a;
        };

        VectorXd dx, dy, dz, ds;
        double dtau, dkappa;
        double sigma;
        if (!fallback_centering) {
            // predictor (affine) direction
            direction(0.0, VectorXd::Zero(P.q), 0.0, dx, dy, dz, ds, dtau, dkappa);
            const double a_aff = std::min(1.0, max_step(ds, dz, dtau, dkappa));
            const double gap_aff =
                (s + a_aff * ds).dot(z + a_aff * dz) + (tau + a_aff * dtau) * (kappa + a_aff * dkappa);
            double ratio = gap_aff / gap_hs;
            ratio = std::clamp(ratio, 0.0, 1.0);
            sigma = ratio * ratio * ratio;
            // Mehrotra correction: (W^{-T} ds_aff) o (W dz_aff) and dtau*dkappa
            VectorXd corr(P.q);
            for (const auto& B : W) {
                const int d = B.cone.dim();
                VectorXd a1 = bs_apply_WinvT(B, ds.segment(B.offset, d));
                VectorXd a2 = bs_apply_W(B, dz.segment(B.offset, d));
                corr.segment(B.offset, d) = bs_jordan(B, a1, a2);
            }
            const double corr_tk = dtau * dkappa;
            direction(sigma, corr, corr_tk, dx, dy, dz, ds, dtau, dkappa);
        } else {
            sigma = 0.8;
            direction(sigma, VectorXd::Zero(P.q), 0.0, dx, dy, dz, ds, dtau, dkappa);
        }

        double alpha = std::min(1.0, opt.step_scale * max_step(ds, dz, dtau, dkappa));
        const bool finite = dx.allFinite() && dz.allFinite() && ds.allFinite() &&
                            std::isfinite(dtau) && std::isfinite(dkappa);
        // Backtrack until the new iterate is strictly interior (the max step
        // can be overestimated when a slice is ill-conditioned) and not too
        // far off center: every block's complementarity must keep a minimal
        // share of the new barrier mean, else the NT scaling degenerates.
        if (finite) {
            for (int bt = 0; bt < 60 && alpha > 1e-10; ++bt) {
                bool ok = tau + alpha * dtau > 0.0 && kappa + alpha * dkappa > 0.0;
                for (const auto& bd : P.blocks) {
                    if (!ok) break;
                    const int d = bd.cone.dim();
                    const VectorXd sn = s.segment(bd.offset, d) + alpha * ds.segment(bd.offset, d);
                    const VectorXd zn = z.segment(bd.offset, d) + alpha * dz.segment(bd.offset, d);
                    if (cone_min_eig(bd.cone, sn) <= 0.0 || cone_min_eig(bd.cone, zn) <= 0.0)
                        ok = false;
                }
                if (ok) break;
                alpha *= 0.8;
            }
        }
        if (!finite || alpha <= 1e-10) {
            if (!fallback_centering) {
                fallback_centering = true;  // retry this iterate with pure centering
                continue;
            }
            unscale_and_fill(SolveStatus::NumericalFailure);
            return sol;
        }
        fallback_centering = false;

        x += alpha * dx;
        if (P.p > 0) y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }
    sol.status = SolveStatus::NumericalFailure;
    return sol;
}

}  // namespace gridsyn::conic
