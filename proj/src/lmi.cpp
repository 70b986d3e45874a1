#include "gridsyn/lmi.hpp"

#include "gridsyn/errors.hpp"

#include <cmath>

namespace gridsyn::conic {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

void AffineMatrix::add_constant(const Eigen::MatrixXd& C) {
    if (C.rows() != side_ || C.cols() != side_)
        throw ValidationError("lmi: constant block size mismatch");
    const double asym = (C - C.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
    if (asym > 1e-12 * scale)
        throw ValidationError("lmi: constant block is not symmetric");
    constant_ += 0.5 * (C + C.transpose());
}

void AffineMatrix::add_constant_diag(double scale) {
    constant_.diagonal().array() += scale;
}

void AffineMatrix::add_entry(int i, int j, int var, double coeff) {
    if (i > j) std::swap(i, j);
    coeffs_[var].push_back({i, j, coeff});
}

void AffineMatrix::add_lyapunov(const Eigen::MatrixXd& A, const SymVar& Q, double scale) {
    // coefficient of q_ab in (A Q + Q A')_{ij} is A_ia [b==j] + A_ib [a==j]
    //                                            + [i==a] A_jb + [i==b] A_ja
    // accumulate by iterating target entries per variable
    const int n = side_;
    for (int b = 0; b < Q.side; ++b) {
        for (int a = 0; a <= b; ++a) {
            const int var = Q.at(a, b);
            // (A Q)_{ij} = sum_k A_ik Q_kj ; q_ab contributes to columns j=a (k=b)
            // and j=b (k=a). Q A' adds the transpose.
            for (int i = 0; i < n; ++i) {
                // column j = b from Q_ab at k=a, and column j = a from Q_ba at k=b
                double c_ib = scale * A(i, a);          // goes to (i, b)
                double c_ia = (a == b) ? 0.0 : scale * A(i, b);  // goes to (i, a)
                // symmetric accumulation: (A Q + Q A')_{ij} = (AQ)_{ij} + (AQ)_{ji}
                if (c_ib != 0.0) {
                    int ii = i, jj = b;
                    if (ii > jj) std::swap(ii, jj);
                    coeffs_[var].push_back({ii, jj, (ii == jj) ? 2.0 * c_ib : c_ib});
                }
                if (c_ia != 0.0) {
                    int ii = i, jj = a;
                    if (ii > jj) std::swap(ii, jj);
                    coeffs_[var].push_back({ii, jj, (ii == jj) ? 2.0 * c_ia : c_ia});
                }
            }
        }
    }
}

void AffineMatrix::add_input_product(const Eigen::MatrixXd& B, const MatVar& M,
                                     double scale) {
    // scale * (B M + (B M)') with B: side x M.rows
    if (B.rows() != side_ || B.cols() != M.rows || M.cols != side_)
        throw ValidationError("lmi: input product dimension mismatch");
    for (int r = 0; r < M.rows; ++r) {
        for (int c = 0; c < M.cols; ++c) {
            const int var = M.at(r, c);
            // (B M)_{ic} = B_{ir} m_rc: contributes at (i, c) for all i
            for (int i = 0; i < side_; ++i) {
                const double v = scale * B(i, r);
                if (v == 0.0) continue;
                int ii = i, jj = c;
                if (ii > jj) std::swap(ii, jj);
                coeffs_[var].push_back({ii, jj, (ii == jj) ? 2.0 * v : v});
            }
        }
    }
}

void AffineMatrix::add_sym(const SymVar& Q, double scale, int offset) {
    for (int b = 0; b < Q.side; ++b)
        for (int a = 0; a <= b; ++a)
            coeffs_[Q.at(a, b)].push_back({offset + a, offset + b, scale});
}

void AffineMatrix::add_scalar_diag(int var, double scale) {
    for (int i = 0; i < side_; ++i) coeffs_[var].push_back({i, i, scale});
}

void AffineMatrix::add_scalar_at(int i, int j, int var, double scale) {
    if (i > j) std::swap(i, j);
    coeffs_[var].push_back({i, j, scale});
}

Eigen::MatrixXd AffineMatrix::evaluate(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out = constant_;
    for (const auto& [var, trips] : coeffs_) {
        const double v = x(var);
        for (const auto& t : trips) {
            if (t.row == t.col) {
                out(t.row, t.col) += v * t.value;
            } else {
                out(t.row, t.col) += v * t.value;
                out(t.col, t.row) += v * t.value;
            }
        }
    }
    return out;
}

int ProgramBuilder::add_scalar() { return nvars_++; }

SymVar ProgramBuilder::add_symmetric(int side) {
    SymVar v;
    v.base = nvars_;
    v.side = side;
    nvars_ += side * (side + 1) / 2;
    return v;
}

MatVar ProgramBuilder::add_matrix(int rows, int cols) {
    MatVar v;
    v.base = nvars_;
    v.rows = rows;
    v.cols = cols;
    nvars_ += rows * cols;
    return v;
}

void ProgramBuilder::set_objective_term(int var, double coeff) {
    objective_.push_back({var, coeff});
}

void ProgramBuilder::add_objective(const LinExpr& e) {
    for (const auto& [v, c] : e.terms) objective_.push_back({v, c});
}

void ProgramBuilder::add_nonneg(const LinExpr& e) { nonneg_.push_back(e); }

void ProgramBuilder::add_equality(const LinExpr& e) { equalities_.push_back(e); }

void ProgramBuilder::add_psd(const AffineMatrix& block) {
    if (block.side() == 1) {
        // scalar block: route to the nonnegative cone
        LinExpr e;
        e.constant = block.constant()(0, 0);
        for (const auto& [var, trips] : block.coefficients())
            for (const auto& t : trips) e.add(var, t.value);
        nonneg_.push_back(e);
        return;
    }
    psd_.push_back(block);
}

void ProgramBuilder::add_soc(const LinExpr& head, const std::vector<LinExpr>& tail) {
    std::vector<LinExpr> rows;
    rows.push_back(head);
    for (const auto& e : tail) rows.push_back(e);
    socs_.push_back(std::move(rows));
}

ConicProgram ProgramBuilder::build() const {
    ConicProgram prog;
    prog.c = Eigen::VectorXd::Zero(nvars_);
    for (const auto& [v, c] : objective_) prog.c(v) += c;

    int row = 0;
    std::vector<Triplet> G;
    std::vector<double> h;
    auto push_expr = [&](const LinExpr& e, double scale) {
        h.push_back(scale * e.constant);
        for (const auto& [v, c] : e.terms) G.push_back({row, v, -scale * c});
        ++row;
    };

    if (!nonneg_.empty()) {
        prog.cones.push_back({ConeKind::Nonneg, static_cast<int>(nonneg_.size())});
        for (const auto& e : nonneg_) push_expr(e, 1.0);
    }
    for (const auto& soc : socs_) {
        prog.cones.push_back({ConeKind::Soc, static_cast<int>(soc.size())});
        for (const auto& e : soc) push_expr(e, 1.0);
    }
    for (const auto& blockm : psd_) {
        const int p = blockm.side();
        prog.cones.push_back({ConeKind::Psd, p});
        const int base = row;
        // h rows: svec of the constant
        Eigen::VectorXd hc = svec(blockm.constant());
        for (int k = 0; k < hc.size(); ++k) h.push_back(hc(k));
        row += static_cast<int>(hc.size());
        for (const auto& [var, trips] : blockm.coefficients()) {
            for (const auto& t : trips) {
                const int i = t.row, j = t.col;  // i <= j
                const int k = j * (j + 1) / 2 + i;
                const double scale = (i == j) ? 1.0 : kSqrt2;
                G.push_back({base + k, var, -scale * t.value});
            }
        }
    }
    prog.h = h.empty() ? Eigen::VectorXd(0)
                       : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                             h.data(), static_cast<Eigen::Index>(h.size())));
    prog.ineq = std::move(G);

    // equalities
    std::vector<Triplet> A;
    std::vector<double> b;
    int erow = 0;
    for (const auto& e : equalities_) {
        b.push_back(-e.constant);
        for (const auto& [v, c] : e.terms) A.push_back({erow, v, c});
        ++erow;
    }
    prog.b = b.empty() ? Eigen::VectorXd(0)
                       : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                             b.data(), static_cast<Eigen::Index>(b.size())));
    prog.eq = std::move(A);
    prog.validate();
    return prog;
}

ConicProgram lmi_to_standard_form(const std::vector<AffineMatrix>& blocks,
                                  const LinExpr& objective, int num_vars,
                                  const std::vector<LinExpr>& scalar_bounds) {
    ProgramBuilder pb;
    while (pb.num_vars() < num_vars) pb.add_scalar();
    pb.add_objective(objective);
    for (const auto& e : scalar_bounds) pb.add_nonneg(e);
    for (const auto& blk : blocks) pb.add_psd(blk);
    return pb.build();
}

}  // namespace gridsyn::conic
