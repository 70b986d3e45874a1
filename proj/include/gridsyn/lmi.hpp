#pragma once

#include "gridsyn/conic.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace gridsyn::conic {

// Modeling layer that compiles affine matrix inequalities, second-order-cone
// epigraphs, and scalar bounds into the standard-form ConicProgram.
//
// Decision variables are plain scalars in a flat vector. Symmetric matrix
// variables store their upper triangle (column-major) as unscaled entries;
// the sqrt(2) svec packing applies only to cone slacks inside the solver.

struct SymVar {
    int base = -1;
    int side = 0;
    // index of entry (i,j); symmetric access
    int at(int i, int j) const {
        if (i > j) std::swap(i, j);
        return base + j * (j + 1) / 2 + i;
    }
};

struct MatVar {
    int base = -1;
    int rows = 0, cols = 0;
    int at(int r, int c) const { return base + r * cols + c; }
};

// Affine scalar expression: constant + sum coeff_k * x_k
struct LinExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;

    LinExpr& add(int var, double coeff) {
        terms.push_back({var, coeff});
        return *this;
    }
    LinExpr& operator+=(double c) {
        constant += c;
        return *this;
    }
    static LinExpr var(int v, double coeff = 1.0) {
        LinExpr e;
        e.add(v, coeff);
        return e;
    }
    static LinExpr of(double c) {
        LinExpr e;
        e.constant = c;
        return e;
    }
};

// Affine symmetric-matrix expression C + sum x_k * E_k with sparse E_k.
class AffineMatrix {
  public:
    explicit AffineMatrix(int side)
        : side_(side), constant_(Eigen::MatrixXd::Zero(side, side)) {}

    int side() const { return side_; }

    // Checks symmetry of C to 1e-12 relative asymmetry; throws beyond that.
    void add_constant(const Eigen::MatrixXd& C);
    void add_constant_diag(double scale);

    // adds coeff at (i,j) and, when i != j, at (j,i)
    void add_entry(int i, int j, int var, double coeff);

    // scale * (A Q + Q A') placed at the given row/col offset
    void add_lyapunov(const Eigen::MatrixXd& A, const SymVar& Q, double scale = 1.0);
    // scale * (B M + M' B'), M a rectangular variable, B side x M.rows
    void add_input_product(const Eigen::MatrixXd& B, const MatVar& M, double scale = 1.0);
    // scale * Q embedded at diagonal offset
    void add_sym(const SymVar& Q, double scale = 1.0, int offset = 0);
    // scale * x * I
    void add_scalar_diag(int var, double scale = 1.0);
    // scale * v * E_{ii}
    void add_scalar_at(int i, int j, int var, double scale = 1.0);

    const Eigen::MatrixXd& constant() const { return constant_; }
    const std::map<int, std::vector<Triplet>>& coefficients() const { return coeffs_; }

    // Evaluate the expression at a flat variable vector.
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

  private:
    int side_;
    Eigen::MatrixXd constant_;
    // var -> list of (i, j, coeff) with i <= j canonical
    std::map<int, std::vector<Triplet>> coeffs_;
};

class ProgramBuilder {
  public:
    int add_scalar();
    SymVar add_symmetric(int side);
    MatVar add_matrix(int rows, int cols);
    int num_vars() const { return nvars_; }

    void set_objective_term(int var, double coeff);
    void add_objective(const LinExpr& e);

    void add_nonneg(const LinExpr& e);                   // e >= 0
    void add_equality(const LinExpr& e);                 // e == 0
    void add_psd(const AffineMatrix& block);             // block >= 0 (PSD)
    // ||tail|| <= head elementwise-affine second-order cone
    void add_soc(const LinExpr& head, const std::vector<LinExpr>& tail);

    ConicProgram build() const;

  private:
    int nvars_ = 0;
    std::vector<std::pair<int, double>> objective_;
    std::vector<LinExpr> nonneg_;
    std::vector<LinExpr> equalities_;
    std::vector<AffineMatrix> psd_;
    std::vector<std::vector<LinExpr>> socs_;  // head first
};

// Compiles PSD blocks plus scalar lower bounds (expr >= 0) over a shared
// variable vector into a standard-form program minimizing the objective.
ConicProgram lmi_to_standard_form(const std::vector<AffineMatrix>& blocks,
                                  const LinExpr& objective, int num_vars,
                                  const std::vector<LinExpr>& scalar_bounds = {});

}  // namespace gridsyn::conic
