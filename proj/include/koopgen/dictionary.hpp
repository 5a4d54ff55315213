#pragma once

#include <deque>
#include <optional>

#include "koopgen/common.hpp"

namespace koopgen {

enum class BasisKind { Identity, Monomial, Rbf, FourierPair };

std::string basis_kind_name(BasisKind kind);
BasisKind parse_basis_kind(const std::string& name);

// Observable dictionary psi: R^n -> R^{n_o} with batch evaluation and an
// analytic Jacobian. Monomials are enumerated in graded lexicographic order
// with the constant term first, so model files are reproducible.
//
// A dictionary may be flagged as a delay-embedding composition: the input is
// then the stack of the q most recent raw observations (newest first) and the
// Jacobian is unavailable (the delayed stream is not differentiable in the
// instantaneous state).
class Dictionary {
public:
    static Dictionary identity(int dim);
    static Dictionary monomials(int dim, int degree);
    // Gaussian RBFs exp(-||x - c||^2 / (2 s^2)), one per center column.
    static Dictionary rbf(Matrix centers, double shape);
    // (cos kx, sin kx) pairs for k = 1..harmonics on the circle (n = 1).
    static Dictionary fourier_pair(int harmonics = 1);

    Dictionary with_delay(int depth) const;

    BasisKind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    int degree() const { return degree_; }
    int harmonics() const { return harmonics_; }
    double shape() const { return shape_; }
    const Matrix& centers() const { return centers_; }
    int delay_depth() const { return delay_depth_; }
    bool differentiable() const { return delay_depth_ == 1; }

    // Exponent rows of the monomial basis (n_o x n), graded lex order.
    const std::vector<std::vector<int>>& monomial_exponents() const { return exponents_; }

    Vector eval(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;
    // Columns of X are states; column j of the result is eval(X.col(j)).
    Matrix eval_batch(const Matrix& x_batch) const;

    // Indices of dictionary entries equal to the plain state coordinates
    // x_1..x_n, when the basis contains them (identity, monomials of
    // degree >= 1). Empty otherwise.
    std::vector<int> state_coordinate_indices() const;

    bool same_descriptor(const Dictionary& other) const;
    std::string describe() const;

private:
    Dictionary() = default;

    BasisKind kind_ = BasisKind::Identity;
    int input_dim_ = 0;
    int output_dim_ = 0;
    int degree_ = 0;      // monomial
    int harmonics_ = 0;   // fourier_pair
    double shape_ = 1.0;  // rbf
    Matrix centers_;      // rbf: input_dim x k
    int delay_depth_ = 1;
    std::vector<std::vector<int>> exponents_;
};

// First k points of the Halton sequence (prime bases 2, 3, 5, ...) mapped
// affinely into the box.
std::vector<Vector> halton_rbf_centers(int dim, int k, const Box& bounds);

// Ring of the last `depth` raw observations; emits the stacked vector
// (newest, ..., oldest) once full. Single-owner mutable state.
class DelayBuffer {
public:
    DelayBuffer(int depth, int raw_dim);

    void push(const Vector& obs);
    bool ready() const { return static_cast<int>(ring_.size()) == depth_; }
    Vector stacked() const;

    int depth() const { return depth_; }
    int raw_dim() const { return raw_dim_; }

private:
    int depth_;
    int raw_dim_;
    std::deque<Vector> ring_;  // front = newest
};

}  // namespace koopgen
