#pragma once

#include <map>
#include <optional>

#include "koopgen/dataset.hpp"
#include "koopgen/dictionary.hpp"

namespace koopgen {

// Continuous-time bilinear model zdot = (K0 + sum_i u_i B_i) z.
struct GeneratorModel {
    Matrix k0;
    std::vector<Matrix> b;  // one per input channel
    Dictionary dictionary = Dictionary::identity(1);
    Box input_box;

    int dim() const { return static_cast<int>(k0.rows()); }
    int input_dim() const { return static_cast<int>(b.size()); }
    Matrix at(const Vector& u) const;  // K0 + sum u_i B_i
    void validate() const;
};

// Discrete-time bilinear model z+ = (K0dt + sum_i u_i Bdt_i) z over dt.
struct OperatorModel {
    Matrix k0dt;
    std::vector<Matrix> bdt;
    double dt = 0.0;
    Dictionary dictionary = Dictionary::identity(1);
    Box input_box;

    int dim() const { return static_cast<int>(k0dt.rows()); }
    int input_dim() const { return static_cast<int>(bdt.size()); }
    Matrix at(const Vector& u) const;
    void validate() const;
};

// Diagnostics attached to every fit.
struct FitInfo {
    double residual = 0.0;       // empirical squared error sum_j ||e_j||^2
    int numerical_rank = 0;      // rank of Psi_{X,U} at the pinv cutoff
    int rows = 0;                // n_o * (1 + n_c)
    int columns = 0;             // number of samples m
    bool rank_deficient = false; // rank < rows
    std::string warning;
};

struct LiftedMatrices {
    Matrix psi_xu;                      // (n_o * (1 + n_c)) x m
    std::optional<Matrix> psi_xtilde;   // n_o x m, when successors exist
    std::optional<Matrix> psi_dot;      // n_o x m, when a derivative method was requested
};

struct FiniteDifferenceStencil {
    std::vector<std::pair<int, double>> taps;  // (offset k, coefficient c_k)
    std::string name;

    // (psi(xnext) - psi(x)) / dt; the stencil under which discrete and
    // continuous fits coincide.
    static FiniteDifferenceStencil forward();
    static FiniteDifferenceStencil central3();
    static FiniteDifferenceStencil central5();
};

struct DerivativeMethod {
    enum Kind { ChainRule, FiniteDifference } kind = ChainRule;
    FiniteDifferenceStencil stencil;

    static DerivativeMethod chain_rule() { return {ChainRule, {}}; }
    static DerivativeMethod finite_difference(FiniteDifferenceStencil s) {
        return {FiniteDifference, std::move(s)};
    }
};

// Psi_{X,U} column j = [psi(x_j); u_j kron psi(x_j)], plus the successor and
// derivative matrices when available/requested.
LiftedMatrices assemble_lifted(const Dictionary& dict, const TrajectoryDataset& data,
                               const std::optional<DerivativeMethod>& derivatives = {});

// Column j = D_x psi(x_j) xdot_j (chain rule) or the stencil combination
// (1/dt) sum_k c_k psi(x at offset k) along the sample's trajectory.
Matrix estimate_observable_derivatives(const Dictionary& dict,
                                       const TrajectoryDataset& data,
                                       const DerivativeMethod& method);

// [K0 B_1 ... B_nc] = PsiDot_{X,U} (Psi_{X,U})^+
GeneratorModel fit_generator(const Dictionary& dict, const TrajectoryDataset& data,
                             const DerivativeMethod& method, double rtol = 1e-10,
                             FitInfo* info = nullptr);

// [K0dt Bdt_1 ... Bdt_nc] = Psi_{Xtilde,U} (Psi_{X,U})^+
OperatorModel fit_operators(const Dictionary& dict, const TrajectoryDataset& data,
                            double rtol = 1e-10, FitInfo* info = nullptr);

struct SwitchedFamily {
    std::vector<std::pair<Vector, Matrix>> operators;  // per-level K^dt
    OperatorModel derived;                             // symmetric-difference model
};

// Per-level EDMD operators K^dt_ubar = Psi_Xtilde Psi_X^+ plus the derived
// bilinear model: for symmetric two-level inputs {-ubar e_i, +ubar e_i},
// K0dt = mean of the level midpoints and Bdt_i = (K_+ - K_-) / (2 ubar).
SwitchedFamily fit_switched_family(const Dictionary& dict,
                                   const std::vector<std::pair<Vector, TrajectoryDataset>>& datasets,
                                   double rtol = 1e-10);

}  // namespace koopgen
