#pragma once

#include <variant>

#include "koopgen/edmd.hpp"
#include "koopgen/numerics.hpp"

namespace koopgen {

// Zero-order-hold input signal u_0 ... u_{l-1} over intervals of length dt.
struct PiecewiseConstantSignal {
    double dt = 0.0;
    std::vector<Vector> inputs;
    Box box;

    int length() const { return static_cast<int>(inputs.size()); }
    void validate() const;
};

// z_{k+1} = (K0dt + sum_i [u_k]_i Bdt_i) z_k; returns z_0 ... z_l.
std::vector<Vector> predict_discrete(const OperatorModel& model, const Vector& z0,
                                     const PiecewiseConstantSignal& u_seq);

// Integrates the frozen bilinear system over each hold interval.
std::vector<Vector> predict_continuous(const GeneratorModel& model, const Vector& z0,
                                       const PiecewiseConstantSignal& u_seq,
                                       IntegrationScheme scheme = IntegrationScheme::Exact);

// First-order (Euler) correspondence: K0dt = I + dt K0, Bdt = dt B.
OperatorModel generator_to_operator(const GeneratorModel& model, double dt);
// Inverse map: K0 = (K0dt - I) / dt, B = Bdt / dt.
GeneratorModel operator_to_generator(const OperatorModel& model);

using AnyModel = std::variant<OperatorModel, GeneratorModel>;

// Control-domain partition with one locally valid surrogate per region.
// Regions are axis-aligned boxes; ties go to the lowest region index.
struct ModelBank {
    std::vector<Box> regions;
    std::vector<AnyModel> models;
    Box input_box;

    void validate() const;
};

// Index of the unique region containing u (lowest index wins on boundaries).
int bank_select(const ModelBank& bank, const Vector& u);

// z0 = psi(x0), then the matching prediction routine.
std::vector<Vector> lift_and_predict(const AnyModel& model, const Dictionary& dict,
                                     const Vector& x0, const PiecewiseConstantSignal& u_seq,
                                     IntegrationScheme scheme = IntegrationScheme::Exact);

}  // namespace koopgen
