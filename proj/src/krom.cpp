#include "koopgen/krom.hpp"

#include <cmath>

namespace koopgen {

void PiecewiseConstantSignal::validate() const {
    if (inputs.empty())
        throw std::invalid_argument("PiecewiseConstantSignal: at least one input required");
    if (!(dt > 0.0))
        throw std::invalid_argument("PiecewiseConstantSignal: dt must be positive");
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (!all_finite(inputs[i]))
            throw std::invalid_argument("PiecewiseConstantSignal: non-finite input " +
                                        std::to_string(i));
        if (box.dim() == inputs[i].size() && !box.contains(inputs[i], 1e-12))
            throw std::invalid_argument("PiecewiseConstantSignal: input " + std::to_string(i) +
                                        " outside the box");
    }
}

namespace {

void check_signal_dt(double model_dt, double signal_dt) {
    if (std::abs(model_dt - signal_dt) > 1e-12 * std::max(1.0, std::abs(model_dt)))
        throw std::invalid_argument("prediction: signal dt does not match the model dt");
}

}  // namespace

std::vector<Vector> predict_discrete(const OperatorModel& model, const Vector& z0,
                                     const PiecewiseConstantSignal& u_seq) {
    u_seq.validate();
    check_signal_dt(model.dt, u_seq.dt);
    if (z0.size() != model.dim())
        throw std::invalid_argument("predict_discrete: z0 dimension mismatch");

    std::vector<Vector> traj;
    traj.reserve(u_seq.inputs.size() + 1);
    traj.push_back(z0);
    for (const Vector& u : u_seq.inputs) {
        if (u.size() != model.input_dim())
            throw std::invalid_argument("predict_discrete: input dimension mismatch");
        Vector z = model.k0dt * traj.back();
        for (int i = 0; i < model.input_dim(); ++i)
            z += u[i] * (model.bdt[i] * traj.back());
        traj.push_back(std::move(z));
    }
    return traj;
}

std::vector<Vector> predict_continuous(const GeneratorModel& model, const Vector& z0,
                                       const PiecewiseConstantSignal& u_seq,
                                       IntegrationScheme scheme) {
    u_seq.validate();
    if (z0.size() != model.dim())
        throw std::invalid_argument("predict_continuous: z0 dimension mismatch");

    std::vector<Vector> traj;
    traj.reserve(u_seq.inputs.size() + 1);
    traj.push_back(z0);
    for (const Vector& u : u_seq.inputs) {
        if (u.size() != model.input_dim())
            throw std::invalid_argument("predict_continuous: input dimension mismatch");
        if (scheme == IntegrationScheme::Euler) {
            // Matches predict_discrete of the Euler-converted operator model
            // step for step: z + dt (K0 z) + sum_i u_i (dt B_i z).
            Vector z = traj.back() + u_seq.dt * (model.k0 * traj.back());
            for (int i = 0; i < model.input_dim(); ++i)
                z += u[i] * ((u_seq.dt * model.b[i]) * traj.back());
            traj.push_back(std::move(z));
        } else {
            traj.push_back(integrate_bilinear(model.k0, model.b, u, traj.back(), u_seq.dt,
                                              scheme));
        }
    }
    return traj;
}

OperatorModel generator_to_operator(const GeneratorModel& model, double dt) {
    if (!(dt > 0.0))
        throw std::invalid_argument("generator_to_operator: dt must be positive");
    OperatorModel out;
    out.k0dt = Matrix::Identity(model.dim(), model.dim()) + dt * model.k0;
    out.bdt.reserve(model.b.size());
    for (const Matrix& bi : model.b) out.bdt.push_back(dt * bi);
    out.dt = dt;
    out.dictionary = model.dictionary;
    out.input_box = model.input_box;
    return out;
}

GeneratorModel operator_to_generator(const OperatorModel& model) {
    if (!(model.dt > 0.0))
        throw std::invalid_argument("operator_to_generator: model dt must be positive");
    GeneratorModel out;
    out.k0 = (model.k0dt - Matrix::Identity(model.dim(), model.dim())) / model.dt;
    out.b.reserve(model.bdt.size());
    for (const Matrix& bi : model.bdt) out.b.push_back(bi / model.dt);
    out.dictionary = model.dictionary;
    out.input_box = model.input_box;
    return out;
}

void ModelBank::validate() const {
    if (regions.size() != models.size() || regions.empty())
        throw std::invalid_argument("ModelBank: regions and models must pair up");
    for (const Box& r : regions)
        if (r.dim() != input_box.dim())
            throw std::invalid_argument("ModelBank: region dimension mismatch");
}

int bank_select(const ModelBank& bank, const Vector& u) {
    bank.validate();
    if (!bank.input_box.contains(u))
        throw OutOfDomain("bank_select: input outside the bank's control domain");
    for (size_t i = 0; i < bank.regions.size(); ++i)
        if (bank.regions[i].contains(u)) return static_cast<int>(i);
    throw OutOfDomain("bank_select: regions do not cover the queried input");
}

std::vector<Vector> lift_and_predict(const AnyModel& model, const Dictionary& dict,
                                     const Vector& x0, const PiecewiseConstantSignal& u_seq,
                                     IntegrationScheme scheme) {
    const Dictionary& model_dict = std::visit(
        [](const auto& m) -> const Dictionary& { return m.dictionary; }, model);
    if (!model_dict.same_descriptor(dict))
        throw std::invalid_argument("lift_and_predict: dictionary descriptor mismatch");

    Vector z0 = dict.eval(x0);
    if (std::holds_alternative<OperatorModel>(model))
        return predict_discrete(std::get<OperatorModel>(model), z0, u_seq);
    return predict_continuous(std::get<GeneratorModel>(model), z0, u_seq, scheme);
}

}  // namespace koopgen
