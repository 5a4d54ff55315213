#include "koopgen/edmd.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "koopgen/numerics.hpp"

namespace koopgen {

Matrix GeneratorModel::at(const Vector& u) const {
    if (static_cast<size_t>(u.size()) != b.size())
        throw std::invalid_argument("GeneratorModel::at: input dimension mismatch");
    Matrix k = k0;
    for (size_t i = 0; i < b.size(); ++i) k += u[static_cast<Eigen::Index>(i)] * b[i];
    return k;
}

void GeneratorModel::validate() const {
    const Eigen::Index n = k0.rows();
    if (k0.cols() != n || !all_finite(k0))
        throw std::invalid_argument("GeneratorModel: K0 must be square and finite");
    for (const Matrix& bi : b)
        if (bi.rows() != n || bi.cols() != n || !all_finite(bi))
            throw std::invalid_argument("GeneratorModel: B matrices must match K0 and be finite");
}

Matrix OperatorModel::at(const Vector& u) const {
    if (static_cast<size_t>(u.size()) != bdt.size())
        throw std::invalid_argument("OperatorModel::at: input dimension mismatch");
    Matrix k = k0dt;
    for (size_t i = 0; i < bdt.size(); ++i) k += u[static_cast<Eigen::Index>(i)] * bdt[i];
    return k;
}

void OperatorModel::validate() const {
    const Eigen::Index n = k0dt.rows();
    if (k0dt.cols() != n || !all_finite(k0dt))
        throw std::invalid_argument("OperatorModel: K0dt must be square and finite");
    for (const Matrix& bi : bdt)
        if (bi.rows() != n || bi.cols() != n || !all_finite(bi))
            throw std::invalid_argument("OperatorModel: B matrices must match K0dt and be finite");
    if (!(dt > 0.0)) throw std::invalid_argument("OperatorModel: dt must be positive");
}

FiniteDifferenceStencil FiniteDifferenceStencil::forward() {
    return {{{0, -1.0}, {1, 1.0}}, "forward"};
}

FiniteDifferenceStencil FiniteDifferenceStencil::central3() {
    return {{{-1, -0.5}, {1, 0.5}}, "central3"};
}

FiniteDifferenceStencil FiniteDifferenceStencil::central5() {
    return {{{-2, 1.0 / 12.0}, {-1, -8.0 / 12.0}, {1, 8.0 / 12.0}, {2, -1.0 / 12.0}},
            "central5"};
}

LiftedMatrices assemble_lifted(const Dictionary& dict, const TrajectoryDataset& data,
                               const std::optional<DerivativeMethod>& derivatives) {
    data.validate();
    const int n_o = dict.output_dim();
    const int n_c = data.input_dim();
    const int m = static_cast<int>(data.samples.size());

    LiftedMatrices out;
    out.psi_xu.resize(n_o * (1 + n_c), m);
    const bool pairs = data.has_pairs();
    if (pairs) out.psi_xtilde.emplace(n_o, m);

    for (int j = 0; j < m; ++j) {
        const Sample& s = data.samples[j];
        Vector psi = dict.eval(s.x);
        out.psi_xu.block(0, j, n_o, 1) = psi;
        for (int i = 0; i < n_c; ++i)
            out.psi_xu.block(n_o * (1 + i), j, n_o, 1) = s.u[i] * psi;
        if (pairs) out.psi_xtilde->col(j) = dict.eval(*s.xnext);
    }

    if (derivatives)
        out.psi_dot = estimate_observable_derivatives(dict, data, *derivatives);
    return out;
}

Matrix estimate_observable_derivatives(const Dictionary& dict,
                                       const TrajectoryDataset& data,
                                       const DerivativeMethod& method) {
    data.validate();
    const int n_o = dict.output_dim();
    const int m = static_cast<int>(data.samples.size());
    Matrix psi_dot(n_o, m);

    if (method.kind == DerivativeMethod::ChainRule) {
        if (!dict.differentiable())
            throw std::invalid_argument(
                "estimate_observable_derivatives: chain rule needs a differentiable dictionary");
        for (int j = 0; j < m; ++j) {
            const Sample& s = data.samples[j];
            if (!s.xdot)
                throw std::invalid_argument(
                    "estimate_observable_derivatives: sample " + std::to_string(j) +
                    " lacks the state derivative required by the chain rule");
            psi_dot.col(j) = dict.jacobian(s.x) * (*s.xdot);
        }
        return psi_dot;
    }

    if (!(data.dt > 0.0))
        throw std::invalid_argument(
            "estimate_observable_derivatives: finite differences need the dataset dt");
    if (method.stencil.taps.empty())
        throw std::invalid_argument("estimate_observable_derivatives: empty stencil");

    // Neighbor lookup along trajectories.
    std::map<std::pair<int, int>, const Sample*> by_position;
    for (const Sample& s : data.samples) by_position[{s.traj_id, s.step_idx}] = &s;

    for (int j = 0; j < m; ++j) {
        const Sample& s = data.samples[j];
        Vector acc = Vector::Zero(n_o);
        for (const auto& [offset, coeff] : method.stencil.taps) {
            if (offset == 0) {
                acc += coeff * dict.eval(s.x);
                continue;
            }
            if (offset == 1 && s.xnext) {
                acc += coeff * dict.eval(*s.xnext);
                continue;
            }
            auto it = by_position.find({s.traj_id, s.step_idx + offset});
            if (it == by_position.end())
                throw std::invalid_argument(
                    "estimate_observable_derivatives: sample " + std::to_string(j) +
                    " (trajectory " + std::to_string(s.traj_id) + ", step " +
                    std::to_string(s.step_idx) + ") has no neighbor at offset " +
                    std::to_string(offset));
            acc += coeff * dict.eval(it->second->x);
        }
        psi_dot.col(j) = acc / data.dt;
    }
    return psi_dot;
}

namespace {

struct RegressionResult {
    Matrix coeffs;  // n_o x (n_o * (1 + n_c))
    FitInfo info;
};

// Shared least-squares core: coeffs = target * pinv(Psi_{X,U}).
RegressionResult lifted_regression(const Matrix& psi_xu, const Matrix& target,
                                   int n_o, double rtol) {
    SvdFactorization f = svd_factorize(psi_xu, rtol);
    RegressionResult r;
    r.info.rows = static_cast<int>(psi_xu.rows());
    r.info.columns = static_cast<int>(psi_xu.cols());
    r.info.numerical_rank = f.numerical_rank();
    r.info.rank_deficient = r.info.numerical_rank < r.info.rows;

    if (r.info.numerical_rank < n_o)
        throw FitFailure("fit: numerical rank " + std::to_string(r.info.numerical_rank) +
                         " of the lifted data matrix collapsed below the dictionary size " +
                         std::to_string(n_o) + " (rows " + std::to_string(r.info.rows) +
                         ", samples " + std::to_string(r.info.columns) + ")");
    if (r.info.columns < r.info.rows)
        r.info.warning = "fewer samples (" + std::to_string(r.info.columns) +
                         ") than lifted rows (" + std::to_string(r.info.rows) +
                         "); full row rank is impossible";
    else if (r.info.rank_deficient)
        r.info.warning = "lifted data matrix is rank deficient (rank " +
                         std::to_string(r.info.numerical_rank) + " of " +
                         std::to_string(r.info.rows) + ")";

    Vector inv_sigma = Vector::Zero(f.sigma.size());
    for (Eigen::Index i = 0; i < f.sigma.size(); ++i)
        if (f.sigma[i] > f.rank_tol) inv_sigma[i] = 1.0 / f.sigma[i];
    Matrix pinv_psi = f.v * inv_sigma.asDiagonal() * f.u.transpose();

    r.coeffs = target * pinv_psi;
    r.info.residual = (target - r.coeffs * psi_xu).squaredNorm();
    return r;
}

}  // namespace

GeneratorModel fit_generator(const Dictionary& dict, const TrajectoryDataset& data,
                             const DerivativeMethod& method, double rtol, FitInfo* info) {
    LiftedMatrices lifted = assemble_lifted(dict, data, method);
    const int n_o = dict.output_dim();
    const int n_c = data.input_dim();

    RegressionResult r = lifted_regression(lifted.psi_xu, *lifted.psi_dot, n_o, rtol);
    if (info) *info = r.info;

    GeneratorModel model;
    model.k0 = r.coeffs.leftCols(n_o);
    model.b.reserve(n_c);
    for (int i = 0; i < n_c; ++i)
        model.b.push_back(r.coeffs.middleCols(n_o * (1 + i), n_o));
    model.dictionary = dict;
    model.input_box = data.input_box;
    model.validate();
    return model;
}

OperatorModel fit_operators(const Dictionary& dict, const TrajectoryDataset& data,
                            double rtol, FitInfo* info) {
    if (!data.has_pairs())
        throw std::invalid_argument("fit_operators: dataset has no snapshot pairs");
    LiftedMatrices lifted = assemble_lifted(dict, data);
    const int n_o = dict.output_dim();
    const int n_c = data.input_dim();

    RegressionResult r = lifted_regression(lifted.psi_xu, *lifted.psi_xtilde, n_o, rtol);
    if (info) *info = r.info;

    OperatorModel model;
    model.k0dt = r.coeffs.leftCols(n_o);
    model.bdt.reserve(n_c);
    for (int i = 0; i < n_c; ++i)
        model.bdt.push_back(r.coeffs.middleCols(n_o * (1 + i), n_o));
    model.dt = data.dt;
    model.dictionary = dict;
    model.input_box = data.input_box;
    model.validate();
    return model;
}

SwitchedFamily fit_switched_family(const Dictionary& dict,
                                   const std::vector<std::pair<Vector, TrajectoryDataset>>& datasets,
                                   double rtol) {
    if (datasets.empty())
        throw std::invalid_argument("fit_switched_family: no datasets");

    const double dt = datasets.front().second.dt;
    const int n_c = static_cast<int>(datasets.front().first.size());
    const int n_o = dict.output_dim();

    SwitchedFamily family;
    for (const auto& [level, data] : datasets) {
        if (!data.has_pairs())
            throw std::invalid_argument("fit_switched_family: dataset lacks snapshot pairs");
        if (std::abs(data.dt - dt) > 1e-12 * std::max(1.0, std::abs(dt)))
            throw std::invalid_argument("fit_switched_family: datasets disagree on dt");
        if (level.size() != n_c)
            throw std::invalid_argument("fit_switched_family: inconsistent input dimensions");
        for (const Sample& s : data.samples)
            if ((s.u - level).cwiseAbs().maxCoeff() > 0.0)
                throw std::invalid_argument(
                    "fit_switched_family: dataset inputs must equal its fixed level");

        // Plain EDMD at the fixed level: K = Psi_Xtilde Psi_X^+.
        Matrix psi_x(n_o, data.samples.size());
        Matrix psi_xt(n_o, data.samples.size());
        for (size_t j = 0; j < data.samples.size(); ++j) {
            psi_x.col(static_cast<Eigen::Index>(j)) = dict.eval(data.samples[j].x);
            psi_xt.col(static_cast<Eigen::Index>(j)) = dict.eval(*data.samples[j].xnext);
        }
        family.operators.emplace_back(level, lstsq(psi_xt, psi_x, rtol));
    }

    // Derived bilinear model anchored at u = 0: per channel i, the symmetric
    // pair {-a e_i, +a e_i} gives Bdt_i = (K_+ - K_-) / (2a) and a midpoint
    // estimate of K0dt; a zero-level operator, when present, is a direct one.
    std::vector<Matrix> k0_estimates;
    std::vector<Matrix> bdt(n_c);
    std::vector<bool> channel_done(n_c, false);

    const Matrix* k_zero = nullptr;
    for (const auto& [level, k] : family.operators)
        if (level.cwiseAbs().maxCoeff() == 0.0) {
            k_zero = &k;
            k0_estimates.push_back(k);
        }

    for (int i = 0; i < n_c; ++i) {
        auto on_axis = [&](const Vector& level) {
            for (int c = 0; c < n_c; ++c)
                if (c != i && level[c] != 0.0) return false;
            return level[i] != 0.0;
        };
        const Matrix* k_plus = nullptr;
        double amp = 0.0;
        for (const auto& [level, k] : family.operators)
            if (on_axis(level) && level[i] > 0.0) { k_plus = &k; amp = level[i]; break; }
        const Matrix* k_minus = nullptr;
        if (k_plus)
            for (const auto& [level, k] : family.operators)
                if (on_axis(level) && level[i] == -amp) { k_minus = &k; break; }

        if (k_plus && k_minus) {
            bdt[i] = (*k_plus - *k_minus) / (2.0 * amp);
            k0_estimates.push_back(0.5 * (*k_plus + *k_minus));
            channel_done[i] = true;
        } else if (k_plus && k_zero) {
            bdt[i] = (*k_plus - *k_zero) / amp;
            channel_done[i] = true;
        }
    }

    for (int i = 0; i < n_c; ++i)
        if (!channel_done[i])
            throw std::invalid_argument(
                "fit_switched_family: channel " + std::to_string(i) +
                " needs a symmetric level pair or a level plus the zero level");
    if (k0_estimates.empty())
        throw std::invalid_argument("fit_switched_family: no estimate of the zero-input operator");

    Matrix k0dt = Matrix::Zero(n_o, n_o);
    for (const Matrix& k : k0_estimates) k0dt += k;
    k0dt /= static_cast<double>(k0_estimates.size());

    family.derived.k0dt = std::move(k0dt);
    family.derived.bdt = std::move(bdt);
    family.derived.dt = dt;
    family.derived.dictionary = dict;
    family.derived.input_box = datasets.front().second.input_box;
    family.derived.validate();
    return family;
}

}  // namespace koopgen
