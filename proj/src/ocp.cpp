#include "koopgen/ocp.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>

namespace koopgen {

StageCostSchedule StageCostSchedule::constant(Matrix q, Matrix r, Vector a) {
    StageCostSchedule s;
    s.q = [q = std::move(q)](double) { return q; };
    s.r = [r = std::move(r)](double) { return r; };
    s.a = [a = std::move(a)](double) { return a; };
    return s;
}

void QuadraticStageCost::validate() const {
    auto check_symmetric = [](const Matrix& m, const char* who) {
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
            throw std::invalid_argument(std::string(who) + " must be symmetric");
    };
    for (size_t i = 1; i < q.size(); ++i) {
        check_symmetric(q[i], "stage cost Q");
        Eigen::SelfAdjointEigenSolver<Matrix> es(q[i], Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("stage cost Q must be positive semidefinite");
        if (a[i].size() != q[i].rows())
            throw std::invalid_argument("stage cost reference dimension mismatch");
    }
    for (const Matrix& ri : r) {
        check_symmetric(ri, "stage cost R");
        Eigen::SelfAdjointEigenSolver<Matrix> es(ri, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < 1e-12)
            throw std::invalid_argument("stage cost R must be positive definite");
    }
}

QuadraticStageCost evaluate_cost(const StageCostSchedule& schedule, double t0,
                                 int horizon, double dt) {
    if (!schedule.q || !schedule.r || !schedule.a)
        throw std::invalid_argument("evaluate_cost: incomplete schedule");
    QuadraticStageCost cost;
    cost.q.resize(horizon + 1);
    cost.a.resize(horizon + 1);
    cost.r.resize(horizon);
    for (int i = 1; i <= horizon; ++i) {
        cost.q[i] = schedule.q(t0 + i * dt);
        cost.a[i] = schedule.a(t0 + i * dt);
    }
    cost.q[0] = cost.q[1];
    cost.a[0] = cost.a[1];
    for (int i = 0; i < horizon; ++i) cost.r[i] = schedule.r(t0 + i * dt);
    cost.validate();
    return cost;
}

int InputBasis::coeff_dim(int horizon, int n_c) const {
    if (kind == Indicator) return horizon * n_c;
    return (1 + 2 * harmonics) * n_c;
}

Matrix InputBasis::interval_map(int horizon, int n_c, double dt) const {
    const int rows = horizon * n_c;
    if (kind == Indicator) return Matrix::Identity(rows, rows);

    // Orthonormal basis on [0, T]: 1/sqrt(T), sqrt(2/T) cos(2 pi k t / T),
    // sqrt(2/T) sin(2 pi k t / T). Entry (i, k) is the average of phi_k over
    // interval i, computed from the exact antiderivatives.
    const double t_total = horizon * dt;
    const int per_channel = 1 + 2 * harmonics;
    Matrix map = Matrix::Zero(rows, per_channel * n_c);
    const double two_pi = 6.283185307179586476925286766559;
    for (int i = 0; i < horizon; ++i) {
        const double a = i * dt, b = (i + 1) * dt;
        Vector avg(per_channel);
        avg[0] = 1.0 / std::sqrt(t_total);
        for (int k = 1; k <= harmonics; ++k) {
            const double w = two_pi * k / t_total;
            const double scale = std::sqrt(2.0 / t_total) / (w * dt);
            avg[2 * k - 1] = scale * (std::sin(w * b) - std::sin(w * a));
            avg[2 * k] = scale * (std::cos(w * a) - std::cos(w * b));
        }
        for (int c = 0; c < n_c; ++c)
            for (int j = 0; j < per_channel; ++j)
                map(i * n_c + c, c * per_channel + j) = avg[j];
    }
    return map;
}

void OcpSpec::validate() const {
    if (horizon < 1) throw std::invalid_argument("OcpSpec: horizon must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("OcpSpec: dt must be positive");
    if (input_box.dim() < 1) throw std::invalid_argument("OcpSpec: empty input box");
}

Matrix DiscreteOcp::transition(const Vector& u) const {
    Matrix a = k0dt;
    for (int i = 0; i < n_c(); ++i) a += u[i] * bdt[i];
    return a;
}

std::vector<Vector> DiscreteOcp::unstack(const Vector& uhat) const {
    Vector stacked = umap * uhat;
    std::vector<Vector> u(horizon);
    for (int i = 0; i < horizon; ++i) u[i] = stacked.segment(i * n_c(), n_c());
    return u;
}

std::vector<Vector> DiscreteOcp::forward(const Vector& z0,
                                         const std::vector<Vector>& u) const {
    if (static_cast<int>(u.size()) != horizon)
        throw std::invalid_argument("DiscreteOcp::forward: input sequence length mismatch");
    std::vector<Vector> z;
    z.reserve(horizon + 1);
    z.push_back(z0);
    for (int i = 0; i < horizon; ++i) {
        Vector next = k0dt * z.back();
        for (int j = 0; j < n_c(); ++j) next += u[i][j] * (bdt[j] * z.back());
        z.push_back(std::move(next));
    }
    return z;
}

double DiscreteOcp::objective(const std::vector<Vector>& z,
                              const std::vector<Vector>& u) const {
    if (static_cast<int>(z.size()) != horizon + 1 ||
        static_cast<int>(u.size()) != horizon)
        throw std::invalid_argument("objective: trajectory/input length mismatch");
    double j = 0.0;
    for (int i = 0; i < horizon; ++i) {
        Vector dzv = z[i + 1] - cost.a[i + 1];
        j += dt * (dzv.dot(cost.q[i + 1] * dzv) + u[i].dot(cost.r[i] * u[i]));
    }
    return j;
}

std::vector<Vector> DiscreteOcp::adjoint(const std::vector<Vector>& z,
                                         const std::vector<Vector>& u) const {
    if (static_cast<int>(z.size()) != horizon + 1 ||
        static_cast<int>(u.size()) != horizon)
        throw std::invalid_argument("adjoint: trajectory/input length mismatch");
    std::vector<Vector> lambda(horizon + 1);
    lambda[horizon] = Vector::Zero(n_o());
    for (int i = horizon - 1; i >= 0; --i) {
        Vector gamma = 2.0 * (cost.q[i + 1] * (z[i + 1] - cost.a[i + 1]));
        lambda[i] = dt * gamma;
        if (i + 1 < horizon) lambda[i] += transition(u[i + 1]).transpose() * lambda[i + 1];
    }
    return lambda;
}

Matrix DiscreteOcp::interval_gradient(const std::vector<Vector>& z,
                                      const std::vector<Vector>& lambda,
                                      const std::vector<Vector>& u) const {
    Matrix grad(horizon, n_c());
    for (int i = 0; i < horizon; ++i) {
        Vector rho = 2.0 * (cost.r[i] * u[i]);
        for (int j = 0; j < n_c(); ++j)
            grad(i, j) = lambda[i].dot(bdt[j] * z[i]) + dt * rho[j];
    }
    return grad;
}

Vector DiscreteOcp::coeff_gradient(const Matrix& interval_grad) const {
    Vector stacked(horizon * n_c());
    for (int i = 0; i < horizon; ++i)
        stacked.segment(i * n_c(), n_c()) = interval_grad.row(i).transpose();
    return umap.transpose() * stacked;
}

DiscreteOcp resolve_ocp(const OcpSpec& spec, double t0,
                        const std::optional<Vector>& bank_key) {
    spec.validate();
    DiscreteOcp ocp;
    ocp.horizon = spec.horizon;
    ocp.dt = spec.dt;
    ocp.box = spec.input_box;

    const OcpModel* model = &spec.model;
    AnyModel selected;
    if (std::holds_alternative<ModelBank>(spec.model)) {
        const ModelBank& bank = std::get<ModelBank>(spec.model);
        Vector key = bank_key ? *bank_key : bank.input_box.center();
        selected = bank.models[bank_select(bank, key)];
        if (std::holds_alternative<OperatorModel>(selected)) {
            const OperatorModel& m = std::get<OperatorModel>(selected);
            ocp.k0dt = m.k0dt;
            ocp.bdt = m.bdt;
        } else {
            const GeneratorModel& g = std::get<GeneratorModel>(selected);
            ocp.k0dt = expm(spec.dt * g.k0);
            for (const Matrix& bi : g.b)
                ocp.bdt.push_back(0.5 * (expm(spec.dt * (g.k0 + bi)) -
                                         expm(spec.dt * (g.k0 - bi))));
        }
    } else if (std::holds_alternative<OperatorModel>(*model)) {
        const OperatorModel& m = std::get<OperatorModel>(*model);
        if (std::abs(m.dt - spec.dt) > 1e-12 * std::max(1.0, m.dt))
            throw std::invalid_argument("resolve_ocp: operator model dt differs from OCP dt");
        ocp.k0dt = m.k0dt;
        ocp.bdt = m.bdt;
    } else {
        const GeneratorModel& g = std::get<GeneratorModel>(*model);
        ocp.k0dt = expm(spec.dt * g.k0);
        for (const Matrix& bi : g.b)
            ocp.bdt.push_back(0.5 * (expm(spec.dt * (g.k0 + bi)) -
                                     expm(spec.dt * (g.k0 - bi))));
    }

    ocp.cost = evaluate_cost(spec.cost, t0, spec.horizon, spec.dt);
    ocp.umap = spec.basis.interval_map(spec.horizon, static_cast<int>(ocp.bdt.size()),
                                       spec.dt);
    return ocp;
}

double objective(const OcpSpec& spec, const std::vector<Vector>& z_traj,
                 const std::vector<Vector>& u_seq) {
    return resolve_ocp(spec).objective(z_traj, u_seq);
}

std::vector<Vector> solve_adjoint_discrete(const OcpSpec& spec,
                                           const std::vector<Vector>& z_traj,
                                           const std::vector<Vector>& u_seq) {
    return resolve_ocp(spec).adjoint(z_traj, u_seq);
}

Matrix objective_gradient(const OcpSpec& spec, const std::vector<Vector>& z_traj,
                          const std::vector<Vector>& lambda_traj,
                          const std::vector<Vector>& u_seq) {
    return resolve_ocp(spec).interval_gradient(z_traj, lambda_traj, u_seq);
}

// ---------------------------------------------------------------------------
// Projected limited-memory BFGS
// ---------------------------------------------------------------------------

namespace {

struct BoxProjector {
    Vector lo, hi;
    bool active = true;

    Vector operator()(const Vector& x) const {
        return active ? x.cwiseMax(lo).cwiseMin(hi).eval() : x;
    }
};

BoxProjector make_projector(const DiscreteOcp& ocp) {
    BoxProjector p;
    const int d = ocp.coeff_dim();
    // Coefficients coincide with interval inputs only for the indicator map.
    p.active = ocp.umap.rows() == ocp.umap.cols() &&
               ocp.umap.isIdentity(0.0);
    if (p.active) {
        p.lo.resize(d);
        p.hi.resize(d);
        for (int i = 0; i < ocp.horizon; ++i) {
            p.lo.segment(i * ocp.n_c(), ocp.n_c()) = ocp.box.lo;
            p.hi.segment(i * ocp.n_c(), ocp.n_c()) = ocp.box.hi;
        }
    }
    return p;
}

}  // namespace

BfgsResult bfgs_box(const DiscreteOcp& ocp, const Vector& z0, const Vector& uhat0,
                    const BfgsOptions& opts) {
    if (uhat0.size() != ocp.coeff_dim())
        throw std::invalid_argument("bfgs_box: coefficient dimension mismatch");

    BoxProjector project = make_projector(ocp);
    BfgsResult result;
    result.box_ignored = !project.active;

    auto eval = [&](const Vector& uhat, Vector* grad) {
        std::vector<Vector> u = ocp.unstack(uhat);
        std::vector<Vector> z = ocp.forward(z0, u);
        double j = ocp.objective(z, u);
        if (grad) {
            std::vector<Vector> lambda = ocp.adjoint(z, u);
            *grad = ocp.coeff_gradient(ocp.interval_gradient(z, lambda, u));
        }
        return j;
    };

    Vector x = project(uhat0);
    Vector g;
    double f = eval(x, &g);
    ++result.evaluations;
    if (!std::isfinite(f)) {
        result.uhat = x;
        result.objective = f;
        result.line_search_failure = true;
        return result;
    }

    std::vector<Vector> mem_s, mem_y;
    std::vector<double> mem_rho;

    auto two_loop = [&](const Vector& grad) {
        Vector q = grad;
        const int k = static_cast<int>(mem_s.size());
        std::vector<double> alpha(k);
        for (int i = k - 1; i >= 0; --i) {
            alpha[i] = mem_rho[i] * mem_s[i].dot(q);
            q -= alpha[i] * mem_y[i];
        }
        if (k > 0) {
            double gamma = mem_s[k - 1].dot(mem_y[k - 1]) / mem_y[k - 1].squaredNorm();
            q *= gamma;
        }
        for (int i = 0; i < k; ++i) {
            double beta = mem_rho[i] * mem_y[i].dot(q);
            q += (alpha[i] - beta) * mem_s[i];
        }
        return q;
    };

    const double c1 = 1e-4;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        result.iterations = iter;
        Vector pg = x - project(x - g);
        result.projected_gradient_norm = pg.size() ? pg.cwiseAbs().maxCoeff() : 0.0;
        if (result.projected_gradient_norm <= opts.tol) {
            result.converged = true;
            break;
        }

        Vector dir = -two_loop(g);
        if (dir.dot(g) > -1e-12 * dir.norm() * g.norm()) dir = -g;

        double alpha = 1.0;
        bool accepted = false;
        Vector xn, gn;
        double fn = 0.0;
        for (int ls = 0; ls < 50; ++ls) {
            xn = project(x + alpha * dir);
            fn = eval(xn, nullptr);
            ++result.evaluations;
            if (std::isfinite(fn) && fn <= f + c1 * g.dot(xn - x) && fn < f) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
            if ((xn - x).cwiseAbs().maxCoeff() == 0.0) break;
        }
        if (!accepted) {
            result.line_search_failure = true;
            break;  // best-so-far is x
        }

        eval(xn, &gn);
        ++result.evaluations;
        Vector s = xn - x;
        Vector y = gn - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            mem_s.push_back(s);
            mem_y.push_back(y);
            mem_rho.push_back(1.0 / sy);
            if (static_cast<int>(mem_s.size()) > opts.memory) {
                mem_s.erase(mem_s.begin());
                mem_y.erase(mem_y.begin());
                mem_rho.erase(mem_rho.begin());
            }
        }
        x = xn;
        f = fn;
        g = gn;
    }

    result.uhat = x;
    result.objective = f;
    return result;
}

BfgsResult bfgs_box(const OcpSpec& spec, const Vector& z0, const Vector& uhat0,
                    const BfgsOptions& opts, double t0,
                    const std::optional<Vector>& bank_key) {
    return bfgs_box(resolve_ocp(spec, t0, bank_key), z0, uhat0, opts);
}

}  // namespace koopgen
