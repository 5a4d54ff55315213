#include <chrono>
#include <cmath>

#include "koopgen/newton.hpp"
#include "koopgen/ocp.hpp"

namespace koopgen {

namespace {

// Shift one control interval forward, repeating the last entry (indicator
// basis). Fourier coefficients have no structural shift; reuse them as-is.
Vector shift_warm_start(const DiscreteOcp& ocp, const Vector& uhat) {
    if (!(ocp.umap.rows() == ocp.umap.cols() && ocp.umap.isIdentity(0.0))) return uhat;
    const int nc = ocp.n_c();
    Vector shifted = uhat;
    shifted.head(uhat.size() - nc) = uhat.tail(uhat.size() - nc);
    shifted.tail(nc) = uhat.tail(nc);
    return shifted;
}

Vector cold_start(const DiscreteOcp& ocp) {
    Vector uhat = Vector::Zero(ocp.coeff_dim());
    if (ocp.umap.rows() == ocp.umap.cols() && ocp.umap.isIdentity(0.0)) {
        Vector u0 = ocp.box.clamp(Vector::Zero(ocp.n_c()));
        for (int i = 0; i < ocp.horizon; ++i) uhat.segment(i * ocp.n_c(), ocp.n_c()) = u0;
    }
    return uhat;
}

double objective_at(const DiscreteOcp& ocp, const Vector& z0, const Vector& uhat) {
    std::vector<Vector> u = ocp.unstack(uhat);
    std::vector<Vector> z = ocp.forward(z0, u);
    return ocp.objective(z, u);
}

}  // namespace

Vector choose_start(const DiscreteOcp& ocp, const Vector& z0,
                    const std::optional<Vector>& shifted_warm) {
    Vector start = cold_start(ocp);
    if (shifted_warm && objective_at(ocp, z0, *shifted_warm) < objective_at(ocp, z0, start))
        start = *shifted_warm;
    return start;
}

ClosedLoopRecord mpc_loop(const Plant& plant, const Dictionary& dict, const OcpSpec& spec,
                          const Vector& x0, const MpcOptions& opts) {
    spec.validate();
    if (!(opts.t_final > 0.0))
        throw std::invalid_argument("mpc_loop: t_final must be positive");
    const int steps = static_cast<int>(std::llround(opts.t_final / spec.dt));
    if (steps < 1) throw std::invalid_argument("mpc_loop: horizon longer than the run");

    ClosedLoopRecord record;
    record.t.push_back(0.0);
    record.x.push_back(x0);
    record.z_ref.push_back(spec.cost.a(0.0));

    Vector x = x0;
    Vector last_applied = spec.input_box.center();
    Vector warm;
    bool have_warm = false;

    for (int k = 0; k < steps; ++k) {
        const double t0 = k * spec.dt;
        DiscreteOcp ocp = resolve_ocp(spec, t0, last_applied);
        Vector z0 = dict.eval(plant.observe(x));

        std::optional<Vector> shifted;
        if (opts.warm_start && have_warm) shifted = shift_warm_start(ocp, warm);
        Vector start = choose_start(ocp, z0, shifted);

        const auto tic = std::chrono::steady_clock::now();
        Vector uhat_opt;
        double j_opt = 0.0;
        int iterations = 0;
        bool converged = false;

        if (opts.solver == MpcOptions::Bfgs) {
            BfgsOptions bo;
            bo.tol = opts.tol;
            bo.max_iter = opts.max_iter;
            BfgsResult sol = bfgs_box(ocp, z0, start, bo);
            uhat_opt = sol.uhat;
            j_opt = sol.objective;
            iterations = sol.iterations;
            converged = sol.converged;
        } else {
            NewtonOptions no;
            no.tol = opts.tol;
            no.max_newton = opts.newton_max;
            no.gmres_tol = opts.gmres_tol;
            auto [it, diag] = newton_solve(ocp, make_consistent_iterate(ocp, z0, start), no);
            uhat_opt = it.uhat;
            j_opt = objective_at(ocp, z0, uhat_opt);
            iterations = diag.iterations;
            converged = diag.converged;
        }
        const auto toc = std::chrono::steady_clock::now();
        const double ms =
            std::chrono::duration_cast<std::chrono::microseconds>(toc - tic).count() / 1000.0;

        Vector u0 = ocp.unstack(uhat_opt)[0];
        Vector xn;
        try {
            xn = plant.step(x, u0, spec.dt);
        } catch (const std::exception& e) {
            record.abort_reason = std::string("plant step failed: ") + e.what();
            return record;
        }
        if (!all_finite(xn)) {
            record.abort_reason = "plant step produced non-finite state";
            return record;
        }

        x = xn;
        last_applied = u0;
        warm = uhat_opt;
        have_warm = true;

        record.t.push_back((k + 1) * spec.dt);
        record.x.push_back(x);
        record.z_ref.push_back(spec.cost.a((k + 1) * spec.dt));
        record.u.push_back(u0);
        record.objective.push_back(j_opt);
        record.solve_ms.push_back(ms);
        record.solver_iterations.push_back(iterations);
        record.solver_converged.push_back(converged);
        record.total_solve_ms += ms;

        Vector z = dict.eval(plant.observe(x));
        Vector dz = z - spec.cost.a((k + 1) * spec.dt);
        record.tracking_error_integral += spec.dt * dz.squaredNorm();
        record.weighted_tracking_error_integral +=
            spec.dt * dz.dot(spec.cost.q((k + 1) * spec.dt) * dz);
    }

    record.completed = true;
    return record;
}

}  // namespace koopgen
