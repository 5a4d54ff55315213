#pragma once

#include "koopgen/ocp.hpp"

namespace koopgen {

// First-order-optimality unknowns: trajectory, adjoint, input coefficients.
// z[0] is pinned to the lifted initial condition and lambda[horizon] to zero;
// solvers never move them.
struct KktIterate {
    std::vector<Vector> z;       // size horizon+1
    std::vector<Vector> lambda;  // size horizon+1
    Vector uhat;                 // coefficient vector, size d
};

// Dynamics, adjoint, and stationarity defects. All blocks are bilinear in
// (z, lambda, uhat).
struct KktResidual {
    std::vector<Vector> r_z;       // size horizon
    std::vector<Vector> r_lambda;  // size horizon
    Vector r_uhat;                 // size d

    double norm() const;
};

KktResidual kkt_residuals(const DiscreteOcp& ocp, const KktIterate& it);
KktResidual kkt_residuals(const OcpSpec& spec, const KktIterate& it);

// Directional derivative of the residuals at `it` along `dir`; exact because
// the residual map is bilinear. dir.z[0] and dir.lambda[horizon] are ignored.
KktResidual kkt_jvp(const DiscreteOcp& ocp, const KktIterate& it, const KktIterate& dir);
KktResidual kkt_jvp(const OcpSpec& spec, const KktIterate& it, const KktIterate& dir);

// Forward-consistent iterate: predict from z0, solve the adjoint. Leaves only
// the stationarity block nonzero.
KktIterate make_consistent_iterate(const DiscreteOcp& ocp, const Vector& z0,
                                   const Vector& uhat);

struct NewtonOptions {
    double tol = 1e-10;
    int max_newton = 30;
    double gmres_tol = 1e-12;
    int gmres_max_iter = 0;  // 0: KKT dimension
};

struct NewtonDiagnostics {
    std::vector<double> residual_norms;  // per iteration, including the start
    std::vector<int> gmres_iterations;
    bool converged = false;
    bool clipped = false;  // final uhat was clipped into the box
    int iterations = 0;
};

// Matrix-free Newton: each step solves the jvp-defined linear system with
// GMRES, applies the full step, and backtracks on the residual norm if
// needed. The KKT system itself is unconstrained; the box only clips the
// final coefficients (indicator basis), which is reported.
std::pair<KktIterate, NewtonDiagnostics> newton_solve(const DiscreteOcp& ocp,
                                                      const KktIterate& it0,
                                                      const NewtonOptions& opts = {});
std::pair<KktIterate, NewtonDiagnostics> newton_solve(const OcpSpec& spec,
                                                      const KktIterate& it0,
                                                      const NewtonOptions& opts = {});

}  // namespace koopgen
