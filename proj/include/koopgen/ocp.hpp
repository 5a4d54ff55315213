#pragma once

#include <functional>

#include "koopgen/krom.hpp"
#include "koopgen/plants.hpp"

namespace koopgen {

// Time-dependent quadratic stage cost (z - a(t))^T Q(t) (z - a(t)) + u^T R(t) u.
struct StageCostSchedule {
    std::function<Matrix(double)> q;
    std::function<Matrix(double)> r;
    std::function<Vector(double)> a;

    static StageCostSchedule constant(Matrix q, Matrix r, Vector a);
};

// Schedule evaluated on one horizon. State cost at z_{i+1} uses q[i+1]/a[i+1];
// input cost charges r[i] to the input acting on interval i.
struct QuadraticStageCost {
    std::vector<Matrix> q;  // size horizon+1, index 0 unused
    std::vector<Matrix> r;  // size horizon
    std::vector<Vector> a;  // size horizon+1, index 0 unused

    // Symmetry to 1e-12, Q eigenvalues >= -1e-10, R eigenvalues >= 1e-12.
    void validate() const;
};

QuadraticStageCost evaluate_cost(const StageCostSchedule& schedule, double t0,
                                 int horizon, double dt);

// Input discretization basis. Indicator: one coefficient per interval and
// channel (the identity map). Fourier: orthonormal {1, cos, sin} harmonics on
// [0, horizon*dt] per channel; coefficients map to interval averages, so the
// coefficient gradient is the exact integral of the basis against the
// piecewise-constant interval gradient.
struct InputBasis {
    enum Kind { Indicator, Fourier } kind = Indicator;
    int harmonics = 1;

    int coeff_dim(int horizon, int n_c) const;
    Matrix interval_map(int horizon, int n_c, double dt) const;  // (horizon*n_c) x d
};

using OcpModel = std::variant<OperatorModel, GeneratorModel, ModelBank>;

struct OcpSpec {
    OcpModel model;
    int horizon = 0;
    double dt = 0.0;
    Box input_box;
    StageCostSchedule cost;
    InputBasis basis;

    void validate() const;
};

// The bilinear discrete instance every solver runs on. Operator models are
// used as-is; generator models are integrated over the hold interval with the
// centered exponential interpolation K0dt = expm(dt K0),
// Bdt_i = (expm(dt (K0 + B_i)) - expm(dt (K0 - B_i))) / 2; banks are resolved
// by the previous applied input.
struct DiscreteOcp {
    Matrix k0dt;
    std::vector<Matrix> bdt;
    int horizon = 0;
    double dt = 0.0;
    Box box;
    QuadraticStageCost cost;
    Matrix umap;  // coefficients -> stacked interval inputs

    int n_o() const { return static_cast<int>(k0dt.rows()); }
    int n_c() const { return static_cast<int>(bdt.size()); }
    int coeff_dim() const { return static_cast<int>(umap.cols()); }

    Matrix transition(const Vector& u) const;  // K0dt + sum u_i Bdt_i
    std::vector<Vector> unstack(const Vector& uhat) const;
    std::vector<Vector> forward(const Vector& z0, const std::vector<Vector>& u) const;

    double objective(const std::vector<Vector>& z, const std::vector<Vector>& u) const;
    std::vector<Vector> adjoint(const std::vector<Vector>& z,
                                const std::vector<Vector>& u) const;
    Matrix interval_gradient(const std::vector<Vector>& z, const std::vector<Vector>& lambda,
                             const std::vector<Vector>& u) const;
    Vector coeff_gradient(const Matrix& interval_grad) const;  // umap^T vec
};

DiscreteOcp resolve_ocp(const OcpSpec& spec, double t0 = 0.0,
                        const std::optional<Vector>& bank_key = {});

// Spec-level wrappers (t0 = 0, banks resolved at the box center).
double objective(const OcpSpec& spec, const std::vector<Vector>& z_traj,
                 const std::vector<Vector>& u_seq);
std::vector<Vector> solve_adjoint_discrete(const OcpSpec& spec,
                                           const std::vector<Vector>& z_traj,
                                           const std::vector<Vector>& u_seq);
Matrix objective_gradient(const OcpSpec& spec, const std::vector<Vector>& z_traj,
                          const std::vector<Vector>& lambda_traj,
                          const std::vector<Vector>& u_seq);

struct BfgsOptions {
    double tol = 1e-8;
    int max_iter = 200;
    int memory = 10;
};

struct BfgsResult {
    Vector uhat;
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double projected_gradient_norm = 0.0;
    bool line_search_failure = false;
    bool box_ignored = false;  // Fourier basis: no projection in coefficient space
};

// Projected limited-memory quasi-Newton with Armijo backtracking along the
// projected arc. Iterates stay in the box (indicator basis); accepted steps
// strictly decrease J.
BfgsResult bfgs_box(const OcpSpec& spec, const Vector& z0, const Vector& uhat0,
                    const BfgsOptions& opts = {}, double t0 = 0.0,
                    const std::optional<Vector>& bank_key = {});
BfgsResult bfgs_box(const DiscreteOcp& ocp, const Vector& z0, const Vector& uhat0,
                    const BfgsOptions& opts = {});

// The initial point a receding-horizon solve starts from: the cold-start
// candidate (zero input projected into the box), or the shifted previous
// solution when it scores no worse. Guarantees warm starting never raises
// the first-iterate objective.
Vector choose_start(const DiscreteOcp& ocp, const Vector& z0,
                    const std::optional<Vector>& shifted_warm);

struct MpcOptions {
    double t_final = 0.0;
    bool warm_start = true;
    enum Solver { Bfgs, Newton } solver = Bfgs;
    double tol = 1e-8;
    int max_iter = 200;
    int newton_max = 30;
    double gmres_tol = 1e-12;
};

struct ClosedLoopRecord {
    std::vector<double> t;        // size steps+1
    std::vector<Vector> x;        // plant states on the time grid
    std::vector<Vector> z_ref;    // reference a(t) on the time grid
    std::vector<Vector> u;        // applied inputs, size steps
    std::vector<double> objective;
    std::vector<double> solve_ms;
    std::vector<int> solver_iterations;
    std::vector<bool> solver_converged;
    bool completed = false;
    std::string abort_reason;

    double tracking_error_integral = 0.0;           // integral of |z - a|^2 dt
    double weighted_tracking_error_integral = 0.0;  // integral of (z-a)^T Q (z-a) dt
    double total_solve_ms = 0.0;
};

// Receding horizon: lift the plant state, solve the K-ROM OCP, apply the
// first input for dt, shift. Warm start seeds the solver with the better of
// the shifted previous solution and the cold-start point.
ClosedLoopRecord mpc_loop(const Plant& plant, const Dictionary& dict, const OcpSpec& spec,
                          const Vector& x0, const MpcOptions& opts);

}  // namespace koopgen
