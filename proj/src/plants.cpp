#include "koopgen/plants.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "koopgen/numerics.hpp"

namespace koopgen {

void Plant::check_dims(const Vector& x, const Vector& u) const {
    if (x.size() != state_dim_)
        throw std::invalid_argument(name_ + ": state dimension mismatch");
    if (u.size() != input_dim_)
        throw std::invalid_argument(name_ + ": input dimension mismatch");
}

namespace {

// Classic RK4 over dt with nsub equal substeps, frozen input.
Vector rk4_fixed(const Plant& plant, const Vector& x0, const Vector& u, double dt,
                 int nsub) {
    const double h = dt / nsub;
    Vector x = x0;
    for (int i = 0; i < nsub; ++i) {
        Vector k1 = plant.rhs(x, u);
        Vector k2 = plant.rhs(x + 0.5 * h * k1, u);
        Vector k3 = plant.rhs(x + 0.5 * h * k2, u);
        Vector k4 = plant.rhs(x + h * k3, u);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// Substep doubling until halving changes the result by < 1e-9 (sup norm).
Vector rk4_adaptive(const Plant& plant, const Vector& x0, const Vector& u, double dt) {
    int nsub = std::max(1, static_cast<int>(std::ceil(dt / 0.01)));
    Vector coarse = rk4_fixed(plant, x0, u, dt, nsub);
    for (int level = 0; level < 16; ++level) {
        nsub *= 2;
        Vector fine = rk4_fixed(plant, x0, u, dt, nsub);
        if ((fine - coarse).cwiseAbs().maxCoeff() < 1e-9) return fine;
        coarse = fine;
    }
    return coarse;
}

void check_dt(double dt, const char* who) {
    if (!(dt > 0.0)) throw std::invalid_argument(std::string(who) + ": dt must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------
// Duffing oscillator
// ---------------------------------------------------------------------------

DuffingPlant::DuffingPlant(DuffingParams p, Box box)
    : Plant("duffing", 2, 1, std::move(box), true), params_(p) {
    if (!std::isfinite(p.delta) || !std::isfinite(p.alpha) || !std::isfinite(p.beta))
        throw std::invalid_argument("duffing: parameters must be finite");
}

Vector DuffingPlant::rhs(const Vector& x, const Vector& u) const {
    check_dims(x, u);
    Vector dx(2);
    dx[0] = x[1];
    dx[1] = -params_.delta * x[1] - params_.alpha * x[0] -
            params_.beta * x[0] * x[0] * x[0] + u[0];
    return dx;
}

Vector DuffingPlant::step(const Vector& x, const Vector& u, double dt) const {
    check_dims(x, u);
    check_dt(dt, "duffing");
    return rk4_adaptive(*this, x, u, dt);
}

// ---------------------------------------------------------------------------
// 1D Burgers with periodic boundary conditions
// ---------------------------------------------------------------------------

Burgers1dPlant::Burgers1dPlant(BurgersParams p, Box box)
    : Plant("burgers1d", p.grid_size, 1, std::move(box), true), params_(std::move(p)) {
    if (params_.grid_size < 32)
        throw std::invalid_argument("burgers1d: grid size must be >= 32");
    const int n = params_.grid_size;
    const double h = params_.length / n;
    if (params_.chi.size() == 0) {
        // Periodic Gaussian bump at xi = 1, width 0.2, normalized to max 1.
        params_.chi.resize(n);
        const double sigma = 0.2;
        for (int i = 0; i < n; ++i) {
            double xi = i * h;
            double d = std::abs(xi - 1.0);
            d = std::min(d, params_.length - d);
            params_.chi[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        }
    }
    if (params_.chi.size() != n || !all_finite(params_.chi))
        throw std::invalid_argument("burgers1d: chi must be finite and match the grid");
    if (params_.observed.empty())
        params_.observed = {0, n / 4, n / 2, 3 * n / 4};
    for (int idx : params_.observed)
        if (idx < 0 || idx >= n)
            throw std::invalid_argument("burgers1d: observation index out of range");
}

Vector Burgers1dPlant::rhs(const Vector& v, const Vector& u) const {
    check_dims(v, u);
    const int n = params_.grid_size;
    const double h = dx();
    Vector out(n);
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n;
        const int im = (i + n - 1) % n;
        const double diff = params_.nu * (v[ip] - 2.0 * v[i] + v[im]) / (h * h);
        // conservative advection (v^2/2)_xi keeps the spatial mean exact
        const double adv = (v[ip] * v[ip] - v[im] * v[im]) / (4.0 * h);
        out[i] = diff - adv + u[0] * params_.chi[i];
    }
    return out;
}

Vector Burgers1dPlant::step(const Vector& v0, const Vector& u, double dt) const {
    check_dims(v0, u);
    check_dt(dt, "burgers1d");
    const int n = params_.grid_size;
    const double h = dx();

    // Substep count: power of two against an advective CFL of 0.5 with the
    // velocity bound quantized to powers of two, so step(dt) twice and
    // step(2dt) traverse identical substep grids.
    double vbound = std::max(1.0, v0.cwiseAbs().maxCoeff());
    vbound = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(vbound))));
    const double h_cfl = 0.5 * h / vbound;
    int k = 0;
    while (dt / std::ldexp(1.0, k) > h_cfl && k < 30) ++k;
    const int nsub = 1 << k;
    const double tau = dt / nsub;

    // Crank-Nicolson diffusion operator, factored once per call.
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        d(i, i) = -2.0;
        d(i, (i + 1) % n) = 1.0;
        d(i, (i + n - 1) % n) = 1.0;
    }
    d *= params_.nu / (h * h);
    Eigen::PartialPivLU<Matrix> lhs((Matrix::Identity(n, n) - 0.5 * tau * d).eval());

    auto advection = [&](const Vector& v) {
        Vector a(n);
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n;
            const int im = (i + n - 1) % n;
            a[i] = (v[ip] * v[ip] - v[im] * v[im]) / (4.0 * h);
        }
        return a;
    };

    const Vector forcing = u[0] * params_.chi;
    Vector v = v0;
    for (int s = 0; s < nsub; ++s) {
        // Heun predictor for the explicit part, trapezoidal corrector.
        Vector adv0 = advection(v);
        Vector pred = v + tau * (d * v - adv0 + forcing);
        Vector adv_mid = 0.5 * (adv0 + advection(pred));
        Vector rhs_vec = v + 0.5 * tau * (d * v) - tau * adv_mid + tau * forcing;
        v = lhs.solve(rhs_vec);
    }
    return v;
}

Vector Burgers1dPlant::observe(const Vector& v) const {
    Vector y(params_.observed.size());
    for (size_t i = 0; i < params_.observed.size(); ++i) y[i] = v[params_.observed[i]];
    return y;
}

Vector Burgers1dPlant::observe_derivative(const Vector& v, const Vector& vdot) const {
    (void)v;
    Vector y(params_.observed.size());
    for (size_t i = 0; i < params_.observed.size(); ++i) y[i] = vdot[params_.observed[i]];
    return y;
}

// ---------------------------------------------------------------------------
// Linear plant xdot = A x + B u, exact flow via the augmented exponential
// ---------------------------------------------------------------------------

LinearPlant::LinearPlant(Matrix a, Matrix b, Box box)
    : Plant("linear", static_cast<int>(a.rows()), static_cast<int>(b.cols()),
            std::move(box), true),
      a_(std::move(a)),
      b_(std::move(b)) {
    if (a_.rows() != a_.cols() || b_.rows() != a_.rows())
        throw std::invalid_argument("linear: A must be square and B row-compatible");
}

Vector LinearPlant::rhs(const Vector& x, const Vector& u) const {
    check_dims(x, u);
    return a_ * x + b_ * u;
}

Vector LinearPlant::step(const Vector& x, const Vector& u, double dt) const {
    check_dims(x, u);
    check_dt(dt, "linear");
    const int n = state_dim_, m = input_dim_;
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a_;
    aug.topRightCorner(n, m) = b_;
    Matrix e = expm(aug * dt);
    return e.topLeftCorner(n, n) * x + e.topRightCorner(n, m) * u;
}

// ---------------------------------------------------------------------------
// Circle rotation, exact closed form
// ---------------------------------------------------------------------------

CircleRotationPlant::CircleRotationPlant(Box box)
    : Plant("circle_rotation", 1, 1, std::move(box), true) {}

Vector CircleRotationPlant::rhs(const Vector& x, const Vector& u) const {
    check_dims(x, u);
    return u;
}

Vector CircleRotationPlant::step(const Vector& x, const Vector& u, double dt) const {
    check_dims(x, u);
    check_dt(dt, "circle_rotation");
    const double two_pi = 6.283185307179586476925286766559;
    double y = std::fmod(x[0] + u[0] * dt, two_pi);
    if (y < 0.0) y += two_pi;
    return Vector::Constant(1, y);
}

// ---------------------------------------------------------------------------
// Synthetic plant with a non-affine input channel (negative control)
// ---------------------------------------------------------------------------

SyntheticNonlinearInputPlant::SyntheticNonlinearInputPlant(Box box)
    : Plant("synthetic_nonlinear_input", 2, 1, std::move(box), false) {
    a_ = Matrix(2, 2);
    a_ << -0.3, 1.0, -1.0, -0.3;
}

Vector SyntheticNonlinearInputPlant::rhs(const Vector& x, const Vector& u) const {
    check_dims(x, u);
    const double g = u[0] + 0.8 * u[0] * u[0];
    Vector dx = a_ * x;
    dx[1] += g;
    return dx;
}

Vector SyntheticNonlinearInputPlant::step(const Vector& x, const Vector& u,
                                          double dt) const {
    check_dims(x, u);
    check_dt(dt, "synthetic_nonlinear_input");
    return rk4_adaptive(*this, x, u, dt);
}

// ---------------------------------------------------------------------------
// Training set generation
// ---------------------------------------------------------------------------

namespace {

Vector draw_input(Rng& rng, const std::vector<Vector>& levels, const Box& box) {
    if (levels.empty()) return rng.uniform_in(box);
    size_t idx = static_cast<size_t>(rng.uniform01() * levels.size());
    if (idx >= levels.size()) idx = levels.size() - 1;
    return levels[idx];
}

}  // namespace

TrajectoryDataset sample_training_set(const Plant& plant, const SamplingSpec& spec,
                                      std::uint64_t seed) {
    if (!spec.scattered && !spec.trajectory)
        throw std::invalid_argument("sample_training_set: empty sampling spec");
    if (spec.scattered && spec.trajectory)
        throw std::invalid_argument("sample_training_set: spec must name one sampling mode");

    Rng rng(seed);
    TrajectoryDataset data;
    data.input_box = plant.input_box();
    data.source = plant.name();

    if (spec.scattered) {
        const auto& sc = *spec.scattered;
        if (sc.num_ics < 1)
            throw std::invalid_argument("sample_training_set: num_ics must be >= 1");
        if (sc.ic_box.dim() != plant.state_dim())
            throw std::invalid_argument("sample_training_set: ic_box dimension mismatch");
        if (!sc.exact_derivatives && !sc.snapshot_pairs)
            throw std::invalid_argument(
                "sample_training_set: scattered spec requests neither derivatives nor pairs");
        if (sc.snapshot_pairs && !(sc.dt > 0.0))
            throw std::invalid_argument("sample_training_set: snapshot pairs need dt > 0");
        data.dt = sc.snapshot_pairs ? sc.dt : 0.0;

        std::vector<Vector> levels = sc.input_levels;
        const bool random_levels = levels.empty();
        for (int j = 0; j < sc.num_ics; ++j) {
            Vector x = rng.uniform_in(sc.ic_box);
            const int count = random_levels ? 1 : static_cast<int>(levels.size());
            for (int l = 0; l < count; ++l) {
                Vector u = random_levels ? rng.uniform_in(plant.input_box()) : levels[l];
                Sample s;
                s.x = plant.observe(x);
                s.u = u;
                if (sc.exact_derivatives)
                    s.xdot = plant.observe_derivative(x, plant.rhs(x, u));
                if (sc.snapshot_pairs) s.xnext = plant.observe(plant.step(x, u, sc.dt));
                s.traj_id = j;
                s.step_idx = l;
                data.samples.push_back(std::move(s));
            }
        }
    } else {
        const auto& tr = *spec.trajectory;
        if (tr.num_trajectories < 1)
            throw std::invalid_argument("sample_training_set: need at least one trajectory");
        if (tr.steps_per_trajectory < 1)
            throw std::invalid_argument("sample_training_set: need at least one step");
        if (!(tr.dt > 0.0))
            throw std::invalid_argument("sample_training_set: trajectory dt must be > 0");
        data.dt = tr.dt;

        for (int t = 0; t < tr.num_trajectories; ++t) {
            Vector x;
            if (tr.x0.size() > 0) {
                if (tr.x0.size() != plant.state_dim())
                    throw std::invalid_argument("sample_training_set: x0 dimension mismatch");
                x = tr.x0;
            } else {
                if (tr.ic_box.dim() != plant.state_dim())
                    throw std::invalid_argument("sample_training_set: ic_box dimension mismatch");
                x = rng.uniform_in(tr.ic_box);
            }
            for (int k = 0; k < tr.steps_per_trajectory; ++k) {
                Vector u = draw_input(rng, tr.input_levels, plant.input_box());
                Vector xn = plant.step(x, u, tr.dt);
                Sample s;
                s.x = plant.observe(x);
                s.u = u;
                s.xnext = plant.observe(xn);
                if (tr.exact_derivatives)
                    s.xdot = plant.observe_derivative(x, plant.rhs(x, u));
                s.traj_id = t;
                s.step_idx = k;
                data.samples.push_back(std::move(s));
                x = xn;
            }
        }
    }

    data.validate();
    return data;
}

// ---------------------------------------------------------------------------
// TrajectoryDataset invariants
// ---------------------------------------------------------------------------

bool TrajectoryDataset::has_derivatives() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(),
                       [](const Sample& s) { return s.xdot.has_value(); });
}

bool TrajectoryDataset::has_pairs() const {
    return !samples.empty() &&
           std::all_of(samples.begin(), samples.end(),
                       [](const Sample& s) { return s.xnext.has_value(); });
}

void TrajectoryDataset::validate() const {
    if (samples.empty()) throw std::invalid_argument("TrajectoryDataset: empty dataset");
    const Eigen::Index n = samples[0].x.size();
    const Eigen::Index m = samples[0].u.size();
    bool any_pairs = false;
    for (size_t j = 0; j < samples.size(); ++j) {
        const Sample& s = samples[j];
        if (s.x.size() != n || s.u.size() != m)
            throw std::invalid_argument("TrajectoryDataset: inconsistent dimensions at sample " +
                                        std::to_string(j));
        if (!s.xdot && !s.xnext)
            throw std::invalid_argument("TrajectoryDataset: sample " + std::to_string(j) +
                                        " has neither a derivative nor a successor");
        if ((s.xdot && s.xdot->size() != n) || (s.xnext && s.xnext->size() != n))
            throw std::invalid_argument("TrajectoryDataset: payload dimension mismatch at sample " +
                                        std::to_string(j));
        if (!all_finite(s.x) || !all_finite(s.u))
            throw std::invalid_argument("TrajectoryDataset: non-finite sample " + std::to_string(j));
        if (input_box.dim() == m && !input_box.contains(s.u, 1e-12))
            throw std::invalid_argument("TrajectoryDataset: input outside declared box at sample " +
                                        std::to_string(j));
        if (s.xnext) any_pairs = true;
    }
    if (any_pairs && !(dt > 0.0))
        throw std::invalid_argument("TrajectoryDataset: snapshot pairs require dt > 0");
}

}  // namespace koopgen
