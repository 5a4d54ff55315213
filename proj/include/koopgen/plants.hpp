#pragma once

#include <memory>

#include "koopgen/dataset.hpp"

namespace koopgen {

// Reference ground-truth simulators. Plants are immutable; rhs/step/observe
// are pure, so instances can be shared across threads.
class Plant {
public:
    virtual ~Plant() = default;

    int state_dim() const { return state_dim_; }
    int input_dim() const { return input_dim_; }
    const Box& input_box() const { return input_box_; }
    const std::string& name() const { return name_; }
    bool control_affine() const { return control_affine_; }

    virtual Vector rhs(const Vector& x, const Vector& u) const = 0;
    virtual Vector step(const Vector& x, const Vector& u, double dt) const = 0;

    // Observation map fed to the dictionary; identity unless overridden.
    virtual Vector observe(const Vector& x) const { return x; }
    virtual int observation_dim() const { return state_dim_; }
    // d(observe)/dt given the state derivative; identity plants pass xdot through.
    virtual Vector observe_derivative(const Vector& x, const Vector& xdot) const {
        (void)x;
        return xdot;
    }

protected:
    Plant(std::string name, int state_dim, int input_dim, Box box, bool affine)
        : name_(std::move(name)),
          state_dim_(state_dim),
          input_dim_(input_dim),
          input_box_(std::move(box)),
          control_affine_(affine) {}

    void check_dims(const Vector& x, const Vector& u) const;

    std::string name_;
    int state_dim_;
    int input_dim_;
    Box input_box_;
    bool control_affine_;
};

// Bistable double-well defaults; beta is kept small enough that the
// degree-5 surrogate stays predictive over one second (see the test suite).
struct DuffingParams {
    double delta = 0.5;
    double alpha = -1.0;
    double beta = 0.25;
};

class DuffingPlant : public Plant {
public:
    explicit DuffingPlant(DuffingParams p = {}, Box box = Box::uniform(1, -1.0, 1.0));
    Vector rhs(const Vector& x, const Vector& u) const override;
    Vector step(const Vector& x, const Vector& u, double dt) const override;
    const DuffingParams& params() const { return params_; }

private:
    DuffingParams params_;
};

struct BurgersParams {
    double nu = 0.01;
    int grid_size = 128;
    double length = 2.0;           // periodic domain length
    Vector chi;                    // forcing shape sampled on the grid; default bump
    std::vector<int> observed;     // observed grid indices; default {0, N/4, N/2, 3N/4}
};

class Burgers1dPlant : public Plant {
public:
    explicit Burgers1dPlant(BurgersParams p = {},
                            Box box = Box(Vector::Constant(1, -0.025),
                                          Vector::Constant(1, 0.075)));
    Vector rhs(const Vector& v, const Vector& u) const override;
    Vector step(const Vector& v, const Vector& u, double dt) const override;
    Vector observe(const Vector& v) const override;
    int observation_dim() const override { return static_cast<int>(params_.observed.size()); }
    Vector observe_derivative(const Vector& v, const Vector& vdot) const override;
    const BurgersParams& params() const { return params_; }
    double dx() const { return params_.length / params_.grid_size; }

private:
    BurgersParams params_;
};

class LinearPlant : public Plant {
public:
    LinearPlant(Matrix a, Matrix b, Box box);
    Vector rhs(const Vector& x, const Vector& u) const override;
    Vector step(const Vector& x, const Vector& u, double dt) const override;
    const Matrix& a() const { return a_; }
    const Matrix& b() const { return b_; }

private:
    Matrix a_;
    Matrix b_;
};

// xdot = u on the circle [0, 2*pi); exact flow x + u*dt mod 2*pi.
class CircleRotationPlant : public Plant {
public:
    explicit CircleRotationPlant(Box box = Box::uniform(1, -2.0, 2.0));
    Vector rhs(const Vector& x, const Vector& u) const override;
    Vector step(const Vector& x, const Vector& u, double dt) const override;
};

// xdot = A x + g(u) with non-affine g; negative control for affinity checks.
class SyntheticNonlinearInputPlant : public Plant {
public:
    explicit SyntheticNonlinearInputPlant(Box box = Box::uniform(1, -1.0, 1.0));
    Vector rhs(const Vector& x, const Vector& u) const override;
    Vector step(const Vector& x, const Vector& u, double dt) const override;

private:
    Matrix a_;
};

// Sampling specs for dataset generation.
//
// Scattered: random initial conditions in ic_box, one sample per (IC, input
// level); exact derivatives and/or a snapshot pair per sample.
// Trajectory: one or more rollouts with piecewise-constant random inputs,
// snapshot pairs at spacing dt.
struct ScatteredSampling {
    int num_ics = 0;
    Box ic_box;
    std::vector<Vector> input_levels;  // empty: draw inputs uniformly in the plant box
    bool exact_derivatives = true;
    bool snapshot_pairs = false;
    double dt = 0.0;  // snapshot spacing when pairs requested
};

struct TrajectorySampling {
    int num_trajectories = 1;
    int steps_per_trajectory = 0;
    double dt = 0.0;
    Vector x0;                         // empty: draw from ic_box
    Box ic_box;
    std::vector<Vector> input_levels;  // empty: draw inputs uniformly in the plant box
    bool exact_derivatives = false;
};

struct SamplingSpec {
    std::optional<ScatteredSampling> scattered;
    std::optional<TrajectorySampling> trajectory;
};

// Fully reproducible from the seed (named generator, documented mapping).
TrajectoryDataset sample_training_set(const Plant& plant, const SamplingSpec& spec,
                                      std::uint64_t seed);

}  // namespace koopgen
