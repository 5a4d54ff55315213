#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "koopgen/plants.hpp"

using namespace koopgen;

namespace {

const double kPi = 3.141592653589793238462643383279;

Vector vec1(double v) { return Vector::Constant(1, v); }

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("duffing equilibria of the unit-coefficient bistable choice") {
    DuffingPlant plant(DuffingParams{0.5, -1.0, 1.0});
    CHECK(plant.rhs(vec2(0, 0), vec1(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(plant.rhs(vec2(1, 0), vec1(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(plant.rhs(vec2(-1, 0), vec1(0)).cwiseAbs().maxCoeff() == 0.0);

    // Equilibrium persists under the reference integrator for 10 s.
    Vector x = vec2(1, 0);
    for (int i = 0; i < 100; ++i) x = plant.step(x, vec1(0), 0.1);
    CHECK((x - vec2(1, 0)).cwiseAbs().maxCoeff() < 1e-9);

    // The default plant is bistable too, with wells at +-2.
    DuffingPlant def;
    CHECK(def.rhs(vec2(2, 0), vec1(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(def.rhs(vec2(-2, 0), vec1(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duffing step errors") {
    DuffingPlant plant;
    CHECK_THROWS_AS(plant.step(vec2(0, 0), vec1(0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(plant.rhs(Vector::Zero(3), vec1(0)), std::invalid_argument);
}

TEST_CASE("circle rotation closed form") {
    CircleRotationPlant plant;
    Vector x = plant.step(vec1(0.0), vec1(1.0), kPi);
    CHECK(x[0] == doctest::Approx(kPi).epsilon(1e-14));
    // Wraps modulo 2 pi.
    Vector y = plant.step(vec1(6.0), vec1(1.0), 1.0);
    CHECK(y[0] == doctest::Approx(7.0 - 2 * kPi).epsilon(1e-12));
}

TEST_CASE("linear plant scalar exponential decay") {
    Matrix a = Matrix::Constant(1, 1, -1.0);
    Matrix b = Matrix::Constant(1, 1, 1.0);
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Vector x = plant.step(vec1(1.0), vec1(0.0), 1.0);
    CHECK(std::abs(x[0] - std::exp(-1.0)) < 1e-12);
}

TEST_CASE("burgers constants are steady and the mean is conserved") {
    BurgersParams p;
    p.grid_size = 64;
    Burgers1dPlant plant(p);
    Vector v = Vector::Constant(64, 0.37);
    CHECK(plant.rhs(v, vec1(0.0)).cwiseAbs().maxCoeff() < 1e-14);

    // Mean conservation over one unit of time with u = 0.
    Vector v0(64);
    for (int i = 0; i < 64; ++i)
        v0[i] = 0.5 + 0.1 * std::sin(2 * kPi * i / 64.0) + 0.05 * std::cos(4 * kPi * i / 64.0);
    double mean0 = v0.mean();
    Vector v1 = v0;
    for (int i = 0; i < 4; ++i) v1 = plant.step(v1, vec1(0.0), 0.25);
    CHECK(std::abs(v1.mean() - mean0) < 1e-8);
}

TEST_CASE("burgers observation map picks the four equidistant points") {
    Burgers1dPlant plant;
    CHECK(plant.observation_dim() == 4);
    Vector v(128);
    for (int i = 0; i < 128; ++i) v[i] = i;
    Vector y = plant.observe(v);
    CHECK(y[0] == 0);
    CHECK(y[1] == 32);
    CHECK(y[2] == 64);
    CHECK(y[3] == 96);
}

TEST_CASE("step semigroup property for constant input") {
    DuffingPlant duffing;
    Vector x0 = vec2(0.4, -0.3);
    Vector two = duffing.step(duffing.step(x0, vec1(0.5), 0.1), vec1(0.5), 0.1);
    Vector one = duffing.step(x0, vec1(0.5), 0.2);
    CHECK((two - one).cwiseAbs().maxCoeff() < 1e-7);

    BurgersParams p;
    p.grid_size = 64;
    Burgers1dPlant burgers(p);
    Vector v0(64);
    for (int i = 0; i < 64; ++i) v0[i] = 0.5 + 0.1 * std::sin(2 * kPi * i / 64.0);
    Vector btwo = burgers.step(burgers.step(v0, vec1(0.05), 0.25), vec1(0.05), 0.25);
    Vector bone = burgers.step(v0, vec1(0.05), 0.5);
    CHECK((btwo - bone).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("control affinity holds for flagged plants and fails for the negative control") {
    Rng rng(123);
    DuffingPlant duffing;
    LinearPlant linear(Matrix::Identity(2, 2) * -0.5, Matrix::Ones(2, 1),
                       Box::uniform(1, -1, 1));
    CircleRotationPlant circle;

    auto affinity_defect = [&](const Plant& plant) {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Vector x(plant.state_dim());
            for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
            Vector u1 = rng.uniform_in(plant.input_box());
            Vector u2 = rng.uniform_in(plant.input_box());
            double alpha = rng.uniform01();
            Vector mix = plant.rhs(x, alpha * u1 + (1 - alpha) * u2);
            Vector combo = alpha * plant.rhs(x, u1) + (1 - alpha) * plant.rhs(x, u2);
            worst = std::max(worst, (mix - combo).cwiseAbs().maxCoeff());
        }
        return worst;
    };

    CHECK(affinity_defect(duffing) < 1e-12);
    CHECK(affinity_defect(linear) < 1e-12);
    CHECK(affinity_defect(circle) < 1e-12);

    SyntheticNonlinearInputPlant synthetic;
    CHECK_FALSE(synthetic.control_affine());
    CHECK(affinity_defect(synthetic) > 1e-3);  // negative control must fail
}

TEST_CASE("scattered sampling reproduces the two-level protocol") {
    DuffingPlant plant;
    SamplingSpec spec;
    ScatteredSampling sc;
    sc.num_ics = 100;
    sc.ic_box = Box::uniform(2, -3.0, 3.0);
    sc.input_levels = {vec1(-1.0), vec1(1.0)};
    sc.exact_derivatives = true;
    spec.scattered = sc;

    TrajectoryDataset data = sample_training_set(plant, spec, 1);
    CHECK(data.samples.size() == 200);  // each IC under both inputs
    CHECK(data.has_derivatives());
    CHECK_FALSE(data.has_pairs());

    // Derivatives agree with the plant right-hand side.
    const Sample& s = data.samples[17];
    CHECK((*s.xdot - plant.rhs(s.x, s.u)).cwiseAbs().maxCoeff() == 0.0);

    // Reproducible from the seed, different for another seed.
    TrajectoryDataset again = sample_training_set(plant, spec, 1);
    CHECK((again.samples[5].x - data.samples[5].x).cwiseAbs().maxCoeff() == 0.0);
    TrajectoryDataset other = sample_training_set(plant, spec, 2);
    CHECK((other.samples[5].x - data.samples[5].x).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("trajectory sampling yields one pair per step") {
    BurgersParams p;
    p.grid_size = 64;
    Burgers1dPlant plant(p);
    SamplingSpec spec;
    TrajectorySampling tr;
    tr.num_trajectories = 1;
    tr.steps_per_trajectory = 12;
    tr.dt = 0.5;
    tr.x0 = Vector::Constant(64, 0.5);
    tr.input_levels = {vec1(-0.025), vec1(0.075)};
    spec.trajectory = tr;

    TrajectoryDataset data = sample_training_set(plant, spec, 3);
    CHECK(data.samples.size() == 12);
    CHECK(data.has_pairs());
    CHECK(data.state_dim() == 4);  // observation space
    for (const Sample& s : data.samples)
        CHECK((s.u[0] == -0.025 || s.u[0] == 0.075));

    // Pairs chain along the trajectory.
    CHECK((*data.samples[3].xnext - data.samples[4].x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampling spec validation") {
    DuffingPlant plant;
    SamplingSpec empty;
    CHECK_THROWS_AS(sample_training_set(plant, empty, 1), std::invalid_argument);

    SamplingSpec zero_traj;
    TrajectorySampling tr;
    tr.num_trajectories = 0;
    tr.steps_per_trajectory = 5;
    tr.dt = 0.1;
    tr.x0 = vec2(0, 0);
    zero_traj.trajectory = tr;
    CHECK_THROWS_AS(sample_training_set(plant, zero_traj, 1), std::invalid_argument);
}

TEST_CASE("dataset validation rejects out-of-box inputs") {
    TrajectoryDataset data;
    data.input_box = Box::uniform(1, -1, 1);
    Sample s;
    s.x = vec2(0, 0);
    s.u = vec1(2.0);  // outside the declared box
    s.xdot = vec2(0, 0);
    data.samples.push_back(s);
    CHECK_THROWS_AS(data.validate(), std::invalid_argument);
}
