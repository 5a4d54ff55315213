#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "koopgen/edmd.hpp"
#include "koopgen/krom.hpp"
#include "koopgen/numerics.hpp"
#include "koopgen/plants.hpp"

using namespace koopgen;

namespace {

const double kPi = 3.141592653589793238462643383279;

Vector vec1(double v) { return Vector::Constant(1, v); }

// Scattered dataset from a plant: random states, chosen input levels,
// exact derivatives and/or snapshot pairs.
TrajectoryDataset scatter(const Plant& plant, const Box& ic_box,
                          const std::vector<Vector>& levels, int num_ics, bool derivs,
                          bool pairs, double dt, std::uint64_t seed) {
    SamplingSpec spec;
    ScatteredSampling sc;
    sc.num_ics = num_ics;
    sc.ic_box = ic_box;
    sc.input_levels = levels;
    sc.exact_derivatives = derivs;
    sc.snapshot_pairs = pairs;
    sc.dt = dt;
    spec.scattered = sc;
    return sample_training_set(plant, spec, seed);
}

}  // namespace

TEST_CASE("assemble_lifted kronecker layout") {
    Dictionary dict = Dictionary::identity(2);
    TrajectoryDataset data;
    data.input_box = Box::uniform(1, -2, 2);
    Sample s;
    s.x = Vector::Zero(2);
    s.x << 3.0, -1.0;
    s.u = vec1(0.0);
    s.xdot = Vector::Zero(2);
    data.samples.push_back(s);

    LiftedMatrices lifted = assemble_lifted(dict, data);
    REQUIRE(lifted.psi_xu.rows() == 4);
    REQUIRE(lifted.psi_xu.cols() == 1);
    CHECK(lifted.psi_xu(0, 0) == 3.0);
    CHECK(lifted.psi_xu(2, 0) == 0.0);  // u = 0 zeroes the Kronecker block
    CHECK(lifted.psi_xu(3, 0) == 0.0);

    data.samples[0].u = vec1(1.0);
    LiftedMatrices lifted1 = assemble_lifted(dict, data);
    CHECK(lifted1.psi_xu(2, 0) == 3.0);  // u = 1 copies psi
    CHECK(lifted1.psi_xu(3, 0) == -1.0);
}

TEST_CASE("assemble_lifted shape for two channels") {
    Dictionary dict = Dictionary::monomials(2, 2);
    TrajectoryDataset data;
    data.input_box = Box::uniform(2, -1, 1);
    Rng rng(5);
    for (int j = 0; j < 10; ++j) {
        Sample s;
        s.x = Vector(2);
        s.x << rng.uniform(-1, 1), rng.uniform(-1, 1);
        s.u = Vector(2);
        s.u << rng.uniform(-1, 1), rng.uniform(-1, 1);
        s.xdot = Vector::Zero(2);
        data.samples.push_back(s);
    }
    LiftedMatrices lifted = assemble_lifted(dict, data);
    CHECK(lifted.psi_xu.rows() == 18);  // (1 + 2) * 6
    CHECK(lifted.psi_xu.cols() == 10);
}

TEST_CASE("observable derivative estimators") {
    // Identity dictionary: chain rule returns xdot itself.
    Dictionary ident = Dictionary::identity(2);
    TrajectoryDataset data;
    data.input_box = Box::uniform(1, -1, 1);
    Sample s;
    s.x = Vector(2);
    s.x << 0.5, -0.25;
    s.u = vec1(0.0);
    s.xdot = Vector(2);
    *s.xdot << 1.5, 2.5;
    data.samples.push_back(s);
    Matrix dot = estimate_observable_derivatives(ident, data, DerivativeMethod::chain_rule());
    CHECK((dot.col(0) - *s.xdot).cwiseAbs().maxCoeff() == 0.0);

    // psi(x) = x^2 on a scalar plant with xdot = 1 at x = 3 gives 6.
    Dictionary mono = Dictionary::monomials(1, 2);
    TrajectoryDataset scalar;
    scalar.input_box = Box::uniform(1, -1, 1);
    Sample t;
    t.x = vec1(3.0);
    t.u = vec1(0.0);
    t.xdot = vec1(1.0);
    scalar.samples.push_back(t);
    Matrix dot2 =
        estimate_observable_derivatives(mono, scalar, DerivativeMethod::chain_rule());
    CHECK(dot2(2, 0) == doctest::Approx(6.0));

    // Forward difference of a stationary sample is the zero column.
    TrajectoryDataset frozen;
    frozen.input_box = Box::uniform(1, -1, 1);
    frozen.dt = 0.1;
    Sample f;
    f.x = vec1(0.7);
    f.u = vec1(0.0);
    f.xnext = f.x;
    frozen.samples.push_back(f);
    Matrix dot3 = estimate_observable_derivatives(
        mono, frozen, DerivativeMethod::finite_difference(FiniteDifferenceStencil::forward()));
    CHECK(dot3.cwiseAbs().maxCoeff() == 0.0);

    // Central stencils need neighbors; the error identifies the sample.
    CHECK_THROWS_WITH_AS(
        estimate_observable_derivatives(
            mono, frozen,
            DerivativeMethod::finite_difference(FiniteDifferenceStencil::central3())),
        doctest::Contains("no neighbor"), std::invalid_argument);

    // Chain rule without a derivative source is an invalid input.
    CHECK_THROWS_AS(estimate_observable_derivatives(mono, frozen,
                                                    DerivativeMethod::chain_rule()),
                    std::invalid_argument);
}

TEST_CASE("fit_generator on the zero plant returns zero matrices") {
    Dictionary dict = Dictionary::monomials(2, 2);
    TrajectoryDataset data;
    data.input_box = Box::uniform(1, -1, 1);
    Rng rng(8);
    for (int j = 0; j < 40; ++j) {
        Sample s;
        s.x = Vector(2);
        s.x << rng.uniform(-1, 1), rng.uniform(-1, 1);
        s.u = vec1(rng.uniform(-1, 1));
        s.xdot = Vector::Zero(2);
        data.samples.push_back(s);
    }
    GeneratorModel g = fit_generator(dict, data, DerivativeMethod::chain_rule());
    CHECK(g.k0.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(g.b[0].cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_generator linear plant with affine dictionary is exact") {
    Matrix a(2, 2);
    a << -0.4, 1.0, -1.0, -0.2;
    Matrix b(2, 1);
    b << 0.3, 1.1;
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(2, 1);  // (1, x1, x2)

    TrajectoryDataset data = scatter(plant, Box::uniform(2, -2, 2),
                                     {vec1(-1.0), vec1(0.0), vec1(1.0)}, 40, true, false,
                                     0.0, 11);
    GeneratorModel g = fit_generator(dict, data, DerivativeMethod::chain_rule());

    // K0 embeds A and B embeds the input column through the constant.
    CHECK((g.k0.bottomRightCorner(2, 2) - a).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((g.b[0].col(0).tail(2) - b.col(0)).cwiseAbs().maxCoeff() < 1e-9);

    // One-step predictions match the exact flow.
    Rng rng(13);
    PiecewiseConstantSignal sig;
    sig.dt = 0.37;
    sig.box = plant.input_box();
    for (int i = 0; i < 6; ++i) sig.inputs.push_back(vec1(rng.uniform(-1, 1)));
    Vector x0(2);
    x0 << 0.8, -0.6;
    auto z = predict_continuous(g, dict.eval(x0), sig, IntegrationScheme::Exact);
    Vector x = x0;
    for (int i = 0; i < 6; ++i) {
        x = plant.step(x, sig.inputs[i], sig.dt);
        CHECK((z[i + 1] - dict.eval(x)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("fit_operators identity flow and rank failure diagnostics") {
    Dictionary dict = Dictionary::identity(2);
    TrajectoryDataset data;
    data.input_box = Box::uniform(1, -1, 1);
    data.dt = 0.5;
    Rng rng(21);
    for (int j = 0; j < 30; ++j) {
        Sample s;
        s.x = Vector(2);
        s.x << rng.uniform(-1, 1), rng.uniform(-1, 1);
        s.u = vec1(0.0);
        s.xnext = s.x;  // frozen plant
        data.samples.push_back(s);
    }
    OperatorModel op = fit_operators(dict, data);
    for (const Sample& s : data.samples)
        CHECK((op.k0dt * s.x - s.x).cwiseAbs().maxCoeff() < 1e-8);

    // Rank collapse: all states on a line, dictionary rank < n_o.
    TrajectoryDataset degenerate;
    degenerate.input_box = Box::uniform(1, -1, 1);
    degenerate.dt = 0.5;
    for (int j = 0; j < 10; ++j) {
        Sample s;
        s.x = Vector(2);
        s.x << static_cast<double>(j), 0.0;
        s.u = vec1(0.0);
        s.xnext = s.x;
        degenerate.samples.push_back(s);
    }
    CHECK_THROWS_AS(fit_operators(dict, degenerate), FitFailure);
}

TEST_CASE("fit_operators linear plant reproduces the exact interpolated flow") {
    Rng rng(31);
    Matrix a(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = rng.uniform(-1, 1);
    a -= (a.eigenvalues().real().maxCoeff() + 0.5) * Matrix::Identity(3, 3);
    Matrix b(3, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) b(i, j) = rng.uniform(-1, 1);
    LinearPlant plant(a, b, Box::uniform(2, -1, 1));
    Dictionary dict = Dictionary::monomials(3, 1);

    for (double dt : {0.1, 1.0}) {
        SamplingSpec spec;
        ScatteredSampling sc;
        sc.num_ics = 60;
        sc.ic_box = Box::uniform(3, -2, 2);
        sc.exact_derivatives = false;
        sc.snapshot_pairs = true;
        sc.dt = dt;
        spec.scattered = sc;
        TrajectoryDataset data = sample_training_set(plant, spec, 41);
        OperatorModel op = fit_operators(dict, data);

        for (int trial = 0; trial < 20; ++trial) {
            Vector x(3);
            for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1, 1);
            Vector u = rng.uniform_in(plant.input_box());
            Vector z1 = op.at(u) * dict.eval(x);
            Vector zt = dict.eval(plant.step(x, u, dt));
            CHECK((z1 - zt).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("switched family: circle operators rotate by u dt") {
    CircleRotationPlant plant;
    Dictionary dict = Dictionary::fourier_pair(1);
    const double dt = 0.3;

    auto level_set = [&](double level) {
        return scatter(plant, Box::uniform(1, 0.0, 2 * kPi), {vec1(level)}, 40, false, true,
                       dt, 51);
    };
    std::vector<std::pair<Vector, TrajectoryDataset>> sets;
    sets.emplace_back(vec1(0.0), level_set(0.0));
    sets.emplace_back(vec1(1.0), level_set(1.0));
    SwitchedFamily family = fit_switched_family(dict, sets);

    const Matrix& k1 = family.operators[1].second;
    Eigen::EigenSolver<Matrix> es(k1);
    auto ev = es.eigenvalues();
    // Eigenvalues e^{+-i dt} for the rotation by u dt with u = 1.
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(std::abs(ev[i]) - 1.0) < 1e-6);
        CHECK(std::abs(std::abs(std::arg(ev[i])) - dt) < 1e-6);
    }
}

TEST_CASE("switched family: identical levels give zero Bdt") {
    // Both levels see the same (autonomous) dynamics.
    Matrix a = -0.3 * Matrix::Identity(2, 2);
    Matrix b = Matrix::Zero(2, 1);
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(2, 1);

    auto level_set = [&](double level) {
        return scatter(plant, Box::uniform(2, -1, 1), {vec1(level)}, 30, false, true, 0.2, 61);
    };
    std::vector<std::pair<Vector, TrajectoryDataset>> sets;
    sets.emplace_back(vec1(-1.0), level_set(-1.0));
    sets.emplace_back(vec1(1.0), level_set(1.0));
    SwitchedFamily family = fit_switched_family(dict, sets);
    CHECK(family.derived.bdt[0].cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("switched family agrees with the regression fit for linear plants") {
    Rng rng(71);
    Matrix a(2, 2);
    a << -0.5, 0.8, -0.8, -0.5;
    Matrix b(2, 1);
    b << 0.2, 1.0;
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(2, 1);
    const double dt = 0.25;

    auto level_set = [&](double level, std::uint64_t seed) {
        return scatter(plant, Box::uniform(2, -2, 2), {vec1(level)}, 40, false, true, dt,
                       seed);
    };
    std::vector<std::pair<Vector, TrajectoryDataset>> sets;
    sets.emplace_back(vec1(-1.0), level_set(-1.0, 81));
    sets.emplace_back(vec1(1.0), level_set(1.0, 82));
    OperatorModel derived = fit_switched_family(dict, sets).derived;

    TrajectoryDataset mixed = scatter(plant, Box::uniform(2, -2, 2),
                                      {vec1(-1.0), vec1(0.2), vec1(1.0)}, 50, false, true,
                                      dt, 83);
    OperatorModel direct = fit_operators(dict, mixed);

    CHECK((derived.k0dt - direct.k0dt).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((derived.bdt[0] - direct.bdt[0]).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("switched-difference model reproduces the per-level operators exactly") {
    DuffingPlant plant;
    Dictionary dict = Dictionary::monomials(2, 5);
    const double dt = 0.01;
    auto level_set = [&](double level, std::uint64_t seed) {
        return scatter(plant, Box::uniform(2, -3, 3), {vec1(level)}, 60, false, true, dt,
                       seed);
    };
    std::vector<std::pair<Vector, TrajectoryDataset>> sets;
    sets.emplace_back(vec1(-1.0), level_set(-1.0, 201));
    sets.emplace_back(vec1(1.0), level_set(1.0, 202));
    SwitchedFamily family = fit_switched_family(dict, sets);

    // At the anchor inputs the interpolated model equals the level fits.
    Matrix at_minus = family.derived.at(vec1(-1.0));
    Matrix at_plus = family.derived.at(vec1(1.0));
    CHECK((at_minus - family.operators[0].second).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((at_plus - family.operators[1].second).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("delay-embedded observations fit an exact stacked-state model") {
    // Two stacked copies of a linear plant's state: the stacked transition
    // is still affine, so the operator fit over a delay dictionary with a
    // constant term is exact.
    Matrix a(2, 2);
    a << -0.2, 0.9, -0.9, -0.2;
    Matrix b(2, 1);
    b << 0.1, 1.0;
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(4, 1).with_delay(2);
    const double dt = 0.2;

    // Roll trajectories and emit stacked samples through the delay buffer.
    TrajectoryDataset data;
    data.dt = dt;
    data.input_box = plant.input_box();
    Rng rng(211);
    for (int traj = 0; traj < 12; ++traj) {
        Vector x(2);
        x << rng.uniform(-1, 1), rng.uniform(-1, 1);
        DelayBuffer buffer(2, 2);
        buffer.push(x);
        std::optional<Vector> previous_stack;
        for (int k = 0; k < 8; ++k) {
            Vector u = vec1(rng.uniform(-1, 1));
            x = plant.step(x, u, dt);
            buffer.push(x);
            Vector stacked = buffer.stacked();
            if (previous_stack) {
                Sample s;
                s.x = *previous_stack;
                s.u = u;  // the input applied between the two stacks
                s.xnext = stacked;
                s.traj_id = traj;
                s.step_idx = k;
                data.samples.push_back(std::move(s));
            }
            previous_stack = stacked;
        }
    }
    OperatorModel op = fit_operators(dict, data);

    for (const Sample& s : data.samples) {
        Vector pred = op.at(s.u) * dict.eval(s.x);
        CHECK((pred - dict.eval(*s.xnext)).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK_THROWS_AS(dict.jacobian(Vector::Zero(4)), UnsupportedOperation);
}

TEST_CASE("theorem 3: forward-difference generator matches the operator fit") {
    DuffingPlant plant;
    Dictionary dict = Dictionary::monomials(2, 5);
    TrajectoryDataset data = scatter(plant, Box::uniform(2, -3, 3),
                                     {vec1(-1.0), vec1(1.0)}, 100, false, true, 0.1, 91);

    OperatorModel op = fit_operators(dict, data);
    GeneratorModel gen = fit_generator(
        dict, data, DerivativeMethod::finite_difference(FiniteDifferenceStencil::forward()));

    Matrix euler_k = Matrix::Identity(21, 21) + data.dt * gen.k0;
    double err_k = (op.k0dt - euler_k).norm() / std::max(1.0, op.k0dt.norm());
    double err_b = (op.bdt[0] - data.dt * gen.b[0]).norm() / std::max(1.0, op.bdt[0].norm());
    CHECK(err_k <= 1e-9);
    CHECK(err_b <= 1e-9);
}

TEST_CASE("matrix-level exponential identity for linear plants") {
    // The fitted finite-time operator equals the exponential of the fitted
    // generator at any input level when both fits are exact (linear plant,
    // affine dictionary).
    Matrix a(2, 2);
    a << -0.3, 0.7, -0.7, -0.3;
    Matrix b(2, 1);
    b << 0.4, 1.0;
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(2, 1);
    const double dt = 0.3;

    TrajectoryDataset deriv = scatter(plant, Box::uniform(2, -2, 2),
                                      {vec1(-1.0), vec1(0.0), vec1(1.0)}, 40, true, false,
                                      0.0, 141);
    GeneratorModel gen = fit_generator(dict, deriv, DerivativeMethod::chain_rule());

    TrajectoryDataset pairs = scatter(plant, Box::uniform(2, -2, 2),
                                      {vec1(-1.0), vec1(0.0), vec1(1.0)}, 40, false, true,
                                      dt, 142);
    OperatorModel op = fit_operators(dict, pairs);

    for (double u : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
        Matrix lhs = op.at(vec1(u));
        Matrix rhs = expm(dt * gen.at(vec1(u)));
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("least squares is permutation and duplication invariant") {
    Rng rng(101);
    Matrix a(3, 3);
    a << -0.2, 0.5, 0.0, -0.5, -0.2, 0.3, 0.1, 0.0, -0.4;
    Matrix b(3, 1);
    b << 1.0, 0.0, 0.5;
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(3, 1);
    TrajectoryDataset data = scatter(plant, Box::uniform(3, -1, 1),
                                     {vec1(-1.0), vec1(0.0), vec1(1.0)}, 30, true, false,
                                     0.0, 103);

    GeneratorModel base = fit_generator(dict, data, DerivativeMethod::chain_rule());

    TrajectoryDataset shuffled = data;
    std::vector<size_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform01() * i)]);
    for (size_t i = 0; i < order.size(); ++i) shuffled.samples[i] = data.samples[order[i]];
    GeneratorModel perm = fit_generator(dict, shuffled, DerivativeMethod::chain_rule());
    CHECK((perm.k0 - base.k0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((perm.b[0] - base.b[0]).cwiseAbs().maxCoeff() < 1e-12);

    TrajectoryDataset doubled = data;
    doubled.samples.insert(doubled.samples.end(), data.samples.begin(), data.samples.end());
    GeneratorModel dup = fit_generator(dict, doubled, DerivativeMethod::chain_rule());
    CHECK((dup.k0 - base.k0).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dup.b[0] - base.b[0]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fitted generators are control-affine on invariant dictionaries") {
    // Linear plant, affine dictionary: the span is invariant, so the model
    // fitted at levels {0, 1} explains data generated at u = 0.5 down to the
    // regression floor.
    Matrix a(2, 2);
    a << -0.1, 0.9, -0.9, -0.1;
    Matrix b(2, 1);
    b << 0.0, 1.0;
    LinearPlant plant(a, b, Box::uniform(1, -1, 1));
    Dictionary dict = Dictionary::monomials(2, 1);

    TrajectoryDataset train = scatter(plant, Box::uniform(2, -2, 2),
                                      {vec1(0.0), vec1(1.0)}, 40, true, false, 0.0, 111);
    GeneratorModel g = fit_generator(dict, train, DerivativeMethod::chain_rule());

    TrajectoryDataset test = scatter(plant, Box::uniform(2, -2, 2), {vec1(0.5)}, 30, true,
                                     false, 0.0, 112);
    Matrix psi_dot =
        estimate_observable_derivatives(dict, test, DerivativeMethod::chain_rule());
    double worst = 0.0;
    for (size_t j = 0; j < test.samples.size(); ++j) {
        Vector pred = g.at(test.samples[j].u) * dict.eval(test.samples[j].x);
        worst = std::max(worst,
                         (pred - psi_dot.col(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("operator interpolation error is second order per step (circle)") {
    CircleRotationPlant plant;
    Dictionary dict = Dictionary::fourier_pair(1);

    std::vector<double> dts = {0.2, 0.1, 0.05};
    std::vector<double> errs;
    for (double dt : dts) {
        auto level_set = [&](double level) {
            return scatter(plant, Box::uniform(1, 0.0, 2 * kPi), {vec1(level)}, 40, false,
                           true, dt, 121);
        };
        std::vector<std::pair<Vector, TrajectoryDataset>> sets;
        sets.emplace_back(vec1(0.0), level_set(0.0));
        sets.emplace_back(vec1(1.0), level_set(1.0));
        SwitchedFamily family = fit_switched_family(dict, sets);
        const Matrix& k0 = family.operators[0].second;
        const Matrix& k1 = family.operators[1].second;
        Matrix interp = k0 + 0.5 * (k1 - k0);

        double err = 0.0;
        for (int i = 0; i < 32; ++i) {
            double x = 2 * kPi * i / 32.0;
            Vector psi = dict.eval(vec1(x));
            Vector truth = dict.eval(vec1(x + 0.5 * dt));
            err = std::max(err, (interp * psi - truth).cwiseAbs().maxCoeff());
        }
        errs.push_back(err);
    }
    // Least-squares slope of log err vs log dt.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < dts.size(); ++i) {
        double lx = std::log(dts[i]), ly = std::log(errs[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = static_cast<double>(dts.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope >= 1.8);
}

TEST_CASE("fit info reports rank and residual") {
    DuffingPlant plant;
    Dictionary dict = Dictionary::monomials(2, 3);
    TrajectoryDataset data = scatter(plant, Box::uniform(2, -2, 2), {vec1(-1.0), vec1(1.0)},
                                     50, true, false, 0.0, 131);
    FitInfo info;
    GeneratorModel g = fit_generator(dict, data, DerivativeMethod::chain_rule(), 1e-10, &info);
    CHECK(info.rows == 20);
    CHECK(info.columns == 100);
    CHECK(info.numerical_rank == 20);
    CHECK(info.residual >= 0.0);
    CHECK(g.dim() == 10);

    // Fewer samples than lifted rows: fit proceeds with a warning.
    TrajectoryDataset tiny = scatter(plant, Box::uniform(2, -2, 2), {vec1(-1.0), vec1(1.0)},
                                     8, true, false, 0.0, 132);
    FitInfo info2;
    fit_generator(dict, tiny, DerivativeMethod::chain_rule(), 1e-10, &info2);
    CHECK_FALSE(info2.warning.empty());
}
