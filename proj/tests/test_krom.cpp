#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "koopgen/krom.hpp"
#include "koopgen/plants.hpp"

using namespace koopgen;

namespace {

Vector vec1(double v) { return Vector::Constant(1, v); }

GeneratorModel random_generator(Rng& rng, int n, int nc, double scale = 0.5) {
    GeneratorModel g;
    g.k0 = Matrix(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.k0(i, j) = scale * rng.uniform(-1, 1);
    for (int c = 0; c < nc; ++c) {
        Matrix b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = scale * rng.uniform(-1, 1);
        g.b.push_back(b);
    }
    g.dictionary = Dictionary::identity(n);
    g.input_box = Box::uniform(nc, -1, 1);
    return g;
}

PiecewiseConstantSignal random_signal(Rng& rng, int steps, int nc, double dt) {
    PiecewiseConstantSignal sig;
    sig.dt = dt;
    for (int i = 0; i < steps; ++i) {
        Vector u(nc);
        for (int j = 0; j < nc; ++j) u[j] = rng.uniform(-1, 1);
        sig.inputs.push_back(u);
    }
    return sig;
}

}  // namespace

TEST_CASE("predict_discrete basics") {
    OperatorModel m;
    m.k0dt = Matrix::Identity(3, 3);
    m.bdt = {Matrix::Zero(3, 3)};
    m.dt = 0.1;
    m.dictionary = Dictionary::identity(3);
    m.input_box = Box::uniform(1, -1, 1);

    Rng rng(1);
    PiecewiseConstantSignal sig = random_signal(rng, 5, 1, 0.1);
    Vector z0(3);
    z0 << 1, 2, 3;
    auto traj = predict_discrete(m, z0, sig);
    REQUIRE(traj.size() == 6);
    for (const Vector& z : traj) CHECK((z - z0).cwiseAbs().maxCoeff() == 0.0);

    // Scalar geometric growth 1, 2, 4, 8.
    OperatorModel s;
    s.k0dt = Matrix::Constant(1, 1, 2.0);
    s.bdt = {Matrix::Zero(1, 1)};
    s.dt = 1.0;
    s.dictionary = Dictionary::identity(1);
    s.input_box = Box::uniform(1, -1, 1);
    PiecewiseConstantSignal zero;
    zero.dt = 1.0;
    zero.inputs = {vec1(0.0), vec1(0.0), vec1(0.0)};
    auto geo = predict_discrete(s, Vector::Constant(1, 1.0), zero);
    CHECK(geo[1][0] == 2.0);
    CHECK(geo[2][0] == 4.0);
    CHECK(geo[3][0] == 8.0);

    PiecewiseConstantSignal wrong = zero;
    wrong.dt = 0.5;
    CHECK_THROWS_AS(predict_discrete(s, Vector::Constant(1, 1.0), wrong),
                    std::invalid_argument);
}

TEST_CASE("predict_continuous zero generator and scalar exponential") {
    GeneratorModel g;
    g.k0 = Matrix::Zero(2, 2);
    g.b = {Matrix::Zero(2, 2)};
    g.dictionary = Dictionary::identity(2);
    g.input_box = Box::uniform(1, -1, 1);
    PiecewiseConstantSignal sig;
    sig.dt = 0.2;
    sig.inputs = {vec1(0.3), vec1(-0.7)};
    Vector z0(2);
    z0 << 1, -1;
    for (const Vector& z : predict_continuous(g, z0, sig))
        CHECK((z - z0).cwiseAbs().maxCoeff() == 0.0);

    GeneratorModel s;
    s.k0 = Matrix::Constant(1, 1, -0.9);
    s.b = {Matrix::Zero(1, 1)};
    s.dictionary = Dictionary::identity(1);
    s.input_box = Box::uniform(1, -1, 1);
    PiecewiseConstantSignal one;
    one.dt = 0.4;
    one.inputs = {vec1(0.0)};
    auto traj = predict_continuous(s, Vector::Constant(1, 2.0), one);
    CHECK(traj[1][0] == doctest::Approx(2.0 * std::exp(-0.36)).epsilon(1e-12));
}

TEST_CASE("euler continuous prediction equals the converted discrete model") {
    Rng rng(7);
    GeneratorModel g = random_generator(rng, 6, 2);
    PiecewiseConstantSignal sig = random_signal(rng, 10, 2, 0.13);
    Vector z0(6);
    for (int i = 0; i < 6; ++i) z0[i] = rng.uniform(-1, 1);

    auto cont = predict_continuous(g, z0, sig, IntegrationScheme::Euler);
    auto disc = predict_discrete(generator_to_operator(g, sig.dt), z0, sig);
    REQUIRE(cont.size() == disc.size());
    for (size_t k = 0; k < cont.size(); ++k)
        CHECK((cont[k] - disc[k]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generator/operator conversion") {
    GeneratorModel zero;
    zero.k0 = Matrix::Zero(3, 3);
    zero.b = {Matrix::Zero(3, 3)};
    zero.dictionary = Dictionary::identity(3);
    zero.input_box = Box::uniform(1, -1, 1);
    OperatorModel conv = generator_to_operator(zero, 0.7);
    CHECK((conv.k0dt - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(conv.bdt[0].cwiseAbs().maxCoeff() == 0.0);

    GeneratorModel s;
    s.k0 = Matrix::Constant(1, 1, 0.25);
    s.b = {Matrix::Zero(1, 1)};
    s.dictionary = Dictionary::identity(1);
    s.input_box = Box::uniform(1, -1, 1);
    CHECK(generator_to_operator(s, 0.5).k0dt(0, 0) == doctest::Approx(1.125));
}

TEST_CASE("conversion round trip is exact for representable values") {
    // Dyadic entries and a power-of-two dt: the affine map round-trips
    // without rounding.
    Rng rng(17);
    GeneratorModel g;
    const int n = 5;
    g.k0 = Matrix(n, n);
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            g.k0(i, j) = std::floor(rng.uniform(-1024, 1024)) / 1024.0;
            b(i, j) = std::floor(rng.uniform(-1024, 1024)) / 1024.0;
        }
    g.b = {b};
    g.dictionary = Dictionary::identity(n);
    g.input_box = Box::uniform(1, -1, 1);

    GeneratorModel back = operator_to_generator(generator_to_operator(g, 0.25));
    CHECK((back.k0 - g.k0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.b[0] - g.b[0]).cwiseAbs().maxCoeff() == 0.0);

    // General doubles round-trip to relative machine precision.
    GeneratorModel grand = random_generator(rng, 6, 1);
    GeneratorModel back2 = operator_to_generator(generator_to_operator(grand, 0.31));
    CHECK((back2.k0 - grand.k0).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("exact scheme semigroup on a fixed generator") {
    Rng rng(23);
    GeneratorModel g = random_generator(rng, 4, 1);
    Vector z0(4);
    for (int i = 0; i < 4; ++i) z0[i] = rng.uniform(-1, 1);
    Vector u = vec1(0.4);

    PiecewiseConstantSignal fine;
    fine.dt = 0.2;
    fine.inputs = {u, u, u, u};
    PiecewiseConstantSignal coarse;
    coarse.dt = 0.4;
    coarse.inputs = {u, u};

    auto zf = predict_continuous(g, z0, fine, IntegrationScheme::Exact);
    auto zc = predict_continuous(g, z0, coarse, IntegrationScheme::Exact);
    CHECK((zf[2] - zc[1]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((zf[4] - zc[2]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("one-step maps are affine in the input by construction") {
    Rng rng(29);
    GeneratorModel g = random_generator(rng, 5, 2);
    OperatorModel m = generator_to_operator(g, 0.2);
    for (int trial = 0; trial < 50; ++trial) {
        Vector z(5);
        for (int i = 0; i < 5; ++i) z[i] = rng.uniform(-1, 1);
        Vector u1(2), u2(2);
        for (int i = 0; i < 2; ++i) {
            u1[i] = rng.uniform(-1, 1);
            u2[i] = rng.uniform(-1, 1);
        }
        double alpha = rng.uniform01();
        Vector mix = alpha * u1 + (1 - alpha) * u2;

        Vector lhs = m.at(mix) * z;
        Vector rhs = alpha * (m.at(u1) * z) + (1 - alpha) * (m.at(u2) * z);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);

        Vector glhs = g.at(mix) * z;
        Vector grhs = alpha * (g.at(u1) * z) + (1 - alpha) * (g.at(u2) * z);
        CHECK((glhs - grhs).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("bank selection covers the box with lowest-index tie break") {
    Rng rng(31);
    GeneratorModel g = random_generator(rng, 2, 1);
    OperatorModel m = generator_to_operator(g, 0.1);

    ModelBank bank;
    bank.input_box = Box::uniform(1, -2, 2);
    bank.regions = {Box(vec1(-2.0), vec1(0.0)), Box(vec1(0.0), vec1(2.0))};
    bank.models = {AnyModel(m), AnyModel(m)};

    CHECK(bank_select(bank, vec1(1.0)) == 1);
    CHECK(bank_select(bank, vec1(-1.5)) == 0);
    CHECK(bank_select(bank, vec1(0.0)) == 0);  // boundary: lowest index wins
    CHECK_THROWS_AS(bank_select(bank, vec1(3.0)), OutOfDomain);

    ModelBank single;
    single.input_box = Box::uniform(1, -1, 1);
    single.regions = {Box::uniform(1, -1, 1)};
    single.models = {AnyModel(m)};
    CHECK(bank_select(single, vec1(0.7)) == 0);
}

TEST_CASE("lift_and_predict checks the dictionary descriptor") {
    Rng rng(37);
    GeneratorModel g = random_generator(rng, 3, 1);
    g.dictionary = Dictionary::monomials(1, 2);
    PiecewiseConstantSignal sig = random_signal(rng, 4, 1, 0.1);

    auto traj = lift_and_predict(AnyModel(g), Dictionary::monomials(1, 2),
                                 Vector::Constant(1, 0.5), sig);
    CHECK(traj.size() == 5);
    CHECK(traj[0][0] == 1.0);    // constant coordinate
    CHECK(traj[0][1] == 0.5);    // x
    CHECK(traj[0][2] == 0.25);   // x^2

    CHECK_THROWS_AS(lift_and_predict(AnyModel(g), Dictionary::monomials(1, 3),
                                     Vector::Constant(1, 0.5), sig),
                    std::invalid_argument);

    // Identity operator: constant lifted trajectory.
    OperatorModel frozen;
    frozen.k0dt = Matrix::Identity(3, 3);
    frozen.bdt = {Matrix::Zero(3, 3)};
    frozen.dt = sig.dt;
    frozen.dictionary = Dictionary::monomials(1, 2);
    frozen.input_box = Box::uniform(1, -1, 1);
    auto fr = lift_and_predict(AnyModel(frozen), Dictionary::monomials(1, 2),
                               Vector::Constant(1, 0.5), sig);
    for (const Vector& z : fr) CHECK((z - fr[0]).cwiseAbs().maxCoeff() == 0.0);
}
