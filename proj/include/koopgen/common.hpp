#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace koopgen {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy shared by all modules. Invalid inputs and dimension
// mismatches throw std::invalid_argument directly.
struct UnsupportedOperation : std::logic_error {
    using std::logic_error::logic_error;
};

struct FitFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfDomain : std::domain_error {
    using std::domain_error::domain_error;
};

// Axis-aligned box, used for input constraint sets and sampling regions.
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size())
            throw std::invalid_argument("Box: lo/hi dimension mismatch");
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (!(lo[i] <= hi[i]))
                throw std::invalid_argument("Box: lo > hi in component " + std::to_string(i));
    }

    static Box uniform(int dim, double lo, double hi) {
        return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
    }

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Vector& u, double tol = 0.0) const {
        if (u.size() != lo.size()) return false;
        for (Eigen::Index i = 0; i < u.size(); ++i)
            if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
        return true;
    }

    Vector clamp(const Vector& u) const {
        return u.cwiseMax(lo).cwiseMin(hi);
    }

    Vector center() const { return 0.5 * (lo + hi); }
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

// Deterministic uniform deviates from a fixed, named generator (mt19937_64).
// The 53-bit mapping is spelled out so streams are identical across
// platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform01() {
        return static_cast<double>(state_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    Vector uniform_in(const Box& box) {
        Vector u(box.dim());
        for (int i = 0; i < box.dim(); ++i) u[i] = uniform(box.lo[i], box.hi[i]);
        return u;
    }

    // Standard normal via Box-Muller (avoids std::normal_distribution, which
    // is not bit-stable across standard libraries).
    double normal() {
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t raw() { return state_(); }

private:
    std::mt19937_64 state_;
};

}  // namespace koopgen
