#include "koopgen/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace koopgen {

std::string basis_kind_name(BasisKind kind) {
    switch (kind) {
        case BasisKind::Identity: return "identity";
        case BasisKind::Monomial: return "monomial";
        case BasisKind::Rbf: return "rbf";
        case BasisKind::FourierPair: return "fourier_pair";
    }
    return "?";
}

BasisKind parse_basis_kind(const std::string& name) {
    if (name == "identity") return BasisKind::Identity;
    if (name == "monomial") return BasisKind::Monomial;
    if (name == "rbf") return BasisKind::Rbf;
    if (name == "fourier_pair") return BasisKind::FourierPair;
    throw std::invalid_argument("unknown dictionary kind: " + name);
}

namespace {

void enumerate_exponents(int nvars, int remaining, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == nvars - 1) {
        current.push_back(remaining);
        out.push_back(current);
        current.pop_back();
        return;
    }
    for (int e = remaining; e >= 0; --e) {  // leading variable first
        current.push_back(e);
        enumerate_exponents(nvars, remaining - e, current, out);
        current.pop_back();
    }
}

std::vector<std::vector<int>> graded_lex_exponents(int nvars, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    for (int g = 0; g <= degree; ++g) enumerate_exponents(nvars, g, current, out);
    return out;
}

}  // namespace

Dictionary Dictionary::identity(int dim) {
    if (dim < 1) throw std::invalid_argument("Dictionary::identity: dim must be >= 1");
    Dictionary d;
    d.kind_ = BasisKind::Identity;
    d.input_dim_ = dim;
    d.output_dim_ = dim;
    return d;
}

Dictionary Dictionary::monomials(int dim, int degree) {
    if (dim < 1 || degree < 0)
        throw std::invalid_argument("Dictionary::monomials: dim >= 1, degree >= 0 required");
    Dictionary d;
    d.kind_ = BasisKind::Monomial;
    d.input_dim_ = dim;
    d.degree_ = degree;
    d.exponents_ = graded_lex_exponents(dim, degree);
    d.output_dim_ = static_cast<int>(d.exponents_.size());
    return d;
}

Dictionary Dictionary::rbf(Matrix centers, double shape) {
    if (centers.cols() < 1)
        throw std::invalid_argument("Dictionary::rbf: at least one center required");
    if (!(shape > 0.0)) throw std::invalid_argument("Dictionary::rbf: shape must be positive");
    Dictionary d;
    d.kind_ = BasisKind::Rbf;
    d.input_dim_ = static_cast<int>(centers.rows());
    d.output_dim_ = static_cast<int>(centers.cols());
    d.centers_ = std::move(centers);
    d.shape_ = shape;
    return d;
}

Dictionary Dictionary::fourier_pair(int harmonics) {
    if (harmonics < 1)
        throw std::invalid_argument("Dictionary::fourier_pair: harmonics must be >= 1");
    Dictionary d;
    d.kind_ = BasisKind::FourierPair;
    d.input_dim_ = 1;
    d.harmonics_ = harmonics;
    d.output_dim_ = 2 * harmonics;
    return d;
}

Dictionary Dictionary::with_delay(int depth) const {
    if (depth < 1) throw std::invalid_argument("Dictionary::with_delay: depth must be >= 1");
    if (input_dim_ % std::max(depth, 1) != 0 && depth > 1)
        throw std::invalid_argument(
            "Dictionary::with_delay: input dimension must be depth * raw dimension");
    Dictionary d = *this;
    d.delay_depth_ = depth;
    return d;
}

Vector Dictionary::eval(const Vector& x) const {
    if (x.size() != input_dim_)
        throw std::invalid_argument("Dictionary::eval: state dimension mismatch");

    switch (kind_) {
        case BasisKind::Identity:
            return x;
        case BasisKind::Monomial: {
            Vector out(output_dim_);
            for (int i = 0; i < output_dim_; ++i) {
                double value = 1.0;
                const auto& expo = exponents_[i];
                for (int j = 0; j < input_dim_; ++j)
                    for (int e = 0; e < expo[j]; ++e) value *= x[j];
                out[i] = value;
            }
            return out;
        }
        case BasisKind::Rbf: {
            Vector out(output_dim_);
            const double denom = 2.0 * shape_ * shape_;
            for (int i = 0; i < output_dim_; ++i)
                out[i] = std::exp(-(x - centers_.col(i)).squaredNorm() / denom);
            return out;
        }
        case BasisKind::FourierPair: {
            Vector out(output_dim_);
            for (int k = 1; k <= harmonics_; ++k) {
                out[2 * (k - 1)] = std::cos(k * x[0]);
                out[2 * (k - 1) + 1] = std::sin(k * x[0]);
            }
            return out;
        }
    }
    throw std::logic_error("Dictionary::eval: unreachable");
}

Matrix Dictionary::jacobian(const Vector& x) const {
    if (!differentiable())
        throw UnsupportedOperation(
            "Dictionary::jacobian: delay-embedded dictionaries are not differentiable");
    if (x.size() != input_dim_)
        throw std::invalid_argument("Dictionary::jacobian: state dimension mismatch");

    Matrix jac = Matrix::Zero(output_dim_, input_dim_);
    switch (kind_) {
        case BasisKind::Identity:
            jac.setIdentity();
            return jac;
        case BasisKind::Monomial: {
            for (int i = 0; i < output_dim_; ++i) {
                const auto& expo = exponents_[i];
                for (int j = 0; j < input_dim_; ++j) {
                    if (expo[j] == 0) continue;
                    double value = static_cast<double>(expo[j]);
                    for (int l = 0; l < input_dim_; ++l) {
                        int e = expo[l] - (l == j ? 1 : 0);
                        for (int p = 0; p < e; ++p) value *= x[l];
                    }
                    jac(i, j) = value;
                }
            }
            return jac;
        }
        case BasisKind::Rbf: {
            const double denom = 2.0 * shape_ * shape_;
            for (int i = 0; i < output_dim_; ++i) {
                Vector diff = x - centers_.col(i);
                double phi = std::exp(-diff.squaredNorm() / denom);
                jac.row(i) = (-phi / (shape_ * shape_)) * diff.transpose();
            }
            return jac;
        }
        case BasisKind::FourierPair: {
            for (int k = 1; k <= harmonics_; ++k) {
                jac(2 * (k - 1), 0) = -k * std::sin(k * x[0]);
                jac(2 * (k - 1) + 1, 0) = k * std::cos(k * x[0]);
            }
            return jac;
        }
    }
    throw std::logic_error("Dictionary::jacobian: unreachable");
}

Matrix Dictionary::eval_batch(const Matrix& x_batch) const {
    if (x_batch.cols() < 1)
        throw std::invalid_argument("Dictionary::eval_batch: empty batch");
    if (x_batch.rows() != input_dim_)
        throw std::invalid_argument("Dictionary::eval_batch: state dimension mismatch");
    Matrix out(output_dim_, x_batch.cols());
    for (Eigen::Index j = 0; j < x_batch.cols(); ++j) out.col(j) = eval(x_batch.col(j));
    return out;
}

std::vector<int> Dictionary::state_coordinate_indices() const {
    std::vector<int> idx;
    if (kind_ == BasisKind::Identity) {
        idx.resize(input_dim_);
        for (int i = 0; i < input_dim_; ++i) idx[i] = i;
    } else if (kind_ == BasisKind::Monomial && degree_ >= 1) {
        // Graded lex: the degree-1 block follows the constant, in variable order.
        idx.resize(input_dim_);
        for (int i = 0; i < input_dim_; ++i) idx[i] = 1 + i;
    }
    return idx;
}

bool Dictionary::same_descriptor(const Dictionary& other) const {
    if (kind_ != other.kind_ || input_dim_ != other.input_dim_ ||
        delay_depth_ != other.delay_depth_)
        return false;
    switch (kind_) {
        case BasisKind::Identity: return true;
        case BasisKind::Monomial: return degree_ == other.degree_;
        case BasisKind::FourierPair: return harmonics_ == other.harmonics_;
        case BasisKind::Rbf:
            return shape_ == other.shape_ && centers_.rows() == other.centers_.rows() &&
                   centers_.cols() == other.centers_.cols() && centers_ == other.centers_;
    }
    return false;
}

std::string Dictionary::describe() const {
    std::ostringstream os;
    os << basis_kind_name(kind_) << " n=" << input_dim_;
    if (kind_ == BasisKind::Monomial) os << " degree=" << degree_;
    if (kind_ == BasisKind::FourierPair) os << " harmonics=" << harmonics_;
    if (kind_ == BasisKind::Rbf) os << " centers=" << centers_.cols() << " shape=" << shape_;
    if (delay_depth_ > 1) os << " delay=" << delay_depth_;
    return os.str();
}

namespace {

constexpr int kHaltonPrimes[32] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                   37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
                                   83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(int index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * (index % base);
        index /= base;
        f /= base;
    }
    return result;
}

}  // namespace

std::vector<Vector> halton_rbf_centers(int dim, int k, const Box& bounds) {
    if (dim < 1 || dim > 32)
        throw std::invalid_argument("halton_rbf_centers: dim must be in [1, 32]");
    if (k < 1) throw std::invalid_argument("halton_rbf_centers: k must be >= 1");
    if (bounds.dim() != dim)
        throw std::invalid_argument("halton_rbf_centers: bounds dimension mismatch");
    if (!all_finite(bounds.lo) || !all_finite(bounds.hi))
        throw std::invalid_argument("halton_rbf_centers: bounds must be finite");

    std::vector<Vector> points(k, Vector(dim));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < dim; ++j) {
            double t = radical_inverse(i + 1, kHaltonPrimes[j]);
            points[i][j] = bounds.lo[j] + t * (bounds.hi[j] - bounds.lo[j]);
        }
    return points;
}

DelayBuffer::DelayBuffer(int depth, int raw_dim) : depth_(depth), raw_dim_(raw_dim) {
    if (depth < 1 || raw_dim < 1)
        throw std::invalid_argument("DelayBuffer: depth and raw dimension must be >= 1");
}

void DelayBuffer::push(const Vector& obs) {
    if (obs.size() != raw_dim_)
        throw std::invalid_argument("DelayBuffer::push: observation dimension mismatch");
    ring_.push_front(obs);
    if (static_cast<int>(ring_.size()) > depth_) ring_.pop_back();
}

Vector DelayBuffer::stacked() const {
    if (!ready())
        throw std::invalid_argument("DelayBuffer::stacked: buffer not yet full");
    Vector out(depth_ * raw_dim_);
    for (int i = 0; i < depth_; ++i) out.segment(i * raw_dim_, raw_dim_) = ring_[i];
    return out;
}

}  // namespace koopgen
