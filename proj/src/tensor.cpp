#include "tenrank/tensor.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace tenrank {

namespace {

void require_finite(const std::vector<double>& coeffs) {
    for (double c : coeffs) {
        if (!std::isfinite(c)) {
            throw Error("tensor entry is not finite");
        }
    }
}

} // namespace

Shape::Shape(int d1, int d2, int d3) : n1(d1), n2(d2), n3(d3) {
    if (n1 < 1 || n2 < 1 || n3 < 1) {
        throw DimensionMismatch("shape dimensions must be positive");
    }
    constexpr std::size_t kMaxSize = std::size_t{1} << 31;
    if (static_cast<std::size_t>(n1) * n2 * n3 > kMaxSize) {
        throw DimensionMismatch("shape too large");
    }
}

int Shape::dim(int mode) const {
    switch (mode) {
    case 1: return n1;
    case 2: return n2;
    case 3: return n3;
    default: throw DimensionMismatch("mode must be 1, 2 or 3");
    }
}

DenseTensor::DenseTensor(Shape shape)
    : shape_(shape), coeffs_(shape.size(), 0.0) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> coeffs)
    : shape_(shape), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != shape_.size()) {
        throw DimensionMismatch("coefficient count does not match shape");
    }
    require_finite(coeffs_);
}

bool DenseTensor::is_zero() const {
    for (double c : coeffs_) {
        if (c != 0.0) return false;
    }
    return true;
}

Covector Covector::axis(int n, int t) {
    Vec c = Vec::Zero(n);
    c[t] = 1.0;
    return Covector(std::move(c));
}

double Covector::operator()(const Vec& v) const {
    if (v.size() != coords.size()) {
        throw DimensionMismatch("covector/vector length mismatch");
    }
    return coords.dot(v);
}

Shape Rank2Candidate::shape() const {
    return Shape(static_cast<int>(first[0].size()),
                 static_cast<int>(first[1].size()),
                 static_cast<int>(first[2].size()));
}

DenseTensor Rank2Candidate::dense() const {
    for (int m = 0; m < 3; ++m) {
        if (first[m].size() != second[m].size()) {
            throw DimensionMismatch("candidate factor lengths differ");
        }
    }
    return add(rank_one(first[0], first[1], first[2]),
               rank_one(second[0], second[1], second[2]));
}

double Rank2Candidate::factor_norm_max() const {
    double m = 0.0;
    for (int i = 0; i < 3; ++i) {
        m = std::max(m, first[i].norm());
        m = std::max(m, second[i].norm());
    }
    return m;
}

DenseTensor rank_one(const Vec& u, const Vec& v, const Vec& w) {
    Shape shape(static_cast<int>(u.size()), static_cast<int>(v.size()),
                static_cast<int>(w.size()));
    DenseTensor t(shape);
    std::size_t idx = 0;
    for (int i = 0; i < shape.n1; ++i) {
        for (int j = 0; j < shape.n2; ++j) {
            const double uv = u[i] * v[j];
            for (int k = 0; k < shape.n3; ++k) {
                t.coeffs()[idx++] = uv * w[k];
            }
        }
    }
    return t;
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    if (!(a.shape() == b.shape())) {
        throw DimensionMismatch("add: shapes differ");
    }
    DenseTensor r(a.shape());
    for (std::size_t i = 0; i < r.coeffs().size(); ++i) {
        r.coeffs()[i] = a.coeffs()[i] + b.coeffs()[i];
    }
    return r;
}

DenseTensor sub(const DenseTensor& a, const DenseTensor& b) {
    if (!(a.shape() == b.shape())) {
        throw DimensionMismatch("sub: shapes differ");
    }
    DenseTensor r(a.shape());
    for (std::size_t i = 0; i < r.coeffs().size(); ++i) {
        r.coeffs()[i] = a.coeffs()[i] - b.coeffs()[i];
    }
    return r;
}

DenseTensor scale(const DenseTensor& a, double c) {
    DenseTensor r(a.shape());
    for (std::size_t i = 0; i < r.coeffs().size(); ++i) {
        r.coeffs()[i] = c * a.coeffs()[i];
    }
    return r;
}

double p_norm(const DenseTensor& t, int p) {
    if (p < 1) {
        throw Error("p_norm: p must be a positive integer");
    }
    if (p == 2) {
        double s = 0.0;
        for (double c : t.coeffs()) s += c * c;
        return std::sqrt(s);
    }
    double s = 0.0;
    for (double c : t.coeffs()) {
        s += std::pow(std::abs(c), static_cast<double>(p));
    }
    return std::pow(s, 1.0 / p);
}

double frobenius_norm(const DenseTensor& t) { return p_norm(t, 2); }

double frobenius_inner(const DenseTensor& a, const DenseTensor& b) {
    if (!(a.shape() == b.shape())) {
        throw DimensionMismatch("frobenius_inner: shapes differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.coeffs().size(); ++i) {
        s += a.coeffs()[i] * b.coeffs()[i];
    }
    return s;
}

DenseTensor multilinear_action(const Matrix& g1, const Matrix& g2,
                               const Matrix& g3, const DenseTensor& t) {
    const Shape& s = t.shape();
    if (g1.rows() != s.n1 || g1.cols() != s.n1 || g2.rows() != s.n2 ||
        g2.cols() != s.n2 || g3.rows() != s.n3 || g3.cols() != s.n3) {
        throw DimensionMismatch("multilinear_action: matrix sizes do not match shape");
    }
    // Contract one mode at a time.
    DenseTensor a(s);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j)
            for (int k = 0; k < s.n3; ++k) {
                double acc = 0.0;
                for (int q = 0; q < s.n1; ++q) acc += g1(i, q) * t(q, j, k);
                a(i, j, k) = acc;
            }
    DenseTensor b(s);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j)
            for (int k = 0; k < s.n3; ++k) {
                double acc = 0.0;
                for (int q = 0; q < s.n2; ++q) acc += g2(j, q) * a(i, q, k);
                b(i, j, k) = acc;
            }
    DenseTensor c(s);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j)
            for (int k = 0; k < s.n3; ++k) {
                double acc = 0.0;
                for (int q = 0; q < s.n3; ++q) acc += g3(k, q) * b(i, j, q);
                c(i, j, k) = acc;
            }
    return c;
}

DenseTensor permute_modes(const DenseTensor& t, const std::array<int, 3>& perm) {
    std::array<bool, 3> seen{false, false, false};
    for (int m : perm) {
        if (m < 0 || m > 2 || seen[m]) {
            throw DimensionMismatch("permute_modes: invalid permutation");
        }
        seen[m] = true;
    }
    const Shape& s = t.shape();
    const std::array<int, 3> dims{s.n1, s.n2, s.n3};
    DenseTensor r(Shape(dims[perm[0]], dims[perm[1]], dims[perm[2]]));
    std::array<int, 3> old_idx{};
    for (int i = 0; i < r.shape().n1; ++i)
        for (int j = 0; j < r.shape().n2; ++j)
            for (int k = 0; k < r.shape().n3; ++k) {
                old_idx[perm[0]] = i;
                old_idx[perm[1]] = j;
                old_idx[perm[2]] = k;
                r(i, j, k) = t(old_idx[0], old_idx[1], old_idx[2]);
            }
    return r;
}

DenseTensor sample_gaussian(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseTensor t(shape);
    for (double& c : t.coeffs()) c = normal(rng);
    return t;
}

} // namespace tenrank
