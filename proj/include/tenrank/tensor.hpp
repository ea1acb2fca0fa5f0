#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

#include "tenrank/errors.hpp"

namespace tenrank {

using Vec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dimensions of an order-3 tensor space V1 (x) V2 (x) V3.
struct Shape {
    int n1 = 0;
    int n2 = 0;
    int n3 = 0;

    Shape() = default;
    Shape(int d1, int d2, int d3);

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(n1) * n2 * n3;
    }
    [[nodiscard]] int dim(int mode) const; // mode is 1-based
    bool operator==(const Shape&) const = default;
};

/// Dense order-3 tensor in the fixed standard basis. Coefficients are stored
/// row-major: entry (i,j,k) sits at linear index ((i*n2)+j)*n3 + k.
class DenseTensor {
  public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape); // zero-filled
    DenseTensor(Shape shape, std::vector<double> coeffs);

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] const std::vector<double>& coeffs() const { return coeffs_; }
    [[nodiscard]] std::vector<double>& coeffs() { return coeffs_; }

    [[nodiscard]] double operator()(int i, int j, int k) const {
        return coeffs_[index(i, j, k)];
    }
    double& operator()(int i, int j, int k) { return coeffs_[index(i, j, k)]; }

    [[nodiscard]] std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * shape_.n2 + j) * shape_.n3 + k;
    }

    [[nodiscard]] bool is_zero() const;

  private:
    Shape shape_;
    std::vector<double> coeffs_;
};

/// Element of a mode's dual space, in the dual standard basis.
struct Covector {
    Vec coords;

    explicit Covector(Vec c) : coords(std::move(c)) {}
    /// Dual basis element e*_t of an n-dimensional mode.
    static Covector axis(int n, int t);

    [[nodiscard]] double operator()(const Vec& v) const;
};

/// Rank <= 2 tensor held in factored form: two factor triples.
struct Rank2Candidate {
    std::array<Vec, 3> first;
    std::array<Vec, 3> second;

    [[nodiscard]] Shape shape() const;
    [[nodiscard]] DenseTensor dense() const;
    [[nodiscard]] double factor_norm_max() const;
};

// Vector-space operations.
DenseTensor rank_one(const Vec& u, const Vec& v, const Vec& w);
DenseTensor add(const DenseTensor& a, const DenseTensor& b);
DenseTensor sub(const DenseTensor& a, const DenseTensor& b);
DenseTensor scale(const DenseTensor& a, double c);

/// Entrywise p-norm (sum |a_ijk|^p)^(1/p) for integer p >= 1.
double p_norm(const DenseTensor& t, int p);

/// Frobenius norm, i.e. p_norm(t, 2).
double frobenius_norm(const DenseTensor& t);

/// Entrywise inner product inducing the Frobenius norm.
double frobenius_inner(const DenseTensor& a, const DenseTensor& b);

/// Apply (g1, g2, g3) to the mode fibers. On simple tensors this equals
/// rank_one(g1*u, g2*v, g3*w).
DenseTensor multilinear_action(const Matrix& g1, const Matrix& g2,
                               const Matrix& g3, const DenseTensor& t);

/// Reorder modes: new mode m is old mode perm[m] (0-based entries).
DenseTensor permute_modes(const DenseTensor& t, const std::array<int, 3>& perm);

/// Tensor with i.i.d. standard normal entries; identical output for equal
/// seeds within one build.
DenseTensor sample_gaussian(const Shape& shape, std::uint64_t seed);

} // namespace tenrank
