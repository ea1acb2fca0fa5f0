#pragma once

#include "tenrank/tensor.hpp"

namespace tenrank {

/// Matrix of a mode-i contraction map over the dual standard basis. Row t is
/// the vectorized contraction against e*_t; columns run row-major over the
/// remaining two modes in their original order.
struct Flattening {
    int mode = 0; // 1, 2 or 3
    Shape shape;  // shape of the tensor the flattening came from
    Matrix matrix;
};

/// Triple of flattening ranks under a relative singular-value threshold.
struct MultilinearRank {
    int r1 = 0;
    int r2 = 0;
    int r3 = 0;
    double tol_used = 0.0;

    [[nodiscard]] int component(int mode) const;
    [[nodiscard]] int min() const { return std::min({r1, r2, r3}); }
    [[nodiscard]] int max() const { return std::max({r1, r2, r3}); }
    bool operator==(const MultilinearRank& o) const {
        return r1 == o.r1 && r2 == o.r2 && r3 == o.r3;
    }
};

inline constexpr double kDefaultRankTol = 1e-9;

/// Contract the given mode against a covector. For t = sum of simple tensors
/// the result is sum phi(v^mode) * (outer product of the other two factors).
Matrix mode_contract(const DenseTensor& t, int mode, const Covector& phi);

/// All dual-basis contractions of one mode, stacked as rows.
Flattening flatten(const DenseTensor& t, int mode);

/// Inverse of flatten.
DenseTensor unflatten(const Flattening& f);

/// Singular values of a flattening matrix, descending.
Vec flattening_singular_values(const Matrix& m);

/// Flattening ranks with threshold tol_rel relative to the largest singular
/// value of each flattening.
MultilinearRank multilinear_rank(const DenseTensor& t,
                                 double tol_rel = kDefaultRankTol);

/// Orthogonal projection (Frobenius geometry) of a target matrix onto the
/// span of the flattening's rows viewed as matrices.
Matrix image_project(const Matrix& target, const Flattening& f);

/// Max over modes of |p_norm(t,p)^p - sum over rows of row p-norm^p|.
double contraction_norm_identity_check(const DenseTensor& t, int p);

} // namespace tenrank
