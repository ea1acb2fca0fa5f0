#pragma once

#include <string>

#include "tenrank/contraction.hpp"
#include "tenrank/tensor.hpp"

namespace tenrank {

enum class RankClass {
    Zero,
    RankOne,
    RankTwoShared,  // rank 2 with a deficient contraction image
    RankTwoGeneric, // rank 2, hyperdeterminant > 0
    ThreeTangent,   // rank 3, border rank 2 (hyperdeterminant = 0)
    ThreeGeneric,   // rank 3, border rank 3 (hyperdeterminant < 0)
};

std::string to_string(RankClass c);

/// Full rank reading of a real 2x2x2 tensor.
struct RankReport {
    double delta = 0.0;     // raw hyperdeterminant value
    double delta_hat = 0.0; // delta / ||t||_2^4
    MultilinearRank mlrank;
    int rank = 0;
    int border_rank = 0;
    RankClass class_tag = RankClass::Zero;
    double delta_tol_used = 0.0;
};

/// Coefficients of det(x*S0 + y*S1) = qa*x^2 + qb*x*y + qc*y^2 over a mode's
/// two slices. The discriminant equals the hyperdeterminant for every mode.
struct PencilQuadratic {
    int mode = 0;
    double qa = 0.0;
    double qb = 0.0;
    double qc = 0.0;

    [[nodiscard]] double discriminant() const { return qb * qb - 4.0 * qa * qc; }
};

inline constexpr double kDefaultDeltaTol = 1e-10;

/// Degree-4 hyperdeterminant of a 2x2x2 tensor.
double hyperdeterminant(const DenseTensor& t);

PencilQuadratic pencil_quadratic(const DenseTensor& t, int mode);

/// Decision table on (multilinear rank, scaled hyperdeterminant). Exposed
/// separately so every row, including impossible readings, is testable.
RankReport classify_decision(const MultilinearRank& ml, double delta,
                             double norm2, double tol_rel);

/// Rank, border rank and class of a 2x2x2 tensor. The hyperdeterminant test
/// uses |delta| <= tol_rel * ||t||^4 so the decision is scale-free.
RankReport classify_rank(const DenseTensor& t, double tol_rel = kDefaultDeltaTol);

/// |delta(g.t) - det(g1)^2 det(g2)^2 det(g3)^2 delta(t)|.
double delta_scaling_check(const DenseTensor& t, const Matrix& g1,
                           const Matrix& g2, const Matrix& g3);

} // namespace tenrank
