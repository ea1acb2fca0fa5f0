#pragma once

#include <array>
#include <utility>
#include <vector>

#include "tenrank/classify.hpp"
#include "tenrank/tensor.hpp"

namespace tenrank {

/// Base point and offset vectors of a tensor tangent to the variety of
/// simple tensors: dense form is
///   offset1 (x) base2 (x) base3  +  base1 (x) offset2 (x) base3
///                                +  base1 (x) base2 (x) offset3.
struct TangentForm {
    std::array<Vec, 3> base;
    std::array<Vec, 3> offset;

    [[nodiscard]] Shape shape() const;
    [[nodiscard]] DenseTensor dense() const;
};

DenseTensor tangent_form_dense(const TangentForm& f);

/// A list of tensors spanning a linear space, with the dimension they attain
/// under the stated singular-value tolerance.
struct SpanSet {
    std::vector<DenseTensor> spanning;
    int dimension = 0;
    double tol_used = 0.0;
};

/// Residual norm of the least-squares fit of t inside the span.
double span_residual(const SpanSet& s, const DenseTensor& t);

/// Spanning set of the tangent space of the simple-tensor variety at
/// point1 (x) point2 (x) point3: axis substitutions in each mode.
SpanSet segre_tangent_span(const std::array<Vec, 3>& point,
                           double tol_rel = kDefaultRankTol);

/// Tangent space of the second secant variety at a rank-two point: union of
/// the tangent spans at the two factor triples.
SpanSet secant_tangent_span(const Rank2Candidate& c,
                            double tol_rel = kDefaultRankTol);

/// n-th element of the rank <= 2 sequence converging to the tangent form:
///   n (base + offset/n)^(x3) - n base^(x3),
/// with the weight n distributed as n^(1/3) across the factors of each term.
Rank2Candidate border_sequence(const TangentForm& f, long long n);

/// tau_n - dense(f), evaluated from the expansion in 1/n so no large-term
/// cancellation occurs.
DenseTensor border_residual(const TangentForm& f, long long n);

/// Constants (C1, C2) of the bound ||tau_n - dense(f)|| <= C1/n + C2/n^2.
std::pair<double, double> border_bound_constants(const TangentForm& f);

/// Least-squares offsets making the tangent form at the given base as close
/// to t as the tangent space allows. The base-parallel offset component is
/// split evenly across the three modes.
TangentForm tangent_fit_offsets(const DenseTensor& t,
                                const std::array<Vec, 3>& base);

/// Damped least-squares descent of ||dense(f) - t|| over the twelve tangent
/// form parameters. Returns the final error norm.
double tangent_form_polish(TangentForm& f, const DenseTensor& t, int max_iter);

/// Recover the tangency point of a rank-three, border-rank-two tensor from
/// the double roots of its three slice pencils. The returned base satisfies
/// span_residual(segre_tangent_span(base), t) < 1e-8 * ||t||; offsets are
/// gauge-fixed with the base-parallel component split evenly across modes.
TangentForm tangency_point(const DenseTensor& t);

/// Tangency recovery run independently through each mode's pencil, with the
/// pairwise angular distances between the recovered base points.
struct UniquenessReport {
    std::array<std::array<Vec, 3>, 3> per_mode_base;
    std::array<double, 3> pairwise_angle{}; // (1,2), (1,3), (2,3)
    double max_angle = 0.0;
};

UniquenessReport uniqueness_witness(const DenseTensor& t);

} // namespace tenrank
