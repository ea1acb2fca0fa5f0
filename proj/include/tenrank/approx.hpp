#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tenrank/geometry.hpp"

namespace tenrank {

/// Rank-two candidate normalized so that the shared-direction mode is
/// mode 3: dense form (in the permuted frame) is
///   e_0 (x) (a x2_1 + b x2_2) (x) x3_1  +  e_1 (x) (c x2_1 + d x2_2) (x) x3_1.
struct DeficientCandidate {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0; // mode-1 coordinates
    Vec x2_1, x2_2; // independent second-mode factors
    Vec x3_1;       // shared third-mode factor
    Vec x3_2;       // unit vector orthogonal to x3_1
    std::array<int, 3> mode_perm{0, 1, 2}; // new mode m = old mode perm[m]

    [[nodiscard]] DenseTensor dense() const;          // permuted frame
    [[nodiscard]] DenseTensor dense_original() const; // input frame
};

/// Expansion coefficients of a target against the candidate's frame:
/// (r,s) and (p,q) are the slice components on (x2_1, x2_2) (x) x3_2, and
/// (a_tau..d_tau) are the target's own fill coefficients on the x3_1 plane.
struct TargetExpansion {
    double r = 0.0, s = 0.0, p = 0.0, q = 0.0;
    double a_tau = 0.0, b_tau = 0.0, c_tau = 0.0, d_tau = 0.0;
    /// Frobenius norm of the gap between the target's x3_1-plane components
    /// and the candidate's own. Zero exactly when the projection condition
    /// holds in mode 1.
    double fill_mismatch = 0.0;
};

enum class ImproveCase { LowRankFill, Eps1, Eps2, Eps3, GaussNewton };

std::string to_string(ImproveCase c);

struct ImprovementOutcome {
    Rank2Candidate new_candidate;
    ImproveCase case_taken = ImproveCase::GaussNewton;
    double epsilon = 0.0;            // 0 when the case takes no epsilon
    double predicted_decrease = 0.0; // model decrease in error
    double achieved = 0.0;           // old error - new error, always > 0
    long long escape_n = 0;          // border-sequence index, 0 when unused
};

struct AlsTrace {
    struct Row {
        int iteration = 0;
        double error = 0.0;
        double factor_norm_max = 0.0;
        double delta_candidate = 0.0;
        double proj_residual = 0.0;
        bool perturbed = false;
    };
    std::vector<Row> rows;
    bool converged = false;
};

struct BoundaryResult {
    TangentForm nearest;
    double distance = 0.0;
    double delta_nearest = 0.0;
    RankClass class_tag = RankClass::ThreeTangent;
};

/// Coordinate-fill step: add the largest differing coordinate of tau - upsilon
/// to upsilon. Requires rank(upsilon) < r; the result has rank <= r and a
/// strictly smaller distance to tau.
DenseTensor strict_improve_lowrank(const DenseTensor& tau,
                                   const DenseTensor& upsilon, int r);

/// Detect the shared-direction mode of a rank-two candidate (within 1e-8
/// angular), permute it to mode 3 and express the first mode in coordinates.
DeficientCandidate normalize_deficient(const Rank2Candidate& c);

TargetExpansion target_expansion(const DenseTensor& tau,
                                 const DeficientCandidate& d);

/// Max over dual basis elements of the distance between the projected target
/// contraction and the candidate contraction. Zero at Frobenius-optimal
/// candidates.
double projection_condition_residual(const DenseTensor& tau,
                                     const Rank2Candidate& c, int mode);

/// The three inner products whose simultaneous vanishing would force the
/// target to be rank <= 2:
///   [0] <c x2_1 + d x2_2 | r x2_1 + s x2_2>
///   [1] <a x2_1 + b x2_2 | p x2_1 + q x2_2>
///   [2] <a x2_1 + b x2_2 | r x2_1 + s x2_2>
std::array<double, 3> orthogonality_residuals(const TargetExpansion& te,
                                              const DeficientCandidate& d);

/// Produce a rank <= 2 candidate strictly closer to tau than c. Requires tau
/// to classify ThreeGeneric (negative hyperdeterminant).
ImprovementOutcome improve_candidate(const DenseTensor& tau,
                                     const Rank2Candidate& c);

/// Alternating least squares for a rank-two candidate. Each sweep solves the
/// joint linear update of one mode's two factor vectors; the error is
/// non-increasing per sweep. Stops early once the per-sweep error decrease
/// falls below tol * ||tau||.
std::pair<Rank2Candidate, AlsTrace> als_rank2(const DenseTensor& tau,
                                              const Rank2Candidate& init,
                                              int sweeps, double tol);

/// Distance from a ThreeGeneric tensor to the tangential variety, by damped
/// least squares over the tangent-form parameters with multi-restart.
BoundaryResult boundary_distance(
    const DenseTensor& tau, int restarts, std::uint64_t seed,
    const std::vector<std::array<Vec, 3>>& extra_base_inits = {});

/// Best of `count` random rank-two candidates (factors i.i.d. normal, scaled
/// to the target's magnitude).
Rank2Candidate best_random_candidate(const DenseTensor& tau, long long count,
                                     std::uint64_t seed);

/// Error of the best candidate of best_random_candidate, without keeping it.
double best_random_error(const DenseTensor& tau, long long count,
                         std::uint64_t seed);

} // namespace tenrank
