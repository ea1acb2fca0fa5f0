// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "tenrank/approx.hpp"
#include "tenrank/classify.hpp"
#include "tenrank/geometry.hpp"
#include "test_util.hpp"

using namespace tenrank;
using namespace tr_test;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void fail(Outcome& out, const std::string& msg) {
    out.pass = false;
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += msg;
}

// 1. Hyperdeterminant exactness on the hand-expanded examples.
Outcome criterion1() {
    Outcome out;
    const auto start = Clock::now();
    DenseTensor diag(Shape(2, 2, 2));
    diag(0, 0, 0) = 1.0;
    diag(0, 1, 1) = 1.0;
    DenseTensor super(Shape(2, 2, 2));
    super(0, 0, 0) = 1.0;
    super(1, 1, 1) = 1.0;
    if (hyperdeterminant(diag) != 0.0) fail(out, "diagonal-slice form");
    if (hyperdeterminant(super) != 1.0) fail(out, "superdiagonal");
    if (hyperdeterminant(rot_tensor()) != -4.0) fail(out, "rotation slices");
    out.seconds = elapsed(start);
    if (out.seconds >= 1e-3) fail(out, "runtime exceeded 1 ms");
    char buf[64];
    std::snprintf(buf, sizeof buf, "3 exact values, %.3f us", out.seconds * 1e6);
    out.detail = out.pass ? buf : out.detail;
    return out;
}

// 2. Classification soundness on constructive witnesses.
Outcome criterion2() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(20240801);
    const DenseTensor super(Shape(2, 2, 2), {1, 0, 0, 0, 0, 0, 0, 1});
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        if (classify_rank(DenseTensor(Shape(2, 2, 2))).class_tag != RankClass::Zero)
            ++bad;
        if (classify_rank(rank_one(random_unit(rng, 2), random_unit(rng, 2),
                                   random_unit(rng, 2)))
                .class_tag != RankClass::RankOne)
            ++bad;
        Vec u1 = random_unit(rng, 2), u2, v1 = random_unit(rng, 2), v2;
        do {
            u2 = random_unit(rng, 2);
        } while (sin2(u1, u2) < 0.05);
        do {
            v2 = random_unit(rng, 2);
        } while (sin2(v1, v2) < 0.05);
        const Vec z = random_unit(rng, 2);
        const DenseTensor shared = add(rank_one(u1, v1, z), rank_one(u2, v2, z));
        if (classify_rank(shared).class_tag != RankClass::RankTwoShared) ++bad;
        const DenseTensor r2 = multilinear_action(
            random_invertible2(rng), random_invertible2(rng), random_invertible2(rng),
            super);
        if (classify_rank(r2).class_tag != RankClass::RankTwoGeneric) ++bad;
        if (classify_rank(random_tangent_form(rng).dense()).class_tag !=
            RankClass::ThreeTangent)
            ++bad;
        if (classify_rank(random_three_generic(rng)).class_tag !=
            RankClass::ThreeGeneric)
            ++bad;
    }
    out.seconds = elapsed(start);
    if (bad > 0) fail(out, std::to_string(bad) + " misclassifications");
    if (out.seconds >= 5.0) fail(out, "runtime exceeded 5 s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "6000 witnesses classified, %.2f s", out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 3. The p-norm contraction identity across shapes and p.
Outcome criterion3() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(3141);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Shape s(1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 3),
                      1 + static_cast<int>(rng() % 5));
        const DenseTensor t = random_tensor(rng, s);
        for (int p = 1; p <= 4; ++p) {
            const double lhs = std::pow(p_norm(t, p), p);
            const double rel =
                contraction_norm_identity_check(t, p) / std::max(lhs, 1e-300);
            worst = std::max(worst, rel);
        }
    }
    out.seconds = elapsed(start);
    if (worst >= 1e-10) fail(out, "relative discrepancy " + std::to_string(worst));
    if (out.seconds >= 5.0) fail(out, "runtime exceeded 5 s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst relative discrepancy %.2e, %.2f s", worst,
                  out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 4. Frobenius inner products of simple tensors factor across modes.
Outcome criterion4() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(2718);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec u = random_vec(rng, 2), v = random_vec(rng, 3), w = random_vec(rng, 4);
        const Vec u2 = random_vec(rng, 2), v2 = random_vec(rng, 3), w2 = random_vec(rng, 4);
        const double lhs = frobenius_inner(rank_one(u, v, w), rank_one(u2, v2, w2));
        const double rhs = u.dot(u2) * v.dot(v2) * w.dot(w2);
        const double scale = u.norm() * v.norm() * w.norm() * u2.norm() * v2.norm() *
                             w2.norm();
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
    out.seconds = elapsed(start);
    if (worst >= 1e-12) fail(out, "relative error " + std::to_string(worst));
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst relative error %.2e", worst);
    if (out.pass) out.detail = buf;
    return out;
}

// 5. Border sequence: exact error law for the standard form, upper bound for
// random tangent forms.
Outcome criterion5() {
    Outcome out;
    const auto start = Clock::now();
    TangentForm w;
    w.base = {e2(0), e2(0), e2(0)};
    w.offset = {e2(1), e2(1), e2(1)};
    for (long long n = 1; n <= 1000000; n *= 10) {
        const double nd = static_cast<double>(n);
        const double expect = std::sqrt(3.0 / (nd * nd) + 1.0 / (nd * nd * nd * nd));
        const double got =
            frobenius_norm(sub(border_sequence(w, n).dense(), w_tensor()));
        if (std::abs(got - expect) > 1e-12 * expect) {
            fail(out, "standard form error law at n=" + std::to_string(n));
        }
    }
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 100; ++trial) {
        const TangentForm f = random_tangent_form(rng);
        const auto [c1, c2] = border_bound_constants(f);
        for (long long n = 1; n <= 1000000; n *= 10) {
            const double nd = static_cast<double>(n);
            const double value = frobenius_norm(border_residual(f, n));
            if (value > c1 / nd + c2 / (nd * nd) + 1e-12) {
                fail(out, "bound violated at trial " + std::to_string(trial));
            }
        }
    }
    out.seconds = elapsed(start);
    if (out.seconds >= 10.0) fail(out, "runtime exceeded 10 s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "7 exact values + 700 bound checks, %.2f s",
                  out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 6. Strict improvement chains: monotone descent to the boundary distance
// with degenerating candidates.
Outcome criterion6() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(60606);
    int bad_limit = 0, bad_delta = 0, bad_growth = 0, bad_monotone = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const DenseTensor tau = random_three_generic(rng);
        Rank2Candidate c = best_random_candidate(tau, 10000, rng());
        const double initial_norm = c.factor_norm_max();
        double err = frobenius_norm(sub(tau, c.dense()));
        for (int k = 0; k < 50; ++k) {
            try {
                const ImprovementOutcome o = improve_candidate(tau, c);
                if (!(o.achieved > 0.0)) {
                    ++bad_monotone;
                    break;
                }
                err -= o.achieved;
                c = o.new_candidate;
            } catch (const NumericalStall&) {
                break; // no further decrease representable at double precision
            }
        }
        const BoundaryResult b = boundary_distance(tau, 16, 7000 + trial);
        if (std::abs(err - b.distance) >= 1e-3) ++bad_limit;
        const DenseTensor dc = c.dense();
        const double nrm = frobenius_norm(dc);
        if (std::abs(hyperdeterminant(dc)) >= 1e-6 * nrm * nrm * nrm * nrm)
            ++bad_delta;
        if (c.factor_norm_max() < 10.0 * initial_norm) ++bad_growth;
    }
    out.seconds = elapsed(start);
    if (bad_monotone) fail(out, std::to_string(bad_monotone) + " non-monotone chains");
    if (bad_limit) fail(out, std::to_string(bad_limit) + " limits off by > 1e-3");
    if (bad_delta) fail(out, std::to_string(bad_delta) + " candidates with |delta|/n^4 >= 1e-6");
    if (bad_growth) fail(out, std::to_string(bad_growth) + " chains with factor growth < 10x");
    if (out.seconds >= 300.0) fail(out, "runtime exceeded 5 min");
    char buf[96];
    std::snprintf(buf, sizeof buf, "200 chains converged, %.1f s", out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 7. The nearest point on the second secant variety: tangent class, never
// beaten by dense random search.
Outcome criterion7() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(70707);
    int bad_class = 0, bad_margin = 0;
    double worst_margin = 1e300;
    for (int trial = 0; trial < 50; ++trial) {
        const DenseTensor tau = random_three_generic(rng);
        const BoundaryResult b = boundary_distance(tau, 16, 8000 + trial);
        if (b.class_tag != RankClass::ThreeTangent) ++bad_class;
        const double search = best_random_error(tau, 1000000, 9000 + trial);
        const double margin = search - b.distance;
        worst_margin = std::min(worst_margin, margin);
        if (margin < -1e-4) ++bad_margin;
    }
    out.seconds = elapsed(start);
    if (bad_class) fail(out, std::to_string(bad_class) + " nearest points off the tangent class");
    if (bad_margin) fail(out, std::to_string(bad_margin) + " searches beat the distance");
    if (out.seconds >= 600.0) fail(out, "runtime exceeded 10 min");
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst search margin %.2e, %.1f s", worst_margin,
                  out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 8. Tangency recovery: per-mode agreement and round-trip residual.
Outcome criterion8() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(80808);
    int bad_angle = 0, bad_resid = 0, bad_reject = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const TangentForm f = random_tangent_form(rng);
        const DenseTensor t = f.dense();
        const double tnorm = frobenius_norm(t);
        const UniquenessReport rep = uniqueness_witness(t);
        if (rep.max_angle >= 1e-7) ++bad_angle;
        const TangentForm rec = tangency_point(t);
        if (span_residual(segre_tangent_span(rec.base), t) >= 1e-8 * tnorm)
            ++bad_resid;
    }
    for (int trial = 0; trial < 20; ++trial) {
        const DenseTensor g = random_three_generic(rng);
        try {
            (void)tangency_point(g);
            ++bad_reject;
        } catch (const NotTangentClass&) {
        }
    }
    out.seconds = elapsed(start);
    if (bad_angle) fail(out, std::to_string(bad_angle) + " recoveries above 1e-7 angle");
    if (bad_resid) fail(out, std::to_string(bad_resid) + " residuals above 1e-8");
    if (bad_reject) fail(out, std::to_string(bad_reject) + " unrejected generic inputs");
    if (out.seconds >= 30.0) fail(out, "runtime exceeded 30 s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "500 recoveries + 20 rejections, %.2f s",
                  out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 9. Projection condition at alternating-least-squares limits.
Outcome criterion9() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(90909);
    int converged = 0, bad = 0, attempts = 0;
    while (converged < 100 && attempts < 400) {
        ++attempts;
        const DenseTensor tau = random_tensor(rng, Shape(2, 2, 2));
        const auto [cand, trace] = als_rank2(tau, random_candidate(rng), 20000, 1e-13);
        if (!trace.converged) continue;
        ++converged;
        for (int mode = 1; mode <= 3; ++mode) {
            if (projection_condition_residual(tau, cand, mode) >=
                1e-6 * frobenius_norm(tau)) {
                ++bad;
            }
        }
    }
    out.seconds = elapsed(start);
    if (converged < 100) {
        fail(out, "only " + std::to_string(converged) + " runs converged");
    }
    if (bad) fail(out, std::to_string(bad) + " residuals above 1e-6");
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d converged runs in %d attempts, %.1f s",
                  converged, attempts, out.seconds);
    if (out.pass) out.detail = buf;
    return out;
}

// 10. Hyperdeterminant scaling law under the group action.
Outcome criterion10() {
    Outcome out;
    const auto start = Clock::now();
    std::mt19937_64 rng(101010);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const DenseTensor t = random_tensor(rng, Shape(2, 2, 2));
        const Matrix g1 = random_matrix(rng, 2), g2 = random_matrix(rng, 2),
                     g3 = random_matrix(rng, 2);
        const double nt = frobenius_norm(t);
        const double term_scale =
            std::pow(g1.norm() * g2.norm() * g3.norm() * nt, 2.0) * nt * nt + 1.0;
        worst = std::max(worst, delta_scaling_check(t, g1, g2, g3) / term_scale);
    }
    out.seconds = elapsed(start);
    if (worst >= 1e-8) fail(out, "relative error " + std::to_string(worst));
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst relative error %.2e", worst);
    if (out.pass) out.detail = buf;
    return out;
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*run)();
    };
    const Entry entries[] = {
        {"hyperdeterminant exact values", criterion1},
        {"classification soundness (1000 per class)", criterion2},
        {"p-norm contraction identity", criterion3},
        {"Frobenius rank-one factorization", criterion4},
        {"border sequence error law and bound", criterion5},
        {"strict improvement chains reach the boundary distance", criterion6},
        {"nearest boundary point beats dense random search", criterion7},
        {"tangency recovery and uniqueness", criterion8},
        {"projection condition at ALS limits", criterion9},
        {"hyperdeterminant group scaling law", criterion10},
    };
    int failures = 0;
    int index = 0;
    for (const Entry& e : entries) {
        ++index;
        const Outcome out = e.run();
        std::printf("[%s] %2d. %s (%s)\n", out.pass ? "PASS" : "FAIL", index, e.name,
                    out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    std::printf("ACCEPTANCE: %d/10 criteria passed\n", 10 - failures);
    return failures;
}
