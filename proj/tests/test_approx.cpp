#include "doctest.h"
#include "test_util.hpp"

using namespace tenrank;
using namespace tr_test;

namespace {

Rank2Candidate shared_third_candidate() {
    Rank2Candidate c;
    c.first = {e2(0), e2(0), e2(0)};
    c.second = {e2(1), e2(1), e2(0)};
    return c;
}

} // namespace

TEST_SUITE_BEGIN("approx");

TEST_CASE("coordinate fill strictly improves low-rank candidates") {
    const DenseTensor zero(Shape(2, 2, 2));
    const DenseTensor filled = strict_improve_lowrank(w_tensor(), zero, 2);
    CHECK(frobenius_norm(sub(w_tensor(), filled)) ==
          doctest::Approx(std::sqrt(2.0)));

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const DenseTensor tau = random_tensor(rng, Shape(2, 2, 2));
        const DenseTensor ups =
            rank_one(random_vec(rng, 2), random_vec(rng, 2), random_vec(rng, 2));
        const DenseTensor better = strict_improve_lowrank(tau, ups, 2);
        CHECK(frobenius_norm(sub(tau, better)) < frobenius_norm(sub(tau, ups)));
        CHECK(multilinear_rank(better).max() <= 2);
    }

    CHECK_THROWS_AS(strict_improve_lowrank(w_tensor(), w_tensor(), 2), Error);
    const DenseTensor same = rank_one(e2(0), e2(0), e2(0));
    CHECK_THROWS_AS(strict_improve_lowrank(same, same, 2), Error);
}

TEST_CASE("deficient normal form") {
    SUBCASE("already normalized") {
        const DeficientCandidate d = normalize_deficient(shared_third_candidate());
        CHECK(d.a == doctest::Approx(1.0));
        CHECK(d.b == doctest::Approx(0.0));
        CHECK(d.c == doctest::Approx(0.0));
        CHECK(d.d == doctest::Approx(1.0));
        CHECK(d.x3_1.isApprox(e2(0)));
        CHECK(std::abs(d.x3_2.dot(e2(1))) == doctest::Approx(1.0));
        CHECK(frobenius_norm(sub(d.dense_original(),
                                 shared_third_candidate().dense())) < 1e-12);
    }

    SUBCASE("shared factor in the first mode gets permuted") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            const Vec shared = random_unit(rng, 2);
            Rank2Candidate c;
            c.first = {shared, random_vec(rng, 2), random_vec(rng, 2)};
            c.second = {Vec(2.0 * shared), random_vec(rng, 2), random_vec(rng, 2)};
            while (sin2(c.first[1], c.second[1]) < 0.05 ||
                   sin2(c.first[2], c.second[2]) < 0.05) {
                c.second[1] = random_vec(rng, 2);
                c.second[2] = random_vec(rng, 2);
            }
            const DeficientCandidate d = normalize_deficient(c);
            CHECK(d.mode_perm[2] == 0);
            const double scale = frobenius_norm(c.dense());
            CHECK(frobenius_norm(sub(d.dense_original(), c.dense())) <
                  1e-12 * (scale + 1.0));
            CHECK(std::abs(d.x3_1.dot(d.x3_2)) < 1e-14);
            CHECK(d.x3_2.norm() == doctest::Approx(1.0));
        }
    }

    SUBCASE("generic candidates are rejected") {
        std::mt19937_64 rng(11);
        Rank2Candidate c = random_candidate(rng);
        while (sin2(c.first[0], c.second[0]) < 0.1 ||
               sin2(c.first[1], c.second[1]) < 0.1 ||
               sin2(c.first[2], c.second[2]) < 0.1) {
            c = random_candidate(rng);
        }
        CHECK_THROWS_AS(normalize_deficient(c), NotDeficient);
    }

    SUBCASE("rank-one candidates are flagged for the fill path") {
        Rank2Candidate c;
        c.first = {e2(0), e2(0), e2(0)};
        c.second = {e2(1), Vec(3.0 * e2(0)), e2(0)};
        // shared in modes 2 and 3: after permuting one shared mode to the
        // back, the second-mode factors are still dependent
        CHECK_THROWS_AS(normalize_deficient(c), DegenerateSecondMode);
    }
}

TEST_CASE("target expansion in the candidate frame") {
    const DeficientCandidate d = normalize_deficient(shared_third_candidate());

    SUBCASE("the candidate itself has no orthogonal component") {
        const TargetExpansion te = target_expansion(d.dense_original(), d);
        CHECK(std::abs(te.r) < 1e-14);
        CHECK(std::abs(te.s) < 1e-14);
        CHECK(std::abs(te.p) < 1e-14);
        CHECK(std::abs(te.q) < 1e-14);
        CHECK(te.fill_mismatch < 1e-14);
    }

    SUBCASE("a pure x3_2 term lands in r") {
        const DenseTensor tau =
            add(d.dense_original(), rank_one(e2(0), d.x2_1, d.x3_2));
        const TargetExpansion te = target_expansion(tau, d);
        CHECK(te.r == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(te.s) < 1e-12);
        CHECK(std::abs(te.p) < 1e-12);
        CHECK(std::abs(te.q) < 1e-12);
    }

    SUBCASE("random targets are reconstructed") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 100; ++trial) {
            const DenseTensor tau = random_tensor(rng, Shape(2, 2, 2));
            const TargetExpansion te = target_expansion(tau, d);
            // rebuild tau from its own expansion coefficients
            DenseTensor rebuilt(Shape(2, 2, 2));
            rebuilt = add(rank_one(e2(0), Vec(te.a_tau * d.x2_1 + te.b_tau * d.x2_2), d.x3_1),
                          rank_one(e2(0), Vec(te.r * d.x2_1 + te.s * d.x2_2), d.x3_2));
            rebuilt = add(rebuilt,
                          rank_one(e2(1), Vec(te.c_tau * d.x2_1 + te.d_tau * d.x2_2), d.x3_1));
            rebuilt = add(rebuilt,
                          rank_one(e2(1), Vec(te.p * d.x2_1 + te.q * d.x2_2), d.x3_2));
            const DenseTensor tau_p = permute_modes(tau, d.mode_perm);
            CHECK(frobenius_norm(sub(rebuilt, tau_p)) <
                  1e-10 * frobenius_norm(tau));
        }
    }
}

TEST_CASE("orthogonality residuals") {
    const DeficientCandidate base = normalize_deficient(shared_third_candidate());

    SUBCASE("zero when the target has no orthogonal part") {
        TargetExpansion te;
        const std::array<double, 3> r = orthogonality_residuals(te, base);
        CHECK(r[0] == 0.0);
        CHECK(r[1] == 0.0);
        CHECK(r[2] == 0.0);
    }

    SUBCASE("coordinate example") {
        TargetExpansion te;
        te.r = 0.0;
        te.s = 1.0;
        te.p = 1.0;
        te.q = 0.0;
        const std::array<double, 3> r = orthogonality_residuals(te, base);
        CHECK(r[0] == doctest::Approx(1.0));
        CHECK(r[1] == doctest::Approx(1.0));
        CHECK(r[2] == doctest::Approx(0.0));
    }

    SUBCASE("negative hyperdeterminant forces a violated equality") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 100; ++trial) {
            const DenseTensor tau = random_three_generic(rng);
            const TargetExpansion te = target_expansion(tau, base);
            const std::array<double, 3> r = orthogonality_residuals(te, base);
            const double worst =
                std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
            CHECK(worst > 1e-12 * frobenius_norm(tau));
        }
    }
}

TEST_CASE("projection condition residual") {
    std::mt19937_64 rng(19);

    SUBCASE("vanishes when the candidate equals the target") {
        for (int trial = 0; trial < 20; ++trial) {
            Rank2Candidate c = random_candidate(rng);
            const DenseTensor tau = c.dense();
            for (int mode = 1; mode <= 3; ++mode) {
                CHECK(projection_condition_residual(tau, c, mode) <
                      1e-12 * (frobenius_norm(tau) + 1.0));
            }
        }
    }

    SUBCASE("positive for random pairs") {
        for (int trial = 0; trial < 20; ++trial) {
            const DenseTensor tau = random_tensor(rng, Shape(2, 2, 2));
            const Rank2Candidate c = random_candidate(rng);
            double worst = 0.0;
            for (int mode = 1; mode <= 3; ++mode) {
                worst = std::max(worst, projection_condition_residual(tau, c, mode));
            }
            CHECK(worst > 0.0);
        }
    }

    SUBCASE("small at alternating-least-squares limits") {
        int converged = 0;
        for (int trial = 0; trial < 12; ++trial) {
            const DenseTensor tau = random_tensor(rng, Shape(2, 2, 2));
            const auto [cand, trace] = als_rank2(tau, random_candidate(rng), 20000, 1e-13);
            if (!trace.converged) continue;
            ++converged;
            for (int mode = 1; mode <= 3; ++mode) {
                CHECK(projection_condition_residual(tau, cand, mode) <
                      1e-6 * frobenius_norm(tau));
            }
        }
        CHECK(converged >= 5);
    }
}

TEST_CASE("improvement strictly decreases the error") {
    SUBCASE("deficient candidate on the rotation example") {
        const ImprovementOutcome o =
            improve_candidate(rot_tensor(), shared_third_candidate());
        CHECK(o.achieved > 0.0);
        CHECK((o.case_taken == ImproveCase::Eps1 || o.case_taken == ImproveCase::Eps2 ||
               o.case_taken == ImproveCase::Eps3));
        const double old_err =
            frobenius_norm(sub(rot_tensor(), shared_third_candidate().dense()));
        const double new_err =
            frobenius_norm(sub(rot_tensor(), o.new_candidate.dense()));
        CHECK(new_err < old_err);
    }

    SUBCASE("rejects targets that are not rank three generic") {
        CHECK_THROWS_AS(improve_candidate(w_tensor(), shared_third_candidate()), Error);
        DenseTensor super(Shape(2, 2, 2));
        super(0, 0, 0) = 1.0;
        super(1, 1, 1) = 1.0;
        CHECK_THROWS_AS(improve_candidate(super, shared_third_candidate()), Error);
    }

    SUBCASE("zero candidate goes through the low-rank fill") {
        Rank2Candidate zero;
        for (int m = 0; m < 3; ++m) {
            zero.first[m] = Vec::Zero(2);
            zero.second[m] = Vec::Zero(2);
        }
        const ImprovementOutcome o = improve_candidate(rot_tensor(), zero);
        CHECK(o.case_taken == ImproveCase::LowRankFill);
        CHECK(o.achieved > 0.0);
    }

    SUBCASE("random targets and search candidates") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 50; ++trial) {
            const DenseTensor tau = random_three_generic(rng);
            const Rank2Candidate c = best_random_candidate(tau, 2000, rng());
            const ImprovementOutcome o = improve_candidate(tau, c);
            CHECK(o.achieved > 0.0);
            const double old_err = frobenius_norm(sub(tau, c.dense()));
            const double new_err =
                frobenius_norm(sub(tau, o.new_candidate.dense()));
            CHECK(new_err < old_err);
        }
    }

    SUBCASE("predicted and achieved decreases agree for exact deficient input") {
        std::mt19937_64 rng(29);
        int eps_cases = 0;
        for (int trial = 0; trial < 60; ++trial) {
            const DenseTensor tau = random_three_generic(rng);
            // deficient candidate: optimal fill for a random shared direction
            Rank2Candidate c;
            const Vec z = random_unit(rng, 2);
            const Matrix s0 = mode_contract(tau, 1, Covector::axis(2, 0));
            const Matrix s1 = mode_contract(tau, 1, Covector::axis(2, 1));
            c.first = {e2(0), Vec(s0 * z), z};
            c.second = {e2(1), Vec(s1 * z), z};
            const ImprovementOutcome o = improve_candidate(tau, c);
            CHECK(o.achieved > 0.0);
            if (o.case_taken == ImproveCase::Eps1 || o.case_taken == ImproveCase::Eps2 ||
                o.case_taken == ImproveCase::Eps3) {
                ++eps_cases;
                CHECK(o.achieved / o.predicted_decrease >= 0.5 - 1e-9);
                CHECK(o.achieved / o.predicted_decrease <= 1.5 + 1e-9);
            }
        }
        CHECK(eps_cases >= 20);
    }
}

TEST_CASE("improvement chain approaches the boundary distance") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const DenseTensor tau = random_three_generic(rng);
        Rank2Candidate c = best_random_candidate(tau, 10000, rng());
        double err = frobenius_norm(sub(tau, c.dense()));
        const double initial_norm = c.factor_norm_max();
        bool stalled = false;
        for (int k = 0; k < 50 && !stalled; ++k) {
            try {
                const ImprovementOutcome o = improve_candidate(tau, c);
                CHECK(o.achieved > 0.0);
                const double next = err - o.achieved;
                CHECK(next < err);
                err = next;
                c = o.new_candidate;
            } catch (const NumericalStall&) {
                stalled = true;
            }
        }
        const BoundaryResult b = boundary_distance(tau, 16, 4000 + trial);
        CHECK(std::abs(err - b.distance) < 1e-3);
        const DenseTensor dc = c.dense();
        const double nrm = frobenius_norm(dc);
        CHECK(std::abs(hyperdeterminant(dc)) < 1e-6 * nrm * nrm * nrm * nrm);
        CHECK(c.factor_norm_max() >= 10.0 * initial_norm);
    }
}

TEST_CASE("alternating least squares") {
    std::mt19937_64 rng(37);

    SUBCASE("recovers an exact rank-two target within 200 sweeps") {
        std::mt19937_64 seeded(4);
        const DenseTensor tau = multilinear_action(
            random_invertible2(seeded), random_invertible2(seeded),
            random_invertible2(seeded),
            DenseTensor(Shape(2, 2, 2), {1, 0, 0, 0, 0, 0, 0, 1}));
        // pick the init by a short pilot, then converge
        Rank2Candidate best_init = random_candidate(seeded);
        double best_err = std::numeric_limits<double>::infinity();
        for (int r = 0; r < 8; ++r) {
            const Rank2Candidate c = r == 0 ? best_init : random_candidate(seeded);
            const auto [cand, tr] = als_rank2(tau, c, 10, 0.0);
            if (tr.rows.back().error < best_err) {
                best_err = tr.rows.back().error;
                best_init = c;
            }
        }
        const auto [cand, trace] = als_rank2(tau, best_init, 200, 0.0);
        CHECK(trace.rows.back().error < 1e-10 * frobenius_norm(tau));
    }

    SUBCASE("recovers most rank-two targets from arbitrary starts") {
        int solved = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const DenseTensor tau = multilinear_action(
                random_invertible2(rng), random_invertible2(rng),
                random_invertible2(rng),
                DenseTensor(Shape(2, 2, 2), {1, 0, 0, 0, 0, 0, 0, 1}));
            const auto [cand, trace] = als_rank2(tau, random_candidate(rng), 4000, 1e-15);
            if (trace.rows.back().error < 1e-10 * frobenius_norm(tau)) ++solved;
        }
        CHECK(solved >= 16);
    }

    SUBCASE("error is non-increasing sweep to sweep") {
        for (int trial = 0; trial < 10; ++trial) {
            const DenseTensor tau = random_tensor(rng, Shape(2, 2, 2));
            const auto [cand, trace] = als_rank2(tau, random_candidate(rng), 300, 0.0);
            for (std::size_t i = 1; i < trace.rows.size(); ++i) {
                CHECK(trace.rows[i].error <=
                      trace.rows[i - 1].error + 1e-12 * frobenius_norm(tau));
            }
        }
    }

    SUBCASE("degenerates on the border-rank-two class") {
        std::mt19937_64 seeded(8);
        Rank2Candidate init = random_candidate(seeded);
        const double s = std::cbrt(std::sqrt(3.0) / 3.0);
        for (int m = 0; m < 3; ++m) {
            init.first[m] *= s;
            init.second[m] *= s;
        }
        const double init_norm = init.factor_norm_max();
        const auto [cand, trace] = als_rank2(w_tensor(), init, 20000, 0.0);
        CHECK(trace.rows.back().error < 0.05);
        CHECK(trace.rows.back().factor_norm_max > 10.0 * init_norm);
    }

    SUBCASE("error stays above the boundary distance") {
        const BoundaryResult b = boundary_distance(rot_tensor(), 16, 99);
        const auto [cand, trace] = als_rank2(rot_tensor(), random_candidate(rng), 3000, 0.0);
        CHECK(trace.rows.back().error >= b.distance - 1e-6);
    }

    CHECK_THROWS_AS(als_rank2(w_tensor(), random_candidate(rng), 0, 0.0), Error);
}

TEST_CASE("boundary distance") {
    SUBCASE("rotation example") {
        const BoundaryResult b = boundary_distance(rot_tensor(), 16, 41);
        CHECK(b.distance > 0.0);
        CHECK(b.class_tag == RankClass::ThreeTangent);
        const double nn = frobenius_norm(b.nearest.dense());
        CHECK(std::abs(b.delta_nearest) < 1e-8 * nn * nn * nn * nn);
        // never beaten by a random search
        const double search = best_random_error(rot_tensor(), 100000, 7);
        CHECK(search >= b.distance - 1e-4);
    }

    SUBCASE("scaling by two doubles the distance exactly") {
        const BoundaryResult one = boundary_distance(rot_tensor(), 8, 5);
        const BoundaryResult two = boundary_distance(scale(rot_tensor(), 2.0), 8, 5);
        CHECK(two.distance == doctest::Approx(2.0 * one.distance).epsilon(1e-15));
    }

    SUBCASE("rejects nonnegative hyperdeterminant input") {
        CHECK_THROWS_AS(boundary_distance(w_tensor(), 8, 1), Error);
        DenseTensor super(Shape(2, 2, 2));
        super(0, 0, 0) = 1.0;
        super(1, 1, 1) = 1.0;
        CHECK_THROWS_AS(boundary_distance(super, 8, 1), Error);
    }

    SUBCASE("nearest point to a perturbed shared-factor tensor") {
        // The published version of this example perturbs by
        // eps*(x11+x12)(x)(x21+x22)(x)x32, but every rank-one perturbation in
        // the second slice keeps det(S0 + lambda S1) real-rooted, so that
        // tensor has nonnegative hyperdeterminant and is rank two. It must be
        // rejected here.
        const DenseTensor nu = add(rank_one(e2(0), e2(0), e2(0)),
                                   rank_one(e2(1), e2(1), e2(0)));
        const double eps = 0.05;
        const DenseTensor literal =
            add(nu, scale(rank_one(vec2(1, 1), vec2(1, 1), e2(1)), eps));
        CHECK(hyperdeterminant(literal) == doctest::Approx(4.0 * eps * eps));
        CHECK(classify_rank(literal).class_tag == RankClass::RankTwoGeneric);
        CHECK_THROWS_AS(boundary_distance(literal, 8, 1), Error);

        // A rotation-type perturbation of the same magnitude is rank three,
        // and its nearest boundary point stays away from nu.
        const DenseTensor witness =
            add(nu, scale(sub(rank_one(e2(0), e2(1), e2(1)),
                              rank_one(e2(1), e2(0), e2(1))),
                          eps));
        CHECK(classify_rank(witness).class_tag == RankClass::ThreeGeneric);
        const BoundaryResult b = boundary_distance(witness, 32, 77);
        CHECK(b.class_tag == RankClass::ThreeTangent);
        CHECK(frobenius_norm(sub(b.nearest.dense(), nu)) > 1e-3);
    }
}

TEST_CASE("random search is deterministic and consistent") {
    const Rank2Candidate c = best_random_candidate(rot_tensor(), 5000, 11);
    const double err = best_random_error(rot_tensor(), 5000, 11);
    CHECK(frobenius_norm(sub(rot_tensor(), c.dense())) ==
          doctest::Approx(err).epsilon(1e-12));
    const Rank2Candidate c2 = best_random_candidate(rot_tensor(), 5000, 11);
    CHECK(frobenius_norm(sub(c.dense(), c2.dense())) == 0.0);
}

TEST_SUITE_END();
