#include "tenrank/classify.hpp"

#include <cmath>
#include <sstream>

namespace tenrank {

namespace {

void require_2x2x2(const DenseTensor& t, const char* who) {
    if (!(t.shape() == Shape(2, 2, 2))) {
        throw DimensionMismatch(std::string(who) + ": tensor must be 2x2x2");
    }
}

double det2(const Matrix& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

} // namespace

std::string to_string(RankClass c) {
    switch (c) {
    case RankClass::Zero: return "Zero";
    case RankClass::RankOne: return "RankOne";
    case RankClass::RankTwoShared: return "RankTwoShared";
    case RankClass::RankTwoGeneric: return "RankTwoGeneric";
    case RankClass::ThreeTangent: return "ThreeTangent";
    case RankClass::ThreeGeneric: return "ThreeGeneric";
    }
    return "?";
}

double hyperdeterminant(const DenseTensor& t) {
    require_2x2x2(t, "hyperdeterminant");
    const double a000 = t(0, 0, 0), a001 = t(0, 0, 1);
    const double a010 = t(0, 1, 0), a011 = t(0, 1, 1);
    const double a100 = t(1, 0, 0), a101 = t(1, 0, 1);
    const double a110 = t(1, 1, 0), a111 = t(1, 1, 1);

    const double squares = a000 * a000 * a111 * a111 + a001 * a001 * a110 * a110 +
                           a010 * a010 * a101 * a101 + a011 * a011 * a100 * a100;
    const double pairs = a000 * a001 * a110 * a111 + a000 * a010 * a101 * a111 +
                         a000 * a011 * a100 * a111 + a001 * a010 * a101 * a110 +
                         a001 * a011 * a110 * a100 + a010 * a011 * a101 * a100;
    const double quads = a000 * a011 * a101 * a110 + a001 * a010 * a100 * a111;
    return squares - 2.0 * pairs + 4.0 * quads;
}

PencilQuadratic pencil_quadratic(const DenseTensor& t, int mode) {
    require_2x2x2(t, "pencil_quadratic");
    const Matrix s0 = mode_contract(t, mode, Covector::axis(2, 0));
    const Matrix s1 = mode_contract(t, mode, Covector::axis(2, 1));
    PencilQuadratic q;
    q.mode = mode;
    q.qa = det2(s0);
    q.qc = det2(s1);
    q.qb = det2(s0 + s1) - q.qa - q.qc;
    return q;
}

RankReport classify_decision(const MultilinearRank& ml, double delta,
                             double norm2, double tol_rel) {
    if (tol_rel <= 0.0) {
        throw Error("classify: tolerance must be positive");
    }
    RankReport rep;
    rep.delta = delta;
    rep.mlrank = ml;
    rep.delta_tol_used = tol_rel;
    rep.delta_hat = norm2 > 0.0 ? delta / (norm2 * norm2 * norm2 * norm2) : 0.0;

    if (ml.max() == 0) {
        rep.rank = 0;
        rep.border_rank = 0;
        rep.class_tag = RankClass::Zero;
        return rep;
    }
    if (ml.r1 == 1 && ml.r2 == 1 && ml.r3 == 1) {
        rep.rank = 1;
        rep.border_rank = 1;
        rep.class_tag = RankClass::RankOne;
        return rep;
    }
    if (ml.min() >= 1 && ml.max() == 2 && ml.min() == 1) {
        // Some contraction image is a line: rank two with a shared factor,
        // provided the hyperdeterminant agrees that the tensor is degenerate.
        if (std::abs(rep.delta_hat) <= tol_rel) {
            rep.rank = 2;
            rep.border_rank = 2;
            rep.class_tag = RankClass::RankTwoShared;
            return rep;
        }
        std::ostringstream msg;
        msg << "classification ambiguous: multilinear rank (" << ml.r1 << ","
            << ml.r2 << "," << ml.r3 << ") with |delta|/||t||^4 = "
            << std::abs(rep.delta_hat) << " > tol " << tol_rel;
        throw ClassificationAmbiguous(msg.str());
    }
    if (ml.r1 == 2 && ml.r2 == 2 && ml.r3 == 2) {
        if (rep.delta_hat > tol_rel) {
            rep.rank = 2;
            rep.border_rank = 2;
            rep.class_tag = RankClass::RankTwoGeneric;
        } else if (rep.delta_hat < -tol_rel) {
            rep.rank = 3;
            rep.border_rank = 3;
            rep.class_tag = RankClass::ThreeGeneric;
        } else {
            rep.rank = 3;
            rep.border_rank = 2;
            rep.class_tag = RankClass::ThreeTangent;
        }
        return rep;
    }
    std::ostringstream msg;
    msg << "classification ambiguous: multilinear rank (" << ml.r1 << ","
        << ml.r2 << "," << ml.r3 << ") matches no consistent reading at tol "
        << tol_rel;
    throw ClassificationAmbiguous(msg.str());
}

RankReport classify_rank(const DenseTensor& t, double tol_rel) {
    require_2x2x2(t, "classify_rank");
    const MultilinearRank ml = multilinear_rank(t);
    return classify_decision(ml, hyperdeterminant(t), frobenius_norm(t), tol_rel);
}

double delta_scaling_check(const DenseTensor& t, const Matrix& g1,
                           const Matrix& g2, const Matrix& g3) {
    require_2x2x2(t, "delta_scaling_check");
    const double lhs = hyperdeterminant(multilinear_action(g1, g2, g3, t));
    const double d1 = det2(g1), d2 = det2(g2), d3 = det2(g3);
    const double rhs = d1 * d1 * d2 * d2 * d3 * d3 * hyperdeterminant(t);
    return std::abs(lhs - rhs);
}

} // namespace tenrank
