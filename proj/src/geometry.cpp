#include "tenrank/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace tenrank {

namespace {

constexpr double kPencilTol = 1e-12;

Vec unit_sign_normalized(Vec v) {
    const double n = v.norm();
    if (n == 0.0) return v;
    v /= n;
    int top = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[top])) top = i;
    }
    if (v[top] < 0.0) v = -v;
    return v;
}

/// Matrix whose columns are the vectorized spanning tensors of the tangent
/// space at base1 (x) base2 (x) base3.
Matrix tangent_span_matrix(const std::array<Vec, 3>& base) {
    const int n1 = static_cast<int>(base[0].size());
    const int n2 = static_cast<int>(base[1].size());
    const int n3 = static_cast<int>(base[2].size());
    const long sz = static_cast<long>(n1) * n2 * n3;
    Matrix a(sz, n1 + n2 + n3);
    long col = 0;
    for (int t = 0; t < n1; ++t, ++col) {
        Vec e = Vec::Zero(n1);
        e[t] = 1.0;
        const DenseTensor s = rank_one(e, base[1], base[2]);
        for (long r = 0; r < sz; ++r) a(r, col) = s.coeffs()[r];
    }
    for (int t = 0; t < n2; ++t, ++col) {
        Vec e = Vec::Zero(n2);
        e[t] = 1.0;
        const DenseTensor s = rank_one(base[0], e, base[2]);
        for (long r = 0; r < sz; ++r) a(r, col) = s.coeffs()[r];
    }
    for (int t = 0; t < n3; ++t, ++col) {
        Vec e = Vec::Zero(n3);
        e[t] = 1.0;
        const DenseTensor s = rank_one(base[0], base[1], e);
        for (long r = 0; r < sz; ++r) a(r, col) = s.coeffs()[r];
    }
    return a;
}

struct SpanFit {
    Vec coeffs;
    double residual = 0.0;
};

SpanFit fit_in_columns(const Matrix& a, const DenseTensor& t) {
    Vec rhs(a.rows());
    for (long i = 0; i < rhs.size(); ++i) rhs[i] = t.coeffs()[i];
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SpanFit fit;
    fit.coeffs = svd.solve(rhs);
    fit.residual = (a * fit.coeffs - rhs).norm();
    return fit;
}

int column_rank(const Matrix& a, double tol_rel) {
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vec sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv[i] > tol_rel * sv[0]) ++r;
    }
    return r;
}

/// Double root direction (x, y) of qa*x^2 + qb*x*y + qc*y^2, taken at the
/// quadratic vertex of whichever end coefficient is larger.
Vec pencil_double_root(const PencilQuadratic& q, double scale) {
    const double mag = std::max({std::abs(q.qa), std::abs(q.qb), std::abs(q.qc)});
    if (mag <= kPencilTol * scale) {
        throw DegeneratePencil("slice pencil determinant is identically zero");
    }
    Vec root(2);
    if (std::abs(q.qa) >= std::abs(q.qc)) {
        root[0] = -q.qb;
        root[1] = 2.0 * q.qa;
    } else {
        root[0] = 2.0 * q.qc;
        root[1] = -q.qb;
    }
    return unit_sign_normalized(root);
}

Vec tf_residual(const TangentForm& f, const DenseTensor& t) {
    const DenseTensor d = f.dense();
    Vec r(static_cast<long>(d.shape().size()));
    for (long i = 0; i < r.size(); ++i) r[i] = d.coeffs()[i] - t.coeffs()[i];
    return r;
}

Matrix tf_jacobian(const TangentForm& f) {
    Matrix jac = Matrix::Zero(8, 12);
    const auto& b = f.base;
    const auto& o = f.offset;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const long row = (i * 2 + j) * 2 + k;
                jac(row, 0 + i) += o[1][j] * b[2][k] + b[1][j] * o[2][k];
                jac(row, 2 + j) += o[0][i] * b[2][k] + b[0][i] * o[2][k];
                jac(row, 4 + k) += o[0][i] * b[1][j] + b[0][i] * o[1][j];
                jac(row, 6 + i) += b[1][j] * b[2][k];
                jac(row, 8 + j) += b[0][i] * b[2][k];
                jac(row, 10 + k) += b[0][i] * b[1][j];
            }
    return jac;
}

TangentForm tf_apply_step(const TangentForm& f, const Vec& delta, double s) {
    TangentForm t = f;
    for (int m = 0; m < 3; ++m) {
        t.base[m] += s * delta.segment(2 * m, 2);
        t.offset[m] += s * delta.segment(6 + 2 * m, 2);
    }
    return t;
}

/// Base directions refined through the full tangent-form fit: offsets from
/// the linear solve, then the twelve-parameter descent, then the base read
/// back off the polished form.
std::array<Vec, 3> polish_base(const DenseTensor& t, std::array<Vec, 3> base) {
    TangentForm f = tangent_fit_offsets(t, base);
    tangent_form_polish(f, t, 80);
    for (int m = 0; m < 3; ++m) base[m] = unit_sign_normalized(f.base[m]);
    return base;
}

/// Least-squares offsets for t against the tangent span at base, with the
/// base-parallel component split evenly across the three modes.
std::array<Vec, 3> recover_offsets(const DenseTensor& t,
                                   const std::array<Vec, 3>& base) {
    const Matrix a = tangent_span_matrix(base);
    const SpanFit fit = fit_in_columns(a, t);
    const int n1 = static_cast<int>(base[0].size());
    const int n2 = static_cast<int>(base[1].size());
    std::array<Vec, 3> offset;
    offset[0] = fit.coeffs.segment(0, n1);
    offset[1] = fit.coeffs.segment(n1, n2);
    offset[2] = fit.coeffs.segment(n1 + n2, base[2].size());

    double total = 0.0;
    std::array<double, 3> along{};
    for (int m = 0; m < 3; ++m) {
        along[m] = offset[m].dot(base[m]) / base[m].squaredNorm();
        total += along[m];
    }
    for (int m = 0; m < 3; ++m) {
        offset[m] += (total / 3.0 - along[m]) * base[m];
    }
    return offset;
}

} // namespace

Shape TangentForm::shape() const {
    return Shape(static_cast<int>(base[0].size()), static_cast<int>(base[1].size()),
                 static_cast<int>(base[2].size()));
}

DenseTensor TangentForm::dense() const { return tangent_form_dense(*this); }

DenseTensor tangent_form_dense(const TangentForm& f) {
    for (int m = 0; m < 3; ++m) {
        if (f.base[m].size() != f.offset[m].size()) {
            throw DimensionMismatch("tangent form base/offset lengths differ");
        }
    }
    DenseTensor t = rank_one(f.offset[0], f.base[1], f.base[2]);
    t = add(t, rank_one(f.base[0], f.offset[1], f.base[2]));
    t = add(t, rank_one(f.base[0], f.base[1], f.offset[2]));
    return t;
}

double span_residual(const SpanSet& s, const DenseTensor& t) {
    if (s.spanning.empty()) return frobenius_norm(t);
    const long sz = static_cast<long>(t.shape().size());
    Matrix a(sz, static_cast<long>(s.spanning.size()));
    for (std::size_t c = 0; c < s.spanning.size(); ++c) {
        if (!(s.spanning[c].shape() == t.shape())) {
            throw DimensionMismatch("span_residual: shapes differ");
        }
        for (long r = 0; r < sz; ++r) a(r, c) = s.spanning[c].coeffs()[r];
    }
    return fit_in_columns(a, t).residual;
}

SpanSet segre_tangent_span(const std::array<Vec, 3>& point, double tol_rel) {
    for (const Vec& v : point) {
        if (v.norm() == 0.0) {
            throw Error("segre_tangent_span: zero factor");
        }
    }
    SpanSet s;
    s.tol_used = tol_rel;
    const int dims[3] = {static_cast<int>(point[0].size()),
                         static_cast<int>(point[1].size()),
                         static_cast<int>(point[2].size())};
    for (int m = 0; m < 3; ++m) {
        for (int t = 0; t < dims[m]; ++t) {
            Vec e = Vec::Zero(dims[m]);
            e[t] = 1.0;
            std::array<Vec, 3> fac = point;
            fac[m] = e;
            s.spanning.push_back(rank_one(fac[0], fac[1], fac[2]));
        }
    }
    const long sz = static_cast<long>(s.spanning[0].shape().size());
    Matrix a(sz, static_cast<long>(s.spanning.size()));
    for (std::size_t c = 0; c < s.spanning.size(); ++c) {
        for (long r = 0; r < sz; ++r) a(r, c) = s.spanning[c].coeffs()[r];
    }
    s.dimension = column_rank(a, tol_rel);
    return s;
}

SpanSet secant_tangent_span(const Rank2Candidate& c, double tol_rel) {
    for (const auto& triple : {c.first, c.second}) {
        for (const Vec& v : triple) {
            if (v.norm() == 0.0) {
                throw Error("secant_tangent_span: zero factor in a term");
            }
        }
    }
    SpanSet s1 = segre_tangent_span(c.first, tol_rel);
    const SpanSet s2 = segre_tangent_span(c.second, tol_rel);
    SpanSet s;
    s.tol_used = tol_rel;
    s.spanning = std::move(s1.spanning);
    s.spanning.insert(s.spanning.end(), s2.spanning.begin(), s2.spanning.end());
    const long sz = static_cast<long>(s.spanning[0].shape().size());
    Matrix a(sz, static_cast<long>(s.spanning.size()));
    for (std::size_t c2 = 0; c2 < s.spanning.size(); ++c2) {
        for (long r = 0; r < sz; ++r) a(r, c2) = s.spanning[c2].coeffs()[r];
    }
    s.dimension = column_rank(a, tol_rel);
    return s;
}

Rank2Candidate border_sequence(const TangentForm& f, long long n) {
    if (n < 1) {
        throw Error("border_sequence: n must be >= 1");
    }
    const double nd = static_cast<double>(n);
    const double w = std::cbrt(nd);
    Rank2Candidate c;
    for (int m = 0; m < 3; ++m) {
        c.first[m] = w * (f.base[m] + f.offset[m] / nd);
        c.second[m] = w * f.base[m];
    }
    c.second[0] = -c.second[0];
    return c;
}

DenseTensor border_residual(const TangentForm& f, long long n) {
    const double nd = static_cast<double>(n);
    DenseTensor s = rank_one(f.offset[0], f.offset[1], f.base[2]);
    s = add(s, rank_one(f.offset[0], f.base[1], f.offset[2]));
    s = add(s, rank_one(f.base[0], f.offset[1], f.offset[2]));
    const DenseTensor t = rank_one(f.offset[0], f.offset[1], f.offset[2]);
    return add(scale(s, 1.0 / nd), scale(t, 1.0 / (nd * nd)));
}

std::pair<double, double> border_bound_constants(const TangentForm& f) {
    DenseTensor s = rank_one(f.offset[0], f.offset[1], f.base[2]);
    s = add(s, rank_one(f.offset[0], f.base[1], f.offset[2]));
    s = add(s, rank_one(f.base[0], f.offset[1], f.offset[2]));
    const DenseTensor t = rank_one(f.offset[0], f.offset[1], f.offset[2]);
    return {frobenius_norm(s), frobenius_norm(t)};
}

TangentForm tangent_fit_offsets(const DenseTensor& t,
                                const std::array<Vec, 3>& base) {
    TangentForm f;
    f.base = base;
    f.offset = recover_offsets(t, base);
    return f;
}

double tangent_form_polish(TangentForm& f, const DenseTensor& t, int max_iter) {
    if (!(t.shape() == Shape(2, 2, 2))) {
        throw DimensionMismatch("tangent_form_polish: tensor must be 2x2x2");
    }
    Vec r = tf_residual(f, t);
    double fval = r.squaredNorm();
    double lambda = 1e-4;
    for (int iter = 0; iter < max_iter; ++iter) {
        const Matrix jac = tf_jacobian(f);
        const Matrix jtj = jac.transpose() * jac;
        const Vec g = jac.transpose() * r;
        if (g.norm() < 1e-16 * (1.0 + fval)) break;
        bool accepted = false;
        for (int attempt = 0; attempt < 25; ++attempt) {
            Matrix h = jtj;
            for (int d = 0; d < 12; ++d) {
                h(d, d) += lambda * (jtj(d, d) + 1e-12);
            }
            const Vec delta = h.ldlt().solve(-g);
            const TangentForm trial = tf_apply_step(f, delta, 1.0);
            const Vec rt = tf_residual(trial, t);
            const double ft = rt.squaredNorm();
            if (ft < fval) {
                const double drop = fval - ft;
                f = trial;
                r = rt;
                fval = ft;
                lambda = std::max(lambda / 3.0, 1e-14);
                accepted = true;
                if (drop < 1e-18 + 1e-15 * fval) iter = max_iter;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) break;
    }
    return std::sqrt(fval);
}

TangentForm tangency_point(const DenseTensor& t) {
    const RankReport rep = classify_rank(t);
    if (rep.class_tag != RankClass::ThreeTangent) {
        throw NotTangentClass("tangency_point: input classifies as " +
                              to_string(rep.class_tag));
    }
    const double norm2 = frobenius_norm(t);
    std::array<Vec, 3> base;
    for (int mode = 1; mode <= 3; ++mode) {
        const PencilQuadratic q = pencil_quadratic(t, mode);
        const Vec root = pencil_double_root(q, norm2 * norm2);
        // The double-root covector annihilates the base factor of its mode.
        Vec kernel(2);
        kernel[0] = -root[1];
        kernel[1] = root[0];
        base[mode - 1] = unit_sign_normalized(kernel);
    }
    base = polish_base(t, base);
    TangentForm f;
    f.base = base;
    f.offset = recover_offsets(t, base);
    return f;
}

UniquenessReport uniqueness_witness(const DenseTensor& t) {
    const RankReport rep = classify_rank(t);
    if (rep.class_tag != RankClass::ThreeTangent) {
        throw NotTangentClass("uniqueness_witness: input classifies as " +
                              to_string(rep.class_tag));
    }
    const double norm2 = frobenius_norm(t);
    UniquenessReport out;
    for (int mode = 1; mode <= 3; ++mode) {
        const PencilQuadratic q = pencil_quadratic(t, mode);
        const Vec root = pencil_double_root(q, norm2 * norm2);
        Vec kernel(2);
        kernel[0] = -root[1];
        kernel[1] = root[0];

        // The contraction at the double root is rank one; its singular pair
        // carries the base factors of the other two modes.
        const Matrix m = mode_contract(t, mode, Covector(root));
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        std::array<Vec, 3> triple;
        const int a = mode == 1 ? 1 : 0;
        const int b = mode == 3 ? 1 : 2;
        triple[mode - 1] = unit_sign_normalized(kernel);
        triple[a] = unit_sign_normalized(svd.matrixU().col(0));
        triple[b] = unit_sign_normalized(svd.matrixV().col(0));
        out.per_mode_base[mode - 1] = polish_base(t, triple);
    }
    // Chord-based angle: acos of a rounded cosine cannot resolve angles
    // below ~1.5e-8, far coarser than the recoveries themselves.
    auto angle = [](const std::array<Vec, 3>& x, const std::array<Vec, 3>& y) {
        DenseTensor tx = rank_one(x[0], x[1], x[2]);
        DenseTensor ty = rank_one(y[0], y[1], y[2]);
        tx = scale(tx, 1.0 / frobenius_norm(tx));
        ty = scale(ty, 1.0 / frobenius_norm(ty));
        const double chord = std::min(frobenius_norm(sub(tx, ty)),
                                      frobenius_norm(add(tx, ty)));
        return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    };
    out.pairwise_angle[0] = angle(out.per_mode_base[0], out.per_mode_base[1]);
    out.pairwise_angle[1] = angle(out.per_mode_base[0], out.per_mode_base[2]);
    out.pairwise_angle[2] = angle(out.per_mode_base[1], out.per_mode_base[2]);
    out.max_angle = std::max({out.pairwise_angle[0], out.pairwise_angle[1],
                              out.pairwise_angle[2]});
    return out;
}

} // namespace tenrank
