#include "tenrank/contraction.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace tenrank {

int MultilinearRank::component(int mode) const {
    switch (mode) {
    case 1: return r1;
    case 2: return r2;
    case 3: return r3;
    default: throw DimensionMismatch("mode must be 1, 2 or 3");
    }
}

Matrix mode_contract(const DenseTensor& t, int mode, const Covector& phi) {
    const Shape& s = t.shape();
    if (phi.coords.size() != s.dim(mode)) {
        throw DimensionMismatch("mode_contract: covector length mismatch");
    }
    const Vec& c = phi.coords;
    switch (mode) {
    case 1: {
        Matrix m = Matrix::Zero(s.n2, s.n3);
        for (int i = 0; i < s.n1; ++i)
            for (int j = 0; j < s.n2; ++j)
                for (int k = 0; k < s.n3; ++k) m(j, k) += c[i] * t(i, j, k);
        return m;
    }
    case 2: {
        Matrix m = Matrix::Zero(s.n1, s.n3);
        for (int i = 0; i < s.n1; ++i)
            for (int j = 0; j < s.n2; ++j)
                for (int k = 0; k < s.n3; ++k) m(i, k) += c[j] * t(i, j, k);
        return m;
    }
    case 3: {
        Matrix m = Matrix::Zero(s.n1, s.n2);
        for (int i = 0; i < s.n1; ++i)
            for (int j = 0; j < s.n2; ++j)
                for (int k = 0; k < s.n3; ++k) m(i, j) += c[k] * t(i, j, k);
        return m;
    }
    default:
        throw DimensionMismatch("mode must be 1, 2 or 3");
    }
}

Flattening flatten(const DenseTensor& t, int mode) {
    const Shape& s = t.shape();
    Flattening f;
    f.mode = mode;
    f.shape = s;
    switch (mode) {
    case 1:
        f.matrix = Matrix::Zero(s.n1, static_cast<long>(s.n2) * s.n3);
        for (int i = 0; i < s.n1; ++i)
            for (int j = 0; j < s.n2; ++j)
                for (int k = 0; k < s.n3; ++k)
                    f.matrix(i, j * s.n3 + k) = t(i, j, k);
        break;
    case 2:
        f.matrix = Matrix::Zero(s.n2, static_cast<long>(s.n1) * s.n3);
        for (int i = 0; i < s.n1; ++i)
            for (int j = 0; j < s.n2; ++j)
                for (int k = 0; k < s.n3; ++k)
                    f.matrix(j, i * s.n3 + k) = t(i, j, k);
        break;
    case 3:
        f.matrix = Matrix::Zero(s.n3, static_cast<long>(s.n1) * s.n2);
        for (int i = 0; i < s.n1; ++i)
            for (int j = 0; j < s.n2; ++j)
                for (int k = 0; k < s.n3; ++k)
                    f.matrix(k, i * s.n2 + j) = t(i, j, k);
        break;
    default:
        throw DimensionMismatch("mode must be 1, 2 or 3");
    }
    return f;
}

DenseTensor unflatten(const Flattening& f) {
    const Shape& s = f.shape;
    DenseTensor t(s);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j)
            for (int k = 0; k < s.n3; ++k) {
                switch (f.mode) {
                case 1: t(i, j, k) = f.matrix(i, j * s.n3 + k); break;
                case 2: t(i, j, k) = f.matrix(j, i * s.n3 + k); break;
                case 3: t(i, j, k) = f.matrix(k, i * s.n2 + j); break;
                default: throw DimensionMismatch("bad flattening mode");
                }
            }
    return t;
}

Vec flattening_singular_values(const Matrix& m) {
    if (m.rows() == 2) {
        // 2-row case in closed form: the Jacobi rotation that diagonalizes
        // the 2x2 Gram matrix, applied to the rows themselves. Reading the
        // values off the rotated rows keeps a tiny second singular value
        // accurate to machine epsilon; the eigenvalue formula would floor it
        // at sqrt(eps) times the leading one.
        const double g00 = m.row(0).squaredNorm();
        const double g11 = m.row(1).squaredNorm();
        const double g01 = m.row(0).dot(m.row(1));
        double c = 1.0, s = 0.0;
        if (g01 != 0.0) {
            const double tau = (g11 - g00) / (2.0 * g01);
            const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(tau) + std::sqrt(1.0 + tau * tau));
            c = 1.0 / std::sqrt(1.0 + t * t);
            s = c * t;
        }
        const Vec r0 = c * m.row(0).transpose() - s * m.row(1).transpose();
        const Vec r1 = s * m.row(0).transpose() + c * m.row(1).transpose();
        Vec sv(2);
        sv[0] = r0.norm();
        sv[1] = r1.norm();
        if (sv[0] < sv[1]) std::swap(sv[0], sv[1]);
        return sv;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
}

MultilinearRank multilinear_rank(const DenseTensor& t, double tol_rel) {
    if (tol_rel <= 0.0) {
        throw Error("multilinear_rank: tolerance must be positive");
    }
    MultilinearRank r;
    r.tol_used = tol_rel;
    int* comps[3] = {&r.r1, &r.r2, &r.r3};
    for (int mode = 1; mode <= 3; ++mode) {
        const Vec sv = flattening_singular_values(flatten(t, mode).matrix);
        const double top = sv.size() > 0 ? sv[0] : 0.0;
        int count = 0;
        if (top > 0.0) {
            for (int i = 0; i < sv.size(); ++i) {
                if (sv[i] > tol_rel * top) ++count;
            }
        }
        *comps[mode - 1] = count;
    }
    return r;
}

Matrix image_project(const Matrix& target, const Flattening& f) {
    const long m = f.matrix.cols();
    if (target.size() != m) {
        throw DimensionMismatch("image_project: target size does not match image space");
    }
    // Vectorize the target with the same column ordering as the flattening
    // rows, then solve the least-squares coefficients on those rows.
    Vec tv(m);
    long idx = 0;
    for (long r = 0; r < target.rows(); ++r)
        for (long c = 0; c < target.cols(); ++c) tv[idx++] = target(r, c);

    const Matrix basis = f.matrix.transpose(); // columns span the image
    Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec coeff = svd.solve(tv);
    const Vec proj = basis * coeff;

    Matrix out(target.rows(), target.cols());
    idx = 0;
    for (long r = 0; r < out.rows(); ++r)
        for (long c = 0; c < out.cols(); ++c) out(r, c) = proj[idx++];
    return out;
}

double contraction_norm_identity_check(const DenseTensor& t, int p) {
    if (p < 1) {
        throw Error("contraction_norm_identity_check: p must be positive");
    }
    // Power sums on both sides; re-raising the root would round.
    double lhs = 0.0;
    for (double c : t.coeffs()) {
        lhs += std::pow(std::abs(c), static_cast<double>(p));
    }
    double worst = 0.0;
    for (int mode = 1; mode <= 3; ++mode) {
        const Flattening f = flatten(t, mode);
        double rhs = 0.0;
        for (long r = 0; r < f.matrix.rows(); ++r) {
            double row = 0.0;
            for (long c = 0; c < f.matrix.cols(); ++c) {
                row += std::pow(std::abs(f.matrix(r, c)), static_cast<double>(p));
            }
            rhs += row;
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

} // namespace tenrank
