#include "hvlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hvlab {

Matrix::Matrix(int n, std::initializer_list<cplx> entries) : Matrix(n) {
    if (static_cast<int>(entries.size()) != n * n)
        throw std::invalid_argument("matrix entry count does not match dimension");
    std::copy(entries.begin(), entries.end(), a_.begin());
}

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::outer(const std::vector<cplx>& v) {
    Matrix m(static_cast<int>(v.size()));
    for (int r = 0; r < m.n_; ++r)
        for (int c = 0; c < m.n_; ++c) m(r, c) = v[r] * std::conj(v[c]);
    return m;
}

Matrix Matrix::adjoint() const {
    Matrix m(n_);
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c) m(r, c) = std::conj((*this)(c, r));
    return m;
}

cplx Matrix::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

bool Matrix::is_hermitian(double tol) const {
    for (int r = 0; r < n_; ++r)
        for (int c = r; c < n_; ++c)
            if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol)
                return false;
    return true;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (o.n_ != n_) throw std::invalid_argument("matrix dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (o.n_ != n_) throw std::invalid_argument("matrix dimension mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

Matrix& Matrix::operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("matrix dimension mismatch");
    Matrix m(a.n_);
    for (int r = 0; r < a.n_; ++r)
        for (int k = 0; k < a.n_; ++k) {
            const cplx ark = a(r, k);
            if (ark == cplx{}) continue;
            for (int c = 0; c < a.n_; ++c) m(r, c) += ark * b(k, c);
        }
    return m;
}

std::vector<cplx> Matrix::apply(const std::vector<cplx>& v) const {
    if (static_cast<int>(v.size()) != n_)
        throw std::invalid_argument("matrix/vector dimension mismatch");
    std::vector<cplx> out(n_);
    for (int r = 0; r < n_; ++r) {
        cplx s = 0.0;
        for (int c = 0; c < n_; ++c) s += (*this)(r, c) * v[c];
        out[r] = s;
    }
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    const int na = a.dim(), nb = b.dim();
    Matrix m(na * nb);
    for (int ra = 0; ra < na; ++ra)
        for (int ca = 0; ca < na; ++ca)
            for (int rb = 0; rb < nb; ++rb)
                for (int cb = 0; cb < nb; ++cb)
                    m(ra * nb + rb, ca * nb + cb) = a(ra, ca) * b(rb, cb);
    return m;
}

namespace {

// Fix each eigenvector's global phase: largest-modulus component real >= 0.
void normalize_phase(std::vector<cplx>& v) {
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < static_cast<int>(v.size()); ++i)
        if (std::abs(v[i]) > best) { best = std::abs(v[i]); imax = i; }
    if (best <= 0.0) return;
    cplx phase = v[imax] / best;
    for (auto& x : v) x /= phase;
}

std::vector<EigenPair> eigen2_closed_form(const Matrix& m) {
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const cplx b = m(0, 1);
    const double mean = 0.5 * (a + d);
    const double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
    std::vector<EigenPair> out(2);
    out[0].value = mean + r;
    out[1].value = mean - r;
    if (r < 1e-300) { // already scalar
        out[0].vector = {1.0, 0.0};
        out[1].vector = {0.0, 1.0};
        return out;
    }
    for (int k = 0; k < 2; ++k) {
        std::vector<cplx> v(2);
        if (std::abs(b) > 1e-300) {
            v = {b, cplx(out[k].value - a)};
        } else {
            v = (k == 0) == (a >= d) ? std::vector<cplx>{1.0, 0.0}
                                     : std::vector<cplx>{0.0, 1.0};
        }
        double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
        v[0] /= n;
        v[1] /= n;
        normalize_phase(v);
        out[k].vector = v;
    }
    return out;
}

double offdiag_norm(const Matrix& m) {
    double s = 0.0;
    for (int r = 0; r < m.dim(); ++r)
        for (int c = 0; c < m.dim(); ++c)
            if (r != c) s += std::norm(m(r, c));
    return std::sqrt(s);
}

} // namespace

std::vector<EigenPair> eigen_hermitian(const Matrix& m, double herm_tol) {
    if (!m.is_hermitian(herm_tol))
        throw std::invalid_argument("eigen_hermitian: matrix is not Hermitian");
    const int n = m.dim();
    if (n == 1) return {{m(0, 0).real(), {1.0}}};
    if (n == 2) return eigen2_closed_form(m);

    Matrix a = m;
    Matrix v = Matrix::identity(n);
    double scale = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) scale = std::max(scale, std::abs(a(r, c)));
    if (scale == 0.0) scale = 1.0;

    for (int sweep = 0; sweep < 60 && offdiag_norm(a) > 1e-15 * scale; ++sweep) {
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-18 * scale) continue;
                const cplx phase = apq / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                // zeroing condition for this U is t^2 - 2*tau*t - 1 = 0;
                // take the small root for stability
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0 ? -1.0 : 1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // unitary columns: J(:,p) = (c, s*conj(phase)),
                //                  J(:,q) = (-s*phase, c) in the (p,q) plane
                for (int k = 0; k < n; ++k) { // A <- J^H A J, rows then cols
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp + s * std::conj(phase) * akq;
                    a(k, q) = -s * phase * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk + s * phase * aqk;
                    a(q, k) = -s * std::conj(phase) * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp + s * std::conj(phase) * vkq;
                    v(k, q) = -s * phase * vkp + c * vkq;
                }
            }
    }

    std::vector<EigenPair> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].value = a(i, i).real();
        out[i].vector.resize(n);
        for (int k = 0; k < n; ++k) out[i].vector[k] = v(k, i);
        normalize_phase(out[i].vector);
    }
    std::sort(out.begin(), out.end(),
              [](const EigenPair& l, const EigenPair& r) { return l.value > r.value; });
    return out;
}

} // namespace hvlab
