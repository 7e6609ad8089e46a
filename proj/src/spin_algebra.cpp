#include "hvlab/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hvlab::spin {

namespace {

constexpr double kHermTol = 1e-12;
constexpr double kImagTol = 1e-10;

std::vector<cplx> to_vector(const Spinor2& s) { return {s.up, s.down}; }

double checked_real(cplx z, const char* what) {
    if (std::abs(z.imag()) > kImagTol)
        throw std::runtime_error(std::string(what) + ": imaginary residue exceeds 1e-10");
    return z.real();
}

} // namespace

Direction::Direction(double x, double y, double z) : x_(x), y_(y), z_(z) {
    const double n2 = x * x + y * y + z * z;
    if (std::abs(n2 - 1.0) > 1e-6)
        throw std::invalid_argument("Direction: components are not normalized");
    const double n = std::sqrt(n2);
    x_ /= n;
    y_ /= n;
    z_ /= n;
}

Direction Direction::polar(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
            std::cos(theta)};
}

Direction Direction::normalized(double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n < 1e-300)
        throw std::invalid_argument("Direction: cannot normalize the zero vector");
    return {x / n, y / n, z / n};
}

double Direction::angle_to(const Direction& o) const {
    return std::acos(std::clamp(dot(o), -1.0, 1.0));
}

double Spinor2::norm_sq() const { return std::norm(up) + std::norm(down); }

TwoSpinState::TwoSpinState(std::vector<cplx> amplitudes) : amp_(std::move(amplitudes)) {
    if (amp_.size() != 4)
        throw std::invalid_argument("TwoSpinState: expected 4 amplitudes");
    if (std::abs(norm_sq() - 1.0) > 1e-12)
        throw std::invalid_argument("TwoSpinState: amplitudes are not normalized");
}

TwoSpinState TwoSpinState::normalized(std::vector<cplx> amplitudes) {
    double n2 = 0.0;
    for (const auto& a : amplitudes) n2 += std::norm(a);
    if (n2 < 1e-300)
        throw std::invalid_argument("TwoSpinState: zero state");
    const double n = std::sqrt(n2);
    for (auto& a : amplitudes) a /= n;
    return TwoSpinState(std::move(amplitudes));
}

TwoSpinState TwoSpinState::product(int s1, int s2) {
    std::vector<cplx> amp(4, 0.0);
    const int i = (s1 > 0 ? 0 : 2) + (s2 > 0 ? 0 : 1);
    amp[static_cast<std::size_t>(i)] = 1.0;
    return TwoSpinState(std::move(amp));
}

double TwoSpinState::norm_sq() const {
    double n2 = 0.0;
    for (const auto& a : amp_) n2 += std::norm(a);
    return n2;
}

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.dim() < 1) throw std::invalid_argument("DensityMatrix: empty matrix");
    if (!m_.is_hermitian(kHermTol))
        throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
    for (const auto& ev : eigen_hermitian(m_))
        if (ev.value < -1e-10)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
}

DensityMatrix DensityMatrix::identity(int d) { return DensityMatrix(Matrix::identity(d)); }

DensityMatrix DensityMatrix::pure(const std::vector<cplx>& state) {
    double n2 = 0.0;
    for (const auto& a : state) n2 += std::norm(a);
    if (n2 < 1e-300) throw std::invalid_argument("DensityMatrix: zero state");
    Matrix m = Matrix::outer(state);
    m *= 1.0 / n2;
    return DensityMatrix(std::move(m));
}

Matrix pauli_x() { return Matrix(2, {0.0, 1.0, 1.0, 0.0}); }
Matrix pauli_y() { return Matrix(2, {0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0}); }
Matrix pauli_z() { return Matrix(2, {1.0, 0.0, 0.0, -1.0}); }

Matrix spin_along(const Direction& n) {
    // Direction guarantees unit length; keep the guard for callers that
    // bypassed it via memcpy tricks.
    const double n2 = n.x() * n.x() + n.y() * n.y() + n.z() * n.z();
    if (std::abs(n2 - 1.0) > 1e-9)
        throw std::invalid_argument("spin_along: direction is not normalized");
    return Matrix(2, {cplx(n.z()), cplx(n.x(), -n.y()), cplx(n.x(), n.y()), cplx(-n.z())});
}

Matrix spin_projector(const Direction& n, int outcome) {
    Matrix p = spin_along(n);
    if (outcome < 0) p *= -1.0;
    p += Matrix::identity(2);
    p *= 0.5;
    return p;
}

TwoSpinState singlet() {
    const double r = 1.0 / std::sqrt(2.0);
    return TwoSpinState({0.0, r, -r, 0.0});
}

Matrix tensor(const Matrix& a, const Matrix& b) {
    if (a.dim() != 2 || b.dim() != 2)
        throw std::invalid_argument("tensor: expected 2x2 factors");
    return kron(a, b);
}

double expectation(const std::vector<cplx>& psi, const Matrix& m) {
    if (static_cast<int>(psi.size()) != m.dim())
        throw std::invalid_argument("expectation: state/operator dimension mismatch");
    if (!m.is_hermitian(kHermTol))
        throw std::invalid_argument("expectation: operator is not Hermitian");
    cplx num = 0.0;
    double den = 0.0;
    const auto mpsi = m.apply(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        num += std::conj(psi[i]) * mpsi[i];
        den += std::norm(psi[i]);
    }
    if (den < 1e-300) throw std::invalid_argument("expectation: zero state");
    return checked_real(num, "expectation") / den;
}

double expectation(const Spinor2& psi, const Matrix& m) {
    return expectation(to_vector(psi), m);
}

double expectation(const TwoSpinState& psi, const Matrix& m) {
    return expectation(psi.amplitudes(), m);
}

cplx matrix_element(const Spinor2& bra, const Matrix& m, const Spinor2& ket) {
    if (m.dim() != 2)
        throw std::invalid_argument("matrix_element: expected a 2x2 operator");
    const auto mket = m.apply(to_vector(ket));
    return std::conj(bra.up) * mket[0] + std::conj(bra.down) * mket[1];
}

std::vector<EigenPair> eigen(const Matrix& m) { return eigen_hermitian(m); }

double trace_expectation(const DensityMatrix& rho, const Matrix& r) {
    if (r.dim() != rho.dim())
        throw std::invalid_argument("trace_expectation: dimension mismatch");
    if (!r.is_hermitian(kHermTol))
        throw std::invalid_argument("trace_expectation: observable is not Hermitian");
    return checked_real((rho.matrix() * r).trace(), "trace_expectation");
}

double dispersion(const std::vector<cplx>& psi, const Matrix& r) {
    const double mean = expectation(psi, r);
    return expectation(psi, r * r) - mean * mean;
}

double dispersion(const TwoSpinState& psi, const Matrix& r) {
    return dispersion(psi.amplitudes(), r);
}

double dispersion(const Spinor2& psi, const Matrix& r) {
    return dispersion(std::vector<cplx>{psi.up, psi.down}, r);
}

double dispersion(const DensityMatrix& rho, const Matrix& r) {
    const double mean = trace_expectation(rho, r);
    return trace_expectation(rho, r * r) - mean * mean;
}

} // namespace hvlab::spin
