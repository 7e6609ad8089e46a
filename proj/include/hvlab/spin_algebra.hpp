#pragma once

#include "hvlab/matrix.hpp"

#include <vector>

namespace hvlab::spin {

// Unit vector in 3-space: the orientation of a spin meter. Stored Cartesian,
// constructible from polar angles. Construction rejects inputs that are not
// unit to within 1e-6 and renormalizes the rest, so the held components
// satisfy x^2+y^2+z^2 = 1 to ~1e-15.
class Direction {
  public:
    Direction(double x, double y, double z);

    // (sin t cos p, sin t sin p, cos t); phi = 0 puts the vector in the
    // xz-plane used by the coplanar meter arrangements.
    static Direction polar(double theta, double phi = 0.0);
    // scales an arbitrary nonzero triple to unit length
    static Direction normalized(double x, double y, double z);

    static Direction x_axis() { return {1.0, 0.0, 0.0}; }
    static Direction y_axis() { return {0.0, 1.0, 0.0}; }
    static Direction z_axis() { return {0.0, 0.0, 1.0}; }

    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    double dot(const Direction& o) const { return x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }
    double angle_to(const Direction& o) const;

  private:
    double x_, y_, z_;
};

// Single spin-1/2 amplitude pair over the sigma_z basis {|+>, |->}.
// |+> = (1,0), |-> = (0,1): real positive first nonzero component.
struct Spinor2 {
    cplx up{};
    cplx down{};

    static Spinor2 plus() { return {1.0, 0.0}; }
    static Spinor2 minus() { return {0.0, 1.0}; }
    double norm_sq() const;
};

// Normalized complex 4-vector over the ordered product basis
// |++>, |+->, |-+>, |-->.
class TwoSpinState {
  public:
    explicit TwoSpinState(std::vector<cplx> amplitudes); // throws unless norm = 1 within 1e-12
    static TwoSpinState normalized(std::vector<cplx> amplitudes);
    // |s1>|s2> for s = +1/-1 labels
    static TwoSpinState product(int s1, int s2);

    const std::vector<cplx>& amplitudes() const { return amp_; }
    cplx amplitude(int i) const { return amp_[static_cast<std::size_t>(i)]; }
    double norm_sq() const;

  private:
    std::vector<cplx> amp_;
};

// d x d Hermitian matrix with nonnegative spectrum. The trace is recorded,
// not forced to 1: both normalized densities and the identity candidate
// rho = 1 (trace d) are representable.
class DensityMatrix {
  public:
    explicit DensityMatrix(Matrix m); // validates hermiticity and spectrum
    static DensityMatrix identity(int d);
    static DensityMatrix pure(const std::vector<cplx>& state); // |psi><psi| / <psi|psi>

    const Matrix& matrix() const { return m_; }
    int dim() const { return m_.dim(); }
    double trace() const { return m_.trace().real(); }

    friend DensityMatrix operator*(double s, DensityMatrix rho) {
        rho.m_ *= s;
        return rho;
    }

  private:
    Matrix m_;
};

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();

// n . sigma: Hermitian, traceless, squares to the identity.
Matrix spin_along(const Direction& n);

// projector onto the +1/-1 eigenspace of n . sigma
Matrix spin_projector(const Direction& n, int outcome);

// (|+-> - |-+>)/sqrt(2)
TwoSpinState singlet();

// Kronecker product of two 2x2 observables in the fixed basis order.
Matrix tensor(const Matrix& a, const Matrix& b);

// <psi|M|psi> / <psi|psi> for Hermitian M. The imaginary residue is checked
// against 1e-10 and discarded.
double expectation(const Spinor2& psi, const Matrix& m);
double expectation(const TwoSpinState& psi, const Matrix& m);
double expectation(const std::vector<cplx>& psi, const Matrix& m);

// <bra|M|ket>, unnormalized complex matrix element
cplx matrix_element(const Spinor2& bra, const Matrix& m, const Spinor2& ket);

std::vector<EigenPair> eigen(const Matrix& m);

// Tr(rho R); R must be Hermitian and of matching dimension.
double trace_expectation(const DensityMatrix& rho, const Matrix& r);

// <R^2> - <R>^2 under the matching expectation rule
double dispersion(const std::vector<cplx>& psi, const Matrix& r);
double dispersion(const TwoSpinState& psi, const Matrix& r);
double dispersion(const Spinor2& psi, const Matrix& r);
double dispersion(const DensityMatrix& rho, const Matrix& r);

} // namespace hvlab::spin
