#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

namespace hvlab {

using cplx = std::complex<double>;

// Dense complex square matrix, row-major. Dimensions stay tiny here
// (d <= 4 in practice), so everything is written for clarity.
class Matrix {
  public:
    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n) {}
    Matrix(int n, std::initializer_list<cplx> entries);

    static Matrix identity(int n);
    static Matrix zero(int n) { return Matrix(n); }
    // |v><v| for a (not necessarily normalized) column vector
    static Matrix outer(const std::vector<cplx>& v);

    int dim() const { return n_; }
    cplx& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * n_ + c]; }
    const cplx& operator()(int r, int c) const {
        return a_[static_cast<std::size_t>(r) * n_ + c];
    }

    Matrix adjoint() const;
    cplx trace() const;
    bool is_hermitian(double tol = 1e-12) const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(cplx s);

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(cplx s, Matrix a) { return a *= s; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);

    std::vector<cplx> apply(const std::vector<cplx>& v) const;

  private:
    int n_ = 0;
    std::vector<cplx> a_;
};

// Kronecker product in the fixed row-major basis order.
Matrix kron(const Matrix& a, const Matrix& b);

struct EigenPair {
    double value;
    std::vector<cplx> vector; // unit norm, largest component made real positive
};

// Eigen-decomposition of a Hermitian matrix via cyclic Jacobi sweeps
// (closed form for 2x2). Eigenvalues sorted descending, eigenvectors
// orthonormal. Throws std::invalid_argument when M is not Hermitian.
std::vector<EigenPair> eigen_hermitian(const Matrix& m, double herm_tol = 1e-12);

} // namespace hvlab
