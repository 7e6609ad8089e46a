#include "hvlab/spin_algebra.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

using namespace hvlab;
using namespace hvlab::spin;

namespace {

std::mt19937_64 gen(7);

Direction random_direction() {
    std::normal_distribution<double> dist;
    double x, y, z, n;
    do {
        x = dist(gen);
        y = dist(gen);
        z = dist(gen);
        n = std::sqrt(x * x + y * y + z * z);
    } while (n < 1e-6);
    return Direction::normalized(x, y, z);
}

std::vector<cplx> random_state(int dim) {
    std::normal_distribution<double> dist;
    std::vector<cplx> v(static_cast<std::size_t>(dim));
    double n2 = 0.0;
    for (auto& a : v) {
        a = cplx(dist(gen), dist(gen));
        n2 += std::norm(a);
    }
    for (auto& a : v) a /= std::sqrt(n2);
    return v;
}

Matrix random_hermitian(int n) {
    std::normal_distribution<double> dist;
    Matrix m(n);
    for (int r = 0; r < n; ++r) {
        m(r, r) = dist(gen);
        for (int c = r + 1; c < n; ++c) {
            m(r, c) = cplx(dist(gen), dist(gen));
            m(c, r) = std::conj(m(r, c));
        }
    }
    return m;
}

// rotation matrix from a random unit quaternion
struct Rot3 {
    std::array<std::array<double, 3>, 3> m;

    static Rot3 random() {
        std::normal_distribution<double> dist;
        double q[4];
        double n2 = 0.0;
        for (auto& c : q) {
            c = dist(gen);
            n2 += c * c;
        }
        const double n = std::sqrt(n2);
        for (auto& c : q) c /= n;
        const double w = q[0], x = q[1], y = q[2], z = q[3];
        Rot3 r;
        r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
        return r;
    }

    Direction apply(const Direction& d) const {
        return Direction::normalized(
            m[0][0] * d.x() + m[0][1] * d.y() + m[0][2] * d.z(),
            m[1][0] * d.x() + m[1][1] * d.y() + m[1][2] * d.z(),
            m[2][0] * d.x() + m[2][1] * d.y() + m[2][2] * d.z());
    }
};

// independent 4x4 matrix-vector expectation oracle, no library calls
double brute_expectation4(const std::array<std::array<cplx, 4>, 4>& m,
                          const std::array<cplx, 4>& v) {
    cplx acc = 0.0;
    for (int r = 0; r < 4; ++r) {
        cplx row = 0.0;
        for (int c = 0; c < 4; ++c) row += m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] * v[static_cast<std::size_t>(c)];
        acc += std::conj(v[static_cast<std::size_t>(r)]) * row;
    }
    return acc.real();
}

// sigma_a (x) sigma_b assembled by hand from direction components
std::array<std::array<cplx, 4>, 4> brute_tensor(const Direction& a, const Direction& b) {
    const cplx sa[2][2] = {{a.z(), cplx(a.x(), -a.y())}, {cplx(a.x(), a.y()), -a.z()}};
    const cplx sb[2][2] = {{b.z(), cplx(b.x(), -b.y())}, {cplx(b.x(), b.y()), -b.z()}};
    std::array<std::array<cplx, 4>, 4> m{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    m[static_cast<std::size_t>(2 * i + k)][static_cast<std::size_t>(2 * j + l)] =
                        sa[i][j] * sb[k][l];
    return m;
}

} // namespace

TEST_CASE("Direction construction and normalization errors") {
    CHECK_THROWS_AS(Direction(2.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Direction::normalized(0.0, 0.0, 0.0), std::invalid_argument);
    const Direction d = Direction::normalized(3.0, 4.0, 0.0);
    CHECK(d.x() == doctest::Approx(0.6).epsilon(1e-14));
    const Direction p = Direction::polar(M_PI / 3.0);
    CHECK(p.x() == doctest::Approx(std::sin(M_PI / 3)).epsilon(1e-14));
    CHECK(p.z() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p.x() * p.x() + p.y() * p.y() + p.z() * p.z() ==
          doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("spin_along: axis cases and the tilted example") {
    const Matrix sz = spin_along(Direction::z_axis());
    CHECK(std::abs(sz(0, 0) - cplx(1.0)) < 1e-15);
    CHECK(std::abs(sz(1, 1) - cplx(-1.0)) < 1e-15);

    const Matrix sx = spin_along(Direction::x_axis());
    CHECK(std::abs(sx(0, 1) - cplx(1.0)) < 1e-15);
    CHECK(std::abs(sx(1, 0) - cplx(1.0)) < 1e-15);

    // theta = pi/3 in the xz-plane: [[0.5, 0.8660], [0.8660, -0.5]]
    const Matrix st = spin_along(Direction::polar(M_PI / 3.0));
    CHECK(st(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(st(0, 1).real() == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(st.is_hermitian());
    CHECK(std::abs(st.trace()) < 1e-15);
}

TEST_CASE("spin_along squares to identity, eigenvalues exactly +-1") {
    for (int trial = 0; trial < 100; ++trial) {
        const Direction n = random_direction();
        const Matrix s = spin_along(n);
        const Matrix s2 = s * s;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                CHECK(std::abs(s2(r, c) - (r == c ? cplx(1.0) : cplx(0.0))) < 1e-12);
        const auto es = eigen(s);
        CHECK(std::abs(es[0].value - 1.0) < 1e-12);
        CHECK(std::abs(es[1].value + 1.0) < 1e-12);
    }
}

TEST_CASE("singlet amplitudes and norm") {
    const TwoSpinState s = singlet();
    CHECK(std::abs(s.amplitude(0)) < 1e-15);
    CHECK(s.amplitude(1).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(s.amplitude(2).real() == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(std::abs(s.amplitude(3)) < 1e-15);
    CHECK(s.norm_sq() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(TwoSpinState({1.0, 1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("singlet expectation of sigma_z x sigma_z (4x4 oracle)") {
    const auto psi = singlet();
    std::array<cplx, 4> v{psi.amplitude(0), psi.amplitude(1), psi.amplitude(2),
                          psi.amplitude(3)};
    const auto m = brute_tensor(Direction::z_axis(), Direction::z_axis());
    CHECK(brute_expectation4(m, v) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(expectation(psi, tensor(pauli_z(), pauli_z())) ==
          doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("tensor: identity, diagonal, and action on the singlet") {
    const Matrix i4 = tensor(Matrix::identity(2), Matrix::identity(2));
    for (int r = 0; r < 4; ++r) CHECK(std::abs(i4(r, r) - cplx(1.0)) < 1e-15);

    const Matrix zz = tensor(pauli_z(), pauli_z());
    CHECK(zz(0, 0) == cplx(1.0));
    CHECK(zz(3, 3) == cplx(1.0));
    CHECK(zz(1, 1) == cplx(-1.0));

    // sigma_x x sigma_x maps the singlet to minus itself
    const Matrix xx = tensor(pauli_x(), pauli_x());
    const auto s = singlet().amplitudes();
    const auto mapped = xx.apply(s);
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(mapped[static_cast<std::size_t>(k)] + s[static_cast<std::size_t>(k)]) < 1e-14);
}

TEST_CASE("expectation: eigenstates, singlet values, oracle agreement") {
    CHECK(expectation(Spinor2::plus(), pauli_z()) == doctest::Approx(1.0));

    // theta_ab = pi/2 gives zero; pi/4 gives -cos(pi/4)
    const Direction a = Direction::z_axis();
    const auto psi = singlet();
    for (const double theta : {M_PI / 2.0, M_PI / 4.0}) {
        const Direction b = Direction::polar(theta);
        const double got = expectation(psi, tensor(spin_along(a), spin_along(b)));
        CHECK(got == doctest::Approx(-std::cos(theta)).epsilon(1e-12));
        std::array<cplx, 4> v{psi.amplitude(0), psi.amplitude(1), psi.amplitude(2),
                              psi.amplitude(3)};
        CHECK(got == doctest::Approx(brute_expectation4(brute_tensor(a, b), v))
                         .epsilon(1e-12));
    }
    CHECK(expectation(psi, tensor(spin_along(a), spin_along(Direction::polar(M_PI / 4)))) ==
          doctest::Approx(-0.70711).epsilon(1e-5));

    // expectation stays within the spectrum
    for (int t = 0; t < 20; ++t) {
        const Matrix r = random_hermitian(4);
        const auto es = eigen(r);
        const double v = expectation(random_state(4), r);
        CHECK(v <= es.front().value + 1e-10);
        CHECK(v >= es.back().value - 1e-10);
    }
}

TEST_CASE("expectation divides by the squared norm") {
    // un-normalized spinor: <2e_+|sz|2e_+> / <2e_+|2e_+> = 1
    const Spinor2 scaled{2.0, 0.0};
    CHECK(expectation(scaled, pauli_z()) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("expectation dimension mismatch rejected") {
    CHECK_THROWS_AS((void)expectation(Spinor2::plus(), Matrix::identity(4)),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)expectation(singlet(), pauli_z()), std::invalid_argument);
}

TEST_CASE("linearity of the expectation over non-commuting observables") {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        const Matrix r = random_hermitian(4);
        const Matrix s = random_hermitian(4);
        const double a = coef(gen), b = coef(gen);
        const auto psi = random_state(4);
        const Matrix combo = a * r + b * s;
        CHECK(expectation(psi, combo) ==
              doctest::Approx(a * expectation(psi, r) + b * expectation(psi, s))
                  .epsilon(1e-10));
    }
}

TEST_CASE("rotational invariance of the singlet correlation") {
    const Direction a = random_direction();
    const Direction b = random_direction();
    const auto psi = singlet();
    const double base = expectation(psi, tensor(spin_along(a), spin_along(b)));
    for (int t = 0; t < 100; ++t) {
        const Rot3 rot = Rot3::random();
        const double rotated = expectation(
            psi, tensor(spin_along(rot.apply(a)), spin_along(rot.apply(b))));
        CHECK(rotated == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("eigen of tensor(sz, sz)") {
    const auto es = eigen(tensor(pauli_z(), pauli_z()));
    CHECK(es[0].value == doctest::Approx(1.0));
    CHECK(es[1].value == doctest::Approx(1.0));
    CHECK(es[2].value == doctest::Approx(-1.0));
    CHECK(es[3].value == doctest::Approx(-1.0));
}

TEST_CASE("trace_expectation basics and dimension checks") {
    const auto plus_rho = DensityMatrix::pure({1.0, 0.0});
    CHECK(trace_expectation(plus_rho, pauli_z()) == doctest::Approx(1.0));

    // Tr(1 |phi><phi|) = 1 regardless of phi
    const auto i2 = DensityMatrix::identity(2);
    const auto phi = random_state(2);
    CHECK(trace_expectation(i2, Matrix::outer(phi)) == doctest::Approx(1.0).epsilon(1e-12));

    // Tr(I3 I3) = 3
    const auto i3 = DensityMatrix::identity(3);
    CHECK(trace_expectation(i3, Matrix::identity(3)) == doctest::Approx(3.0));

    CHECK_THROWS_AS((void)trace_expectation(i2, Matrix::identity(3)),
                    std::invalid_argument);
}

TEST_CASE("positivity: PSD observable has nonnegative trace expectation") {
    for (int t = 0; t < 50; ++t) {
        const Matrix h = random_hermitian(3);
        const Matrix psd = h * h; // Hermitian square is PSD
        const auto rho = DensityMatrix::pure(random_state(3));
        CHECK(trace_expectation(rho, psd) >= -1e-10);
    }
}

TEST_CASE("density matrix invariants") {
    CHECK_THROWS_AS(DensityMatrix(Matrix(2, {1.0, 1.0, 0.0, 1.0})),
                    std::invalid_argument); // not Hermitian
    CHECK_THROWS_AS(DensityMatrix(Matrix(2, {1.0, 0.0, 0.0, -1.0})),
                    std::invalid_argument); // negative eigenvalue
    const auto rho = DensityMatrix::identity(3);
    CHECK(rho.trace() == doctest::Approx(3.0)); // trace recorded, not forced
}

TEST_CASE("dispersion: eigenstates and the singlet") {
    CHECK(dispersion(Spinor2::plus(), pauli_z()) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(dispersion(Spinor2::plus(), pauli_x()) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dispersion(singlet(), tensor(pauli_z(), pauli_z())) ==
          doctest::Approx(0.0).epsilon(1e-14));
    for (int t = 0; t < 20; ++t) {
        const auto psi = random_state(4);
        CHECK(dispersion(psi, random_hermitian(4)) >= -1e-10);
    }
}
