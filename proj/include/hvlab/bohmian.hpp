#pragma once

#include "hvlab/matrix.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hvlab::bohmian {

// Complex wave function on a uniform 1D or 2D lattice with periodic
// boundaries. Row-major storage, node (i, j) at index i*n[1] + j.
struct WaveGrid {
    int dim = 1;
    std::array<int, 2> n{0, 1};
    std::array<double, 2> origin{0.0, 0.0};
    std::array<double, 2> spacing{0.0, 0.0};
    std::vector<cplx> psi;
    double mass = 1.0;
    double hbar = 1.0;
    double time = 0.0;

    std::size_t nodes() const { return psi.size(); }
    double cell() const { return dim == 1 ? spacing[0] : spacing[0] * spacing[1]; }
    double coord(int axis, int index) const {
        return origin[axis] + spacing[axis] * index;
    }
    double norm() const; // sum |psi|^2 * dx^dim
    void normalize();
};

using Potential = std::vector<double>; // sampled on the same lattice

// Split-step spectral propagator: half potential phase, full kinetic step in
// frequency space, half potential phase. Norm is checked after every step.
// Warns on stderr when dt max|V| / hbar exceeds 0.1.
void evolve(WaveGrid& w, const Potential& v, double dt, int steps);

// Psi = R exp(i S / hbar) with S unwrapped breadth-first from the max-R
// node; nodes with R below floor_frac * max(R) are masked.
struct PolarFields {
    int dim = 1;
    std::array<int, 2> n{0, 1};
    std::array<double, 2> origin{0.0, 0.0};
    std::array<double, 2> spacing{0.0, 0.0};
    double mass = 1.0;
    double hbar = 1.0;
    double time = 0.0;
    std::vector<double> r;
    std::vector<double> s;
    std::vector<std::uint8_t> masked;
};

constexpr double kAmplitudeFloorFrac = 1e-6;

PolarFields polar_decompose(const WaveGrid& w);

// Q = -(hbar^2 / 2 m R) lap R by central second differences; zero (and
// meaningless) on masked nodes.
std::vector<double> quantum_potential(const PolarFields& f);

// d-th axis derivative of a scalar field by central differences
// (second-order one-sided at array edges).
std::vector<double> gradient(const PolarFields& geom, const std::vector<double>& field,
                             int axis);

struct ResidualStats {
    double rms = 0.0;        // density-weighted over clean nodes
    std::size_t count = 0;   // nodes entering the statistic
};

// dS/dt + (grad S)^2 / 2m + V + Q at the midpoint of two consecutive
// decompositions (second order in dt and dx).
ResidualStats hj_residual(const PolarFields& f1, const PolarFields& f2,
                          const Potential& v);

// dP/dt + div(P grad S / m) at the same midpoint, P = R^2.
ResidualStats continuity_residual(const PolarFields& f1, const PolarFields& f2);

// Guidance velocity hbar Im(psi* D psi) / (m |psi|^2) per node and axis;
// masked nodes inherit the nearest unmasked value along axis 0.
std::vector<double> velocity_field(const WaveGrid& w);

struct TrajectorySet {
    int dim = 1;
    std::vector<double> times;
    std::vector<std::vector<double>> positions; // [save][particle*dim + axis]
    std::vector<std::uint8_t> active;           // cleared when a particle exits
    int particles() const { return static_cast<int>(active.size()); }
    // 1D: initial ordering maintained at every saved time
    bool order_preserved(double tol = 1e-12) const;
};

struct GuidanceRun {
    TrajectorySet traj;
    std::vector<WaveGrid> snapshots; // saved wave states, same cadence as traj
};

// Transports particles along x' = grad S / m with RK4 stages built from the
// velocity fields at consecutive wave steps. A particle leaving the grid is
// frozen and flagged inactive.
GuidanceRun run_guidance(WaveGrid w, const Potential& v, double dt, int steps,
                         const std::vector<double>& starts, int save_every = 1,
                         bool keep_snapshots = false, int threads = 1);

// Same transport, trajectories only.
TrajectorySet integrate_trajectories(const WaveGrid& w, const Potential& v, double dt,
                                     int steps, const std::vector<double>& starts,
                                     int save_every = 1, int threads = 1);

// RMS of m x'' + grad(V + Q) along the computed paths: the second-order
// form of the motion law, checked rather than integrated.
double newton_residual_rms(const GuidanceRun& run, const Potential& v);

// Draw n positions from the grid density |psi|^2 (1D, piecewise-linear CDF
// inversion, deterministic per seed).
std::vector<double> sample_from_density(const WaveGrid& w, int count,
                                        std::uint64_t seed);

// One-sample Kolmogorov-Smirnov distance between samples and the grid
// density (1D).
double ks_distance(const WaveGrid& w, std::vector<double> samples);

// Finite-component two-particle wave on a pair of 1D grids. Components
// carry the ij label sum of the guidance formula.
struct TwoParticleWave {
    int n1 = 0, n2 = 0;
    double origin1 = 0.0, origin2 = 0.0;
    double dx1 = 0.0, dx2 = 0.0;
    std::vector<std::vector<cplx>> components; // each n1*n2, index i1*n2 + i2
    double mass = 1.0;
    double hbar = 1.0;

    double coord1(int i) const { return origin1 + dx1 * i; }
    double coord2(int i) const { return origin2 + dx2 * i; }
    double norm() const;
    void normalize();
    double rho(int i1, int i2) const; // sum_ij |psi_ij|^2
    double rho_max() const;
};

struct Velocities2 {
    double v1;
    double v2;
};

// v_k = rho^{-1} Im sum_ij psi_ij* d psi_ij / dX_k (times hbar/m), at the
// grid node nearest to (x1, x2). Empty when the point is masked or within
// one node of the boundary.
std::optional<Velocities2> two_particle_velocities(const TwoParticleWave& tp, double x1,
                                                   double x2);

struct FactorizationReport {
    bool local = true;
    double max_spread = 0.0; // max |v1(X1,X2) - v1(X1,X2')| over probes
    double witness_x1 = 0.0, witness_x2 = 0.0, witness_x2_alt = 0.0;
    int probes_used = 0;
};

// Probes v1 at random (X1, X2, X2') node triples; "local" when the spread
// stays below 1e-8.
FactorizationReport factorization_test(const TwoParticleWave& tp, int probes,
                                       std::uint64_t seed);

// ---- presets -------------------------------------------------------------

// exp(-(x-c)^2 / (2 sigma0^2) + i p0 x / hbar), box centered on c
WaveGrid preset_free_gaussian(int n = 2048, double length = 51.2, double sigma0 = 1.0,
                              double p0 = 0.0);

// ground state of V = x^2/2 at hbar = m = 1
WaveGrid preset_harmonic_ground(int n = 2048, double length = 16.0);
Potential harmonic_potential(const WaveGrid& w);

// symmetric two-Gaussian superposition: the transverse reduction of a
// double-slit source
WaveGrid preset_double_slit(int n = 2048, double length = 40.0,
                            double separation = 2.5, double slit_width = 0.6);

TwoParticleWave preset_two_particle_product(int n = 192, double length = 16.0,
                                            double p0 = 1.0);
TwoParticleWave preset_two_particle_entangled(int n = 192, double length = 16.0,
                                              double separation = 2.0, double p0 = 1.0);

WaveGrid preset_by_name(const std::string& name);      // 1D presets
TwoParticleWave two_particle_preset_by_name(const std::string& name);
bool is_two_particle_preset(const std::string& name);

} // namespace hvlab::bohmian
