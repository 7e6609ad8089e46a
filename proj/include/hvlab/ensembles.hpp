#pragma once

#include "hvlab/spin_algebra.hpp"

#include <complex>
#include <functional>
#include <utility>
#include <vector>

namespace hvlab::ensembles {

using spin::DensityMatrix;

// One system of the ensemble: deterministic phase-space trajectory
// (x0(t), p0(t)), one spatial degree of freedom per particle.
struct ParticlePath {
    std::function<double(double)> x;
    std::function<double(double)> p;
};

// Dispersion-free ensemble: a product of delta pairs pinned to the
// trajectories, realized numerically through Gaussian smearing.
class TrajectoryEnsemble {
  public:
    explicit TrajectoryEnsemble(std::vector<ParticlePath> paths, double hbar = 1.0);

    static TrajectoryEnsemble free_particle(double x0, double p0, double mass = 1.0,
                                            double hbar = 1.0);

    int particles() const { return static_cast<int>(paths_.size()); }
    double hbar() const { return hbar_; }
    double x0(int i, double t) const; // throws on non-finite path values
    double p0(int i, double t) const;

  private:
    std::vector<ParticlePath> paths_;
    double hbar_;
};

// Gaussian-regularized delta product at a fixed time: width eps in both the
// position and momentum slots. Integrates to 1 over phase space.
struct SmearedDensity {
    std::vector<double> x0, p0;
    double eps;
    double hbar;

    double value(const std::vector<double>& x, const std::vector<double>& p) const;
    double position_density(const std::vector<double>& x) const;
    // full phase-space quadrature of value(); equals 1 up to tail truncation
    double integral() const;
};

SmearedDensity smear(const TrajectoryEnsemble& e, double t, double eps);

// prod_i delta_eps(x_i - x0_i(t)) exp[(i/hbar) p0_i(t) dx_i]
std::complex<double> wigner_moyal(const TrajectoryEnsemble& e, double t,
                                  const std::vector<double>& x,
                                  const std::vector<double>& dx, double eps);

// the dx -> 0 evaluation: prod_i delta_eps(x_i - x0_i(t))
double coincidence_density(const TrajectoryEnsemble& e, double t,
                           const std::vector<double>& x, double eps);

// trapezoidal integral of the coincidence density over all positions;
// the trajectory-ensemble analogue of taking the trace. Equals 1.
double integrate_coincidence(const TrajectoryEnsemble& e, double t, double eps);

// Momentum of particle i recovered from the Wigner-Moyal phase: central
// difference of arg at dx = 0 with step 1e-5.
double momentum_readout(const TrajectoryEnsemble& e, double t,
                        const std::vector<double>& x, int particle, double eps);

using PhaseSpaceFn =
    std::function<double(const std::vector<double>& x, const std::vector<double>& p)>;

// <f^2> - <f>^2 under the smeared ensemble for each width in eps_seq
// (strictly decreasing), extrapolated to eps -> 0 by polynomial
// extrapolation in eps^2. Positions are integrated over the smeared
// density; momenta come from the phase read-out.
double classical_dispersion(const TrajectoryEnsemble& e, double t,
                            const PhaseSpaceFn& f, const std::vector<double>& eps_seq);

// same, also returning the per-eps dispersion table (for reporting)
double classical_dispersion(const TrajectoryEnsemble& e, double t,
                            const PhaseSpaceFn& f, const std::vector<double>& eps_seq,
                            std::vector<double>& per_eps);

// Tr(rho R^2) - 2 Tr(rho R)^2 + Tr(rho R)^2 Tr(rho): the dispersion-free
// defect of the mean-value rule when Tr(rho) is not 1. Equals d - 1 for
// rho = identity and a rank-1 projector.
double von_neumann_gap(const DensityMatrix& rho, const Matrix& r);

// Both sides of <phi|rho|phi> = <phi|rho|phi>^2 for R = |phi><phi|:
// lhs = Tr(rho R^2), rhs = Tr(rho R)^2.
std::pair<double, double> projector_consistency(const DensityMatrix& rho,
                                                const std::vector<cplx>& phi);

// Polynomial (Neville) extrapolation of values v(t_k) to t = 0.
double extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& v);

} // namespace hvlab::ensembles
