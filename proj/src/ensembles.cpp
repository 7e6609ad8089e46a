#include "hvlab/ensembles.hpp"

#include <cmath>
#include <stdexcept>

namespace hvlab::ensembles {

namespace {

constexpr double kSpan = 8.0;     // quadrature window in units of eps
constexpr int kNodesPerSide = 32; // step eps/4; Gaussian tails < 1e-14

double gauss(double u, double eps) {
    return std::exp(-0.5 * u * u / (eps * eps)) / (std::sqrt(2.0 * M_PI) * eps);
}

void check_eps(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("smearing width must be positive");
}

// Odometer over a tensor-product grid of (2*kNodesPerSide+1)^n nodes
// centered on c with spacing eps/4, trapezoidal weights.
template <typename Fn>
double tensor_trapezoid(const std::vector<double>& c, double eps, Fn f) {
    const int n = static_cast<int>(c.size());
    const int m = 2 * kNodesPerSide + 1;
    const double h = kSpan * eps / kNodesPerSide;
    std::vector<int> idx(n, 0);
    std::vector<double> x(n);
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (int d = 0; d < n; ++d) {
            x[d] = c[d] + (idx[d] - kNodesPerSide) * h;
            w *= (idx[d] == 0 || idx[d] == m - 1) ? 0.5 * h : h;
        }
        total += w * f(x);
        int d = 0;
        while (d < n && ++idx[d] == m) idx[d++] = 0;
        if (d == n) break;
    }
    return total;
}

} // namespace

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<ParticlePath> paths, double hbar)
    : paths_(std::move(paths)), hbar_(hbar) {
    if (paths_.empty())
        throw std::invalid_argument("TrajectoryEnsemble: need at least one particle");
    if (!(hbar_ > 0.0)) throw std::invalid_argument("TrajectoryEnsemble: hbar <= 0");
}

TrajectoryEnsemble TrajectoryEnsemble::free_particle(double x0, double p0, double mass,
                                                     double hbar) {
    ParticlePath path;
    path.x = [x0, p0, mass](double t) { return x0 + p0 * t / mass; };
    path.p = [p0](double) { return p0; };
    return TrajectoryEnsemble({std::move(path)}, hbar);
}

double TrajectoryEnsemble::x0(int i, double t) const {
    const double v = paths_[static_cast<std::size_t>(i)].x(t);
    if (!std::isfinite(v))
        throw std::runtime_error("TrajectoryEnsemble: non-finite position path");
    return v;
}

double TrajectoryEnsemble::p0(int i, double t) const {
    const double v = paths_[static_cast<std::size_t>(i)].p(t);
    if (!std::isfinite(v))
        throw std::runtime_error("TrajectoryEnsemble: non-finite momentum path");
    return v;
}

double SmearedDensity::value(const std::vector<double>& x,
                             const std::vector<double>& p) const {
    double v = 1.0;
    for (std::size_t i = 0; i < x0.size(); ++i)
        v *= gauss(x[i] - x0[i], eps) * gauss(p[i] - p0[i], eps);
    return v;
}

double SmearedDensity::position_density(const std::vector<double>& x) const {
    double v = 1.0;
    for (std::size_t i = 0; i < x0.size(); ++i) v *= gauss(x[i] - x0[i], eps);
    return v;
}

double SmearedDensity::integral() const {
    const double ix = tensor_trapezoid(
        x0, eps, [&](const std::vector<double>& x) { return position_density(x); });
    const double ip =
        tensor_trapezoid(p0, eps, [&](const std::vector<double>& p) {
            double v = 1.0;
            for (std::size_t i = 0; i < p0.size(); ++i) v *= gauss(p[i] - p0[i], eps);
            return v;
        });
    return ix * ip;
}

SmearedDensity smear(const TrajectoryEnsemble& e, double t, double eps) {
    check_eps(eps);
    SmearedDensity d;
    d.eps = eps;
    d.hbar = e.hbar();
    for (int i = 0; i < e.particles(); ++i) {
        d.x0.push_back(e.x0(i, t));
        d.p0.push_back(e.p0(i, t));
    }
    return d;
}

std::complex<double> wigner_moyal(const TrajectoryEnsemble& e, double t,
                                  const std::vector<double>& x,
                                  const std::vector<double>& dx, double eps) {
    check_eps(eps);
    if (static_cast<int>(x.size()) != e.particles() || x.size() != dx.size())
        throw std::invalid_argument("wigner_moyal: coordinate count mismatch");
    double mag = 1.0;
    double phase = 0.0;
    for (int i = 0; i < e.particles(); ++i) {
        mag *= gauss(x[static_cast<std::size_t>(i)] - e.x0(i, t), eps);
        phase += e.p0(i, t) * dx[static_cast<std::size_t>(i)] / e.hbar();
    }
    return std::polar(mag, phase);
}

double coincidence_density(const TrajectoryEnsemble& e, double t,
                           const std::vector<double>& x, double eps) {
    check_eps(eps);
    if (static_cast<int>(x.size()) != e.particles())
        throw std::invalid_argument("coincidence_density: coordinate count mismatch");
    double mag = 1.0;
    for (int i = 0; i < e.particles(); ++i)
        mag *= gauss(x[static_cast<std::size_t>(i)] - e.x0(i, t), eps);
    return mag;
}

double integrate_coincidence(const TrajectoryEnsemble& e, double t, double eps) {
    check_eps(eps);
    std::vector<double> c;
    for (int i = 0; i < e.particles(); ++i) c.push_back(e.x0(i, t));
    return tensor_trapezoid(c, eps, [&](const std::vector<double>& x) {
        return coincidence_density(e, t, x, eps);
    });
}

double momentum_readout(const TrajectoryEnsemble& e, double t,
                        const std::vector<double>& x, int particle, double eps) {
    const double h = 1e-5;
    std::vector<double> dxp(x.size(), 0.0), dxm(x.size(), 0.0);
    dxp[static_cast<std::size_t>(particle)] = h;
    dxm[static_cast<std::size_t>(particle)] = -h;
    const double ap = std::arg(wigner_moyal(e, t, x, dxp, eps));
    const double am = std::arg(wigner_moyal(e, t, x, dxm, eps));
    return e.hbar() * (ap - am) / (2.0 * h);
}

double extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size() || t.empty())
        throw std::invalid_argument("extrapolate_to_zero: bad table");
    std::vector<double> w = v;
    const std::size_t n = t.size();
    for (std::size_t k = 1; k < n; ++k)
        for (std::size_t i = 0; i + k < n; ++i)
            w[i] = w[i + 1] + (w[i] - w[i + 1]) * t[i + k] / (t[i + k] - t[i]);
    return w[0];
}

double classical_dispersion(const TrajectoryEnsemble& e, double t,
                            const PhaseSpaceFn& f, const std::vector<double>& eps_seq,
                            std::vector<double>& per_eps) {
    if (eps_seq.size() < 2)
        throw std::invalid_argument("classical_dispersion: need at least two widths");
    for (std::size_t i = 0; i < eps_seq.size(); ++i) {
        check_eps(eps_seq[i]);
        if (i > 0 && eps_seq[i] >= eps_seq[i - 1])
            throw std::invalid_argument(
                "classical_dispersion: widths must decrease strictly");
    }

    std::vector<double> centers, momenta;
    for (int i = 0; i < e.particles(); ++i) {
        centers.push_back(e.x0(i, t));
        momenta.push_back(0.0);
    }

    per_eps.clear();
    std::vector<double> eps_sq;
    for (const double eps : eps_seq) {
        // phase read-out is independent of the probe position here, since
        // the Wigner-Moyal phase carries p0 alone
        for (int i = 0; i < e.particles(); ++i)
            momenta[static_cast<std::size_t>(i)] =
                momentum_readout(e, t, centers, i, eps);

        double mean = 0.0, mean_sq = 0.0;
        const double norm = integrate_coincidence(e, t, eps);
        mean = tensor_trapezoid(centers, eps, [&](const std::vector<double>& x) {
                   return coincidence_density(e, t, x, eps) * f(x, momenta);
               }) /
               norm;
        mean_sq = tensor_trapezoid(centers, eps, [&](const std::vector<double>& x) {
                      const double fx = f(x, momenta);
                      return coincidence_density(e, t, x, eps) * fx * fx;
                  }) /
                  norm;
        per_eps.push_back(mean_sq - mean * mean);
        eps_sq.push_back(eps * eps);
    }
    return extrapolate_to_zero(eps_sq, per_eps);
}

double classical_dispersion(const TrajectoryEnsemble& e, double t,
                            const PhaseSpaceFn& f, const std::vector<double>& eps_seq) {
    std::vector<double> per_eps;
    return classical_dispersion(e, t, f, eps_seq, per_eps);
}

double von_neumann_gap(const DensityMatrix& rho, const Matrix& r) {
    const double r_mean = spin::trace_expectation(rho, r);
    const double r2_mean = spin::trace_expectation(rho, r * r);
    return r2_mean - 2.0 * r_mean * r_mean + r_mean * r_mean * rho.trace();
}

std::pair<double, double> projector_consistency(const DensityMatrix& rho,
                                                const std::vector<cplx>& phi) {
    double n2 = 0.0;
    for (const auto& a : phi) n2 += std::norm(a);
    if (std::abs(n2 - 1.0) > 1e-9)
        throw std::invalid_argument("projector_consistency: phi is not normalized");
    Matrix p = Matrix::outer(phi);
    const double lhs = spin::trace_expectation(rho, p * p);
    const double rhs_root = spin::trace_expectation(rho, p);
    return {lhs, rhs_root * rhs_root};
}

} // namespace hvlab::ensembles
