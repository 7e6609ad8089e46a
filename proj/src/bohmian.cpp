#include "hvlab/bohmian.hpp"

#include "hvlab/parallel.hpp"
#include "hvlab/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <stdexcept>

namespace hvlab::bohmian {

namespace {

std::size_t node_index(const std::array<int, 2>& n, int i, int j) {
    return static_cast<std::size_t>(i) * n[1] + j;
}

double wrap_pi(double d) { return d - 2.0 * M_PI * std::round(d / (2.0 * M_PI)); }

} // namespace

// ---- WaveGrid ------------------------------------------------------------

double WaveGrid::norm() const {
    double s = 0.0;
    for (const auto& a : psi) s += std::norm(a);
    return s * cell();
}

void WaveGrid::normalize() {
    const double n0 = norm();
    if (n0 < 1e-300) throw std::runtime_error("WaveGrid: cannot normalize zero state");
    const double scale = 1.0 / std::sqrt(n0);
    for (auto& a : psi) a *= scale;
}

void evolve(WaveGrid& w, const Potential& v, double dt, int steps) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
    if (v.size() != w.nodes())
        throw std::invalid_argument("evolve: potential not sampled on the lattice");
    if (std::abs(w.norm() - 1.0) > 1e-9)
        throw std::runtime_error("evolve: initial state is not normalized");

    double vmax = 0.0;
    for (const double x : v) vmax = std::max(vmax, std::abs(x));
    if (dt * vmax / w.hbar > 0.1)
        std::fprintf(stderr,
                     "evolve: warning: dt*max|V|/hbar = %.3g exceeds 0.1; "
                     "potential phase is under-resolved\n",
                     dt * vmax / w.hbar);

    const std::size_t total = w.nodes();
    std::vector<cplx> half_v(total), kinetic(total);
    for (std::size_t i = 0; i < total; ++i)
        half_v[i] = std::polar(1.0, -v[i] * dt / (2.0 * w.hbar));

    const double inv_n = 1.0 / static_cast<double>(total);
    for (int i = 0; i < w.n[0]; ++i) {
        const int fi = i <= w.n[0] / 2 ? i : i - w.n[0];
        const double kx = 2.0 * M_PI * fi / (w.n[0] * w.spacing[0]);
        for (int j = 0; j < w.n[1]; ++j) {
            double k2 = kx * kx;
            if (w.dim == 2) {
                const int fj = j <= w.n[1] / 2 ? j : j - w.n[1];
                const double ky = 2.0 * M_PI * fj / (w.n[1] * w.spacing[1]);
                k2 += ky * ky;
            }
            kinetic[node_index(w.n, i, j)] =
                std::polar(inv_n, -w.hbar * k2 * dt / (2.0 * w.mass));
        }
    }

    auto* data = reinterpret_cast<fftw_complex*>(w.psi.data());
    fftw_plan fwd, bwd;
    if (w.dim == 1) {
        fwd = fftw_plan_dft_1d(w.n[0], data, data, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(w.n[0], data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
        fwd = fftw_plan_dft_2d(w.n[0], w.n[1], data, data, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(w.n[0], w.n[1], data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    for (int step = 0; step < steps; ++step) {
        for (std::size_t i = 0; i < total; ++i) w.psi[i] *= half_v[i];
        fftw_execute(fwd);
        for (std::size_t i = 0; i < total; ++i) w.psi[i] *= kinetic[i];
        fftw_execute(bwd);
        for (std::size_t i = 0; i < total; ++i) w.psi[i] *= half_v[i];
        w.time += dt;
        if (std::abs(w.norm() - 1.0) > 1e-9) {
            fftw_destroy_plan(fwd);
            fftw_destroy_plan(bwd);
            throw std::runtime_error("evolve: norm drifted beyond 1e-9");
        }
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
}

// ---- polar decomposition and derived fields -------------------------------

PolarFields polar_decompose(const WaveGrid& w) {
    PolarFields f;
    f.dim = w.dim;
    f.n = w.n;
    f.origin = w.origin;
    f.spacing = w.spacing;
    f.mass = w.mass;
    f.hbar = w.hbar;
    f.time = w.time;

    const std::size_t total = w.nodes();
    f.r.resize(total);
    f.s.assign(total, 0.0);
    f.masked.assign(total, 0);

    double rmax = 0.0;
    std::size_t anchor = 0;
    for (std::size_t i = 0; i < total; ++i) {
        f.r[i] = std::abs(w.psi[i]);
        if (f.r[i] > rmax) {
            rmax = f.r[i];
            anchor = i;
        }
    }
    const double floor = kAmplitudeFloorFrac * rmax;
    for (std::size_t i = 0; i < total; ++i)
        if (f.r[i] < floor) f.masked[i] = 1;

    // breadth-first unwrap from the max-R node, adding the 2 pi hbar
    // multiple that minimizes each neighbor jump
    std::vector<double> arg(total);
    for (std::size_t i = 0; i < total; ++i) arg[i] = std::arg(w.psi[i]);

    std::vector<std::uint8_t> seen(total, 0);
    std::deque<std::size_t> queue;
    f.s[anchor] = w.hbar * arg[anchor];
    seen[anchor] = 1;
    queue.push_back(anchor);
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        const int ci = static_cast<int>(cur) / w.n[1];
        const int cj = static_cast<int>(cur) % w.n[1];
        const int di[4] = {-1, 1, 0, 0};
        const int dj[4] = {0, 0, -1, 1};
        const int sides = w.dim == 1 ? 2 : 4;
        for (int k = 0; k < sides; ++k) {
            const int ni = ci + di[k], nj = cj + dj[k];
            if (ni < 0 || ni >= w.n[0] || nj < 0 || nj >= w.n[1]) continue;
            const std::size_t nb = node_index(w.n, ni, nj);
            if (seen[nb]) continue;
            seen[nb] = 1;
            f.s[nb] = f.s[cur] + w.hbar * wrap_pi(arg[nb] - arg[cur]);
            queue.push_back(nb);
        }
    }
    return f;
}

std::vector<double> quantum_potential(const PolarFields& f) {
    const std::size_t total = f.r.size();
    std::vector<double> q(total, 0.0);
    const double pref = -f.hbar * f.hbar / (2.0 * f.mass);

    auto second_diff = [](double fm, double f0, double fp, double h) {
        return (fm - 2.0 * f0 + fp) / (h * h);
    };

    for (int i = 0; i < f.n[0]; ++i)
        for (int j = 0; j < f.n[1]; ++j) {
            const std::size_t c = node_index(f.n, i, j);
            if (f.masked[c]) continue;
            double lap = 0.0;
            {
                const int im = std::max(i - 1, 0), ip = std::min(i + 1, f.n[0] - 1);
                const int shift = (i == 0) ? 1 : (i == f.n[0] - 1 ? -1 : 0);
                lap += second_diff(f.r[node_index(f.n, im + shift, j)],
                                   f.r[node_index(f.n, i + shift, j)],
                                   f.r[node_index(f.n, ip + shift, j)], f.spacing[0]);
            }
            if (f.dim == 2) {
                const int jm = std::max(j - 1, 0), jp = std::min(j + 1, f.n[1] - 1);
                const int shift = (j == 0) ? 1 : (j == f.n[1] - 1 ? -1 : 0);
                lap += second_diff(f.r[node_index(f.n, i, jm + shift)],
                                   f.r[node_index(f.n, i, j + shift)],
                                   f.r[node_index(f.n, i, jp + shift)], f.spacing[1]);
            }
            q[c] = pref * lap / f.r[c];
        }
    return q;
}

std::vector<double> gradient(const PolarFields& geom, const std::vector<double>& field,
                             int axis) {
    const std::size_t total = field.size();
    std::vector<double> g(total, 0.0);
    const double h = geom.spacing[axis];
    const int count = geom.n[axis];
    if (count < 3) throw std::invalid_argument("gradient: axis too short");

    const std::size_t stride =
        axis == 0 ? static_cast<std::size_t>(geom.n[1]) : 1;
    const int lines = axis == 0 ? geom.n[1] : geom.n[0];
    for (int line = 0; line < lines; ++line) {
        const std::size_t base =
            axis == 0 ? static_cast<std::size_t>(line)
                      : static_cast<std::size_t>(line) * geom.n[1];
        auto at = [&](int k) { return field[base + stride * k]; };
        auto& out = g;
        out[base] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        for (int k = 1; k < count - 1; ++k)
            out[base + stride * k] = (at(k + 1) - at(k - 1)) / (2.0 * h);
        out[base + stride * (count - 1)] =
            (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) / (2.0 * h);
    }
    return g;
}

namespace {

// nodes whose stencil neighborhood (radius 2 per axis) is fully unmasked
std::vector<std::uint8_t> clean_nodes(const PolarFields& a, const PolarFields& b) {
    const std::size_t total = a.r.size();
    std::vector<std::uint8_t> clean(total, 0);
    for (int i = 0; i < a.n[0]; ++i)
        for (int j = 0; j < a.n[1]; ++j) {
            bool ok = true;
            for (int oi = -2; oi <= 2 && ok; ++oi)
                for (int oj = -2; oj <= 2 && ok; ++oj) {
                    if (a.dim == 1 && oj != 0) continue;
                    const int ni = i + oi, nj = j + oj;
                    if (ni < 0 || ni >= a.n[0] || nj < 0 || nj >= a.n[1]) continue;
                    const std::size_t nb = node_index(a.n, ni, nj);
                    if (a.masked[nb] || b.masked[nb]) ok = false;
                }
            clean[node_index(a.n, i, j)] = ok ? 1 : 0;
        }
    return clean;
}

// global 2 pi hbar multiple aligning the second unwrapped phase to the first
double phase_alignment(const PolarFields& f1, const PolarFields& f2,
                       const std::vector<std::uint8_t>& clean) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < clean.size(); ++i)
        if (clean[i]) {
            acc += f2.s[i] - f1.s[i];
            ++count;
        }
    if (count == 0) return 0.0;
    const double turn = 2.0 * M_PI * f1.hbar;
    return turn * std::round(acc / static_cast<double>(count) / turn);
}

void check_pairing(const PolarFields& f1, const PolarFields& f2) {
    if (f1.n != f2.n || f1.dim != f2.dim)
        throw std::invalid_argument("residual: decompositions on different grids");
    if (!(f2.time > f1.time))
        throw std::invalid_argument("residual: need consecutive times");
}

} // namespace

ResidualStats hj_residual(const PolarFields& f1, const PolarFields& f2,
                          const Potential& v) {
    check_pairing(f1, f2);
    if (v.size() != f1.r.size())
        throw std::invalid_argument("hj_residual: potential size mismatch");
    const double dt = f2.time - f1.time;
    const auto clean = clean_nodes(f1, f2);
    const double shift = phase_alignment(f1, f2, clean);

    const auto q1 = quantum_potential(f1);
    const auto q2 = quantum_potential(f2);
    std::vector<std::vector<double>> g1(f1.dim), g2(f1.dim);
    for (int d = 0; d < f1.dim; ++d) {
        g1[d] = gradient(f1, f1.s, d);
        g2[d] = gradient(f2, f2.s, d);
    }

    ResidualStats stats;
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (!clean[i]) continue;
        double ke1 = 0.0, ke2 = 0.0;
        for (int d = 0; d < f1.dim; ++d) {
            ke1 += g1[d][i] * g1[d][i];
            ke2 += g2[d][i] * g2[d][i];
        }
        ke1 /= 2.0 * f1.mass;
        ke2 /= 2.0 * f2.mass;
        const double res = (f2.s[i] - shift - f1.s[i]) / dt + 0.5 * (ke1 + ke2) +
                           v[i] + 0.5 * (q1[i] + q2[i]);
        const double w = 0.5 * (f1.r[i] * f1.r[i] + f2.r[i] * f2.r[i]);
        acc += w * res * res;
        wsum += w;
        ++stats.count;
    }
    stats.rms = wsum > 0.0 ? std::sqrt(acc / wsum) : 0.0;
    return stats;
}

ResidualStats continuity_residual(const PolarFields& f1, const PolarFields& f2) {
    check_pairing(f1, f2);
    const double dt = f2.time - f1.time;
    const auto clean = clean_nodes(f1, f2);

    auto divergence = [](const PolarFields& f) {
        std::vector<double> flux(f.r.size()), div(f.r.size(), 0.0);
        for (int d = 0; d < f.dim; ++d) {
            const auto gs = gradient(f, f.s, d);
            for (std::size_t i = 0; i < flux.size(); ++i)
                flux[i] = f.r[i] * f.r[i] * gs[i] / f.mass;
            const auto dflux = gradient(f, flux, d);
            for (std::size_t i = 0; i < div.size(); ++i) div[i] += dflux[i];
        }
        return div;
    };
    const auto div1 = divergence(f1);
    const auto div2 = divergence(f2);

    ResidualStats stats;
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        if (!clean[i]) continue;
        const double p1 = f1.r[i] * f1.r[i];
        const double p2 = f2.r[i] * f2.r[i];
        const double res = (p2 - p1) / dt + 0.5 * (div1[i] + div2[i]);
        const double w = 0.5 * (p1 + p2);
        acc += w * res * res;
        wsum += w;
        ++stats.count;
    }
    stats.rms = wsum > 0.0 ? std::sqrt(acc / wsum) : 0.0;
    return stats;
}

// ---- guidance -------------------------------------------------------------

std::vector<double> velocity_field(const WaveGrid& w) {
    const std::size_t total = w.nodes();
    std::vector<double> v(total * w.dim, 0.0);
    std::vector<std::uint8_t> masked(total, 0);

    double amax = 0.0;
    for (const auto& a : w.psi) amax = std::max(amax, std::abs(a));
    const double floor2 = kAmplitudeFloorFrac * kAmplitudeFloorFrac * amax * amax;

    for (int i = 0; i < w.n[0]; ++i)
        for (int j = 0; j < w.n[1]; ++j) {
            const std::size_t c = node_index(w.n, i, j);
            const double den = std::norm(w.psi[c]);
            if (den < floor2) {
                masked[c] = 1;
                continue;
            }
            const int ip = (i + 1) % w.n[0], im = (i + w.n[0] - 1) % w.n[0];
            const cplx dpsi0 =
                (w.psi[node_index(w.n, ip, j)] - w.psi[node_index(w.n, im, j)]) /
                (2.0 * w.spacing[0]);
            v[c * w.dim] =
                w.hbar * std::imag(std::conj(w.psi[c]) * dpsi0) / (w.mass * den);
            if (w.dim == 2) {
                const int jp = (j + 1) % w.n[1], jm = (j + w.n[1] - 1) % w.n[1];
                const cplx dpsi1 =
                    (w.psi[node_index(w.n, i, jp)] - w.psi[node_index(w.n, i, jm)]) /
                    (2.0 * w.spacing[1]);
                v[c * w.dim + 1] =
                    w.hbar * std::imag(std::conj(w.psi[c]) * dpsi1) / (w.mass * den);
            }
        }

    // masked nodes borrow the nearest unmasked value along axis 0, keeping
    // the field finite through density minima
    if (w.dim == 1) {
        int last = -1;
        for (int i = 0; i < w.n[0]; ++i) {
            if (!masked[static_cast<std::size_t>(i)]) {
                last = i;
                continue;
            }
            int right = -1;
            for (int k = i + 1; k < w.n[0]; ++k)
                if (!masked[static_cast<std::size_t>(k)]) {
                    right = k;
                    break;
                }
            const int src = (last < 0) ? right
                            : (right < 0) ? last
                            : (i - last <= right - i ? last : right);
            if (src >= 0) v[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(src)];
        }
    }
    return v;
}

namespace {

struct FieldInterp {
    const WaveGrid* w;
    const std::vector<double>* values; // per node per axis

    bool inside(const std::array<double, 2>& x) const {
        for (int d = 0; d < w->dim; ++d) {
            const double u = (x[static_cast<std::size_t>(d)] - w->origin[d]) / w->spacing[d];
            if (u < 0.0 || u > w->n[d] - 1) return false;
        }
        return true;
    }

    std::array<double, 2> eval(const std::array<double, 2>& x) const {
        std::array<int, 2> i0{0, 0};
        std::array<double, 2> frac{0.0, 0.0};
        for (int d = 0; d < w->dim; ++d) {
            double u = (x[static_cast<std::size_t>(d)] - w->origin[d]) / w->spacing[d];
            int i = static_cast<int>(std::floor(u));
            i = std::clamp(i, 0, w->n[d] - 2);
            i0[static_cast<std::size_t>(d)] = i;
            frac[static_cast<std::size_t>(d)] = u - i;
        }
        std::array<double, 2> out{0.0, 0.0};
        const auto& val = *values;
        if (w->dim == 1) {
            const std::size_t a = static_cast<std::size_t>(i0[0]);
            out[0] = (1.0 - frac[0]) * val[a] + frac[0] * val[a + 1];
        } else {
            for (int d = 0; d < 2; ++d) {
                auto at = [&](int i, int j) {
                    return val[node_index(w->n, i, j) * 2 + d];
                };
                const double fx = frac[0], fy = frac[1];
                out[static_cast<std::size_t>(d)] =
                    (1 - fx) * (1 - fy) * at(i0[0], i0[1]) +
                    fx * (1 - fy) * at(i0[0] + 1, i0[1]) +
                    (1 - fx) * fy * at(i0[0], i0[1] + 1) +
                    fx * fy * at(i0[0] + 1, i0[1] + 1);
            }
        }
        return out;
    }
};

} // namespace

bool TrajectorySet::order_preserved(double tol) const {
    if (dim != 1) return true;
    for (const auto& snap : positions)
        for (std::size_t p = 0; p + 1 < active.size(); ++p) {
            if (!active[p] || !active[p + 1]) continue;
            if (snap[p] > snap[p + 1] + tol) return false;
        }
    return true;
}

GuidanceRun run_guidance(WaveGrid w, const Potential& v, double dt, int steps,
                         const std::vector<double>& starts, int save_every,
                         bool keep_snapshots, int threads) {
    if (save_every < 1) throw std::invalid_argument("run_guidance: save_every < 1");
    const int n_particles = static_cast<int>(starts.size()) / w.dim;
    if (n_particles * w.dim != static_cast<int>(starts.size()))
        throw std::invalid_argument("run_guidance: starts not a multiple of dim");

    GuidanceRun run;
    run.traj.dim = w.dim;
    run.traj.active.assign(n_particles, 1);

    std::vector<double> pos = starts;
    {
        std::vector<double> dummy(w.nodes() * w.dim, 0.0);
        FieldInterp probe{&w, &dummy};
        for (int p = 0; p < n_particles; ++p) {
            std::array<double, 2> x{pos[static_cast<std::size_t>(p) * w.dim], 0.0};
            if (w.dim == 2) x[1] = pos[static_cast<std::size_t>(p) * w.dim + 1];
            if (!probe.inside(x))
                throw std::invalid_argument("run_guidance: start outside the grid");
        }
    }

    auto save = [&]() {
        run.traj.times.push_back(w.time);
        run.traj.positions.push_back(pos);
        if (keep_snapshots) run.snapshots.push_back(w);
    };
    save();

    std::vector<double> v_prev = velocity_field(w);
    for (int step = 0; step < steps; ++step) {
        evolve(w, v, dt, 1);
        const std::vector<double> v_next = velocity_field(w);
        const FieldInterp f_prev{&w, &v_prev}, f_next{&w, &v_next};

        for_blocks(
            static_cast<std::uint64_t>(n_particles), 1024, threads,
            [&](std::size_t, std::uint64_t lo, std::uint64_t hi) {
                for (std::uint64_t p = lo; p < hi; ++p) {
                    if (!run.traj.active[p]) continue;
                    std::array<double, 2> x{pos[p * w.dim], 0.0};
                    if (w.dim == 2) x[1] = pos[p * w.dim + 1];

                    auto mid = [&](const std::array<double, 2>& y) {
                        const auto a = f_prev.eval(y);
                        const auto b = f_next.eval(y);
                        return std::array<double, 2>{0.5 * (a[0] + b[0]),
                                                     0.5 * (a[1] + b[1])};
                    };
                    auto shifted = [&](const std::array<double, 2>& y,
                                       const std::array<double, 2>& k, double c) {
                        return std::array<double, 2>{y[0] + c * k[0], y[1] + c * k[1]};
                    };

                    bool ok = true;
                    std::array<double, 2> k1{}, k2{}, k3{}, k4{};
                    k1 = f_prev.eval(x);
                    auto x2 = shifted(x, k1, 0.5 * dt);
                    ok = ok && f_prev.inside(x2);
                    if (ok) k2 = mid(x2);
                    auto x3 = shifted(x, k2, 0.5 * dt);
                    ok = ok && f_prev.inside(x3);
                    if (ok) k3 = mid(x3);
                    auto x4 = shifted(x, k3, dt);
                    ok = ok && f_prev.inside(x4);
                    if (ok) k4 = f_next.eval(x4);

                    std::array<double, 2> xn{};
                    if (ok) {
                        for (int d = 0; d < w.dim; ++d)
                            xn[static_cast<std::size_t>(d)] =
                                x[static_cast<std::size_t>(d)] +
                                dt / 6.0 *
                                    (k1[static_cast<std::size_t>(d)] +
                                     2.0 * k2[static_cast<std::size_t>(d)] +
                                     2.0 * k3[static_cast<std::size_t>(d)] +
                                     k4[static_cast<std::size_t>(d)]);
                        ok = f_prev.inside(xn);
                    }
                    if (!ok) {
                        run.traj.active[p] = 0; // frozen at the last position
                        continue;
                    }
                    for (int d = 0; d < w.dim; ++d)
                        pos[p * w.dim + d] = xn[static_cast<std::size_t>(d)];
                }
            });

        v_prev = v_next;
        if ((step + 1) % save_every == 0) save();
    }
    return run;
}

TrajectorySet integrate_trajectories(const WaveGrid& w, const Potential& v, double dt,
                                     int steps, const std::vector<double>& starts,
                                     int save_every, int threads) {
    return run_guidance(w, v, dt, steps, starts, save_every, false, threads).traj;
}

double newton_residual_rms(const GuidanceRun& run, const Potential& v) {
    const auto& traj = run.traj;
    if (run.snapshots.size() != traj.times.size() || traj.times.size() < 3)
        throw std::invalid_argument(
            "newton_residual_rms: need kept snapshots at three or more saves");

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 1; k + 1 < traj.times.size(); ++k) {
        const WaveGrid& w = run.snapshots[k];
        const auto fields = polar_decompose(w);
        const auto q = quantum_potential(fields);
        std::vector<double> g_total(w.nodes(), 0.0);
        for (std::size_t i = 0; i < w.nodes(); ++i) g_total[i] = v[i] + q[i];

        // force interpolation uses only unmasked neighborhoods
        const auto clean = clean_nodes(fields, fields);
        std::vector<double> force(w.nodes() * w.dim, 0.0);
        for (int d = 0; d < w.dim; ++d) {
            const auto g = gradient(fields, g_total, d);
            for (std::size_t i = 0; i < w.nodes(); ++i) force[i * w.dim + d] = g[i];
        }
        const FieldInterp interp{&w, &force};

        const double dts = traj.times[k + 1] - traj.times[k];
        const double dts_m = traj.times[k] - traj.times[k - 1];
        for (int p = 0; p < traj.particles(); ++p) {
            if (!traj.active[static_cast<std::size_t>(p)]) continue;
            std::array<double, 2> x{traj.positions[k][static_cast<std::size_t>(p) * w.dim], 0.0};
            if (w.dim == 2) x[1] = traj.positions[k][static_cast<std::size_t>(p) * w.dim + 1];
            // skip paths running through masked cells
            const int i0 = static_cast<int>(
                std::floor((x[0] - w.origin[0]) / w.spacing[0]));
            bool usable = i0 >= 0 && i0 + 1 < w.n[0];
            if (usable && w.dim == 1)
                usable = clean[static_cast<std::size_t>(i0)] &&
                         clean[static_cast<std::size_t>(i0 + 1)];
            if (!usable) continue;

            const auto grad_g = interp.eval(x);
            for (int d = 0; d < w.dim; ++d) {
                const double xm = traj.positions[k - 1][static_cast<std::size_t>(p) * w.dim + d];
                const double xc = traj.positions[k][static_cast<std::size_t>(p) * w.dim + d];
                const double xp = traj.positions[k + 1][static_cast<std::size_t>(p) * w.dim + d];
                const double accel =
                    2.0 * ((xp - xc) / dts - (xc - xm) / dts_m) / (dts + dts_m);
                const double res = w.mass * accel + grad_g[static_cast<std::size_t>(d)];
                acc += res * res;
                ++count;
            }
        }
    }
    return count > 0 ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
}

// ---- sampling and the equivariance distance --------------------------------

namespace {

// piecewise-linear CDF over the 1D grid density
struct GridCdf {
    std::vector<double> x, c;

    explicit GridCdf(const WaveGrid& w) {
        if (w.dim != 1) throw std::invalid_argument("GridCdf: 1D only");
        const int n = w.n[0];
        x.resize(n);
        c.assign(n, 0.0);
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] = w.coord(0, i);
            p[static_cast<std::size_t>(i)] = std::norm(w.psi[static_cast<std::size_t>(i)]);
        }
        for (int i = 1; i < n; ++i)
            c[static_cast<std::size_t>(i)] =
                c[static_cast<std::size_t>(i - 1)] +
                0.5 * (p[static_cast<std::size_t>(i - 1)] + p[static_cast<std::size_t>(i)]) *
                    w.spacing[0];
        const double total = c.back();
        for (auto& v : c) v /= total;
    }

    double value(double xq) const {
        if (xq <= x.front()) return 0.0;
        if (xq >= x.back()) return 1.0;
        const auto it = std::upper_bound(x.begin(), x.end(), xq);
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        const double f = (xq - x[i - 1]) / (x[i] - x[i - 1]);
        return c[i - 1] + f * (c[i] - c[i - 1]);
    }

    double invert(double u) const {
        const auto it = std::lower_bound(c.begin(), c.end(), u);
        std::size_t i = static_cast<std::size_t>(it - c.begin());
        if (i == 0) return x.front();
        if (i >= c.size()) return x.back();
        const double seg = c[i] - c[i - 1];
        const double f = seg > 0.0 ? (u - c[i - 1]) / seg : 0.0;
        return x[i - 1] + f * (x[i] - x[i - 1]);
    }
};

} // namespace

std::vector<double> sample_from_density(const WaveGrid& w, int count,
                                        std::uint64_t seed) {
    const GridCdf cdf(w);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        auto rng = rng::trial_stream(seed, 0, static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = cdf.invert(rng.uniform());
    }
    return out;
}

double ks_distance(const WaveGrid& w, std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
    const GridCdf cdf(w);
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf.value(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

// ---- two-particle kinematics ----------------------------------------------

double TwoParticleWave::norm() const {
    double s = 0.0;
    for (const auto& comp : components)
        for (const auto& a : comp) s += std::norm(a);
    return s * dx1 * dx2;
}

void TwoParticleWave::normalize() {
    const double n0 = norm();
    if (n0 < 1e-300)
        throw std::runtime_error("TwoParticleWave: cannot normalize zero state");
    const double scale = 1.0 / std::sqrt(n0);
    for (auto& comp : components)
        for (auto& a : comp) a *= scale;
}

double TwoParticleWave::rho(int i1, int i2) const {
    double s = 0.0;
    for (const auto& comp : components)
        s += std::norm(comp[static_cast<std::size_t>(i1) * n2 + i2]);
    return s;
}

double TwoParticleWave::rho_max() const {
    double m = 0.0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) m = std::max(m, rho(i, j));
    return m;
}

std::optional<Velocities2> two_particle_velocities(const TwoParticleWave& tp, double x1,
                                                   double x2) {
    const int i1 = static_cast<int>(std::lround((x1 - tp.origin1) / tp.dx1));
    const int i2 = static_cast<int>(std::lround((x2 - tp.origin2) / tp.dx2));
    if (i1 < 1 || i1 > tp.n1 - 2 || i2 < 1 || i2 > tp.n2 - 2) return std::nullopt;

    const double den = tp.rho(i1, i2);
    const double floor = kAmplitudeFloorFrac * kAmplitudeFloorFrac * tp.rho_max();
    if (den < floor) return std::nullopt;

    double num1 = 0.0, num2 = 0.0;
    for (const auto& comp : tp.components) {
        const auto at = [&](int a, int b) {
            return comp[static_cast<std::size_t>(a) * tp.n2 + b];
        };
        const cplx center = at(i1, i2);
        num1 += std::imag(std::conj(center) *
                          (at(i1 + 1, i2) - at(i1 - 1, i2)) / (2.0 * tp.dx1));
        num2 += std::imag(std::conj(center) *
                          (at(i1, i2 + 1) - at(i1, i2 - 1)) / (2.0 * tp.dx2));
    }
    return Velocities2{tp.hbar * num1 / (tp.mass * den),
                       tp.hbar * num2 / (tp.mass * den)};
}

FactorizationReport factorization_test(const TwoParticleWave& tp, int probes,
                                       std::uint64_t seed) {
    FactorizationReport report;
    for (int k = 0; k < probes; ++k) {
        // retry masked draws inside the probe's own stream; deterministic
        // and independent of every other probe
        auto rng = rng::trial_stream(seed, 0, static_cast<std::uint64_t>(k));
        double x1 = 0.0, x2 = 0.0, x2b = 0.0;
        std::optional<Velocities2> va, vb;
        for (int attempt = 0; attempt < 64 && (!va || !vb); ++attempt) {
            const int i1 = 1 + static_cast<int>(rng.uniform() * (tp.n1 - 2));
            const int i2 = 1 + static_cast<int>(rng.uniform() * (tp.n2 - 2));
            const int i2b = 1 + static_cast<int>(rng.uniform() * (tp.n2 - 2));
            x1 = tp.coord1(i1);
            x2 = tp.coord2(i2);
            x2b = tp.coord2(i2b);
            va = two_particle_velocities(tp, x1, x2);
            vb = two_particle_velocities(tp, x1, x2b);
        }
        if (!va || !vb) continue;
        ++report.probes_used;
        const double spread = std::abs(va->v1 - vb->v1);
        if (spread > report.max_spread) {
            report.max_spread = spread;
            report.witness_x1 = x1;
            report.witness_x2 = x2;
            report.witness_x2_alt = x2b;
        }
    }
    report.local = report.max_spread < 1e-8;
    return report;
}

// ---- presets ----------------------------------------------------------------

WaveGrid preset_free_gaussian(int n, double length, double sigma0, double p0) {
    WaveGrid w;
    w.dim = 1;
    w.n = {n, 1};
    w.origin = {-length / 2.0, 0.0};
    w.spacing = {length / n, 0.0};
    w.psi.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = w.coord(0, i);
        w.psi[static_cast<std::size_t>(i)] =
            std::polar(std::exp(-x * x / (2.0 * sigma0 * sigma0)), p0 * x / w.hbar);
    }
    w.normalize();
    return w;
}

WaveGrid preset_harmonic_ground(int n, double length) {
    WaveGrid w;
    w.dim = 1;
    w.n = {n, 1};
    w.origin = {-length / 2.0, 0.0};
    w.spacing = {length / n, 0.0};
    w.psi.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = w.coord(0, i);
        w.psi[static_cast<std::size_t>(i)] = std::exp(-0.5 * x * x);
    }
    w.normalize();
    return w;
}

Potential harmonic_potential(const WaveGrid& w) {
    Potential v(w.nodes(), 0.0);
    for (int i = 0; i < w.n[0]; ++i)
        for (int j = 0; j < w.n[1]; ++j) {
            const double x = w.coord(0, i);
            double val = 0.5 * x * x;
            if (w.dim == 2) {
                const double y = w.coord(1, j);
                val += 0.5 * y * y;
            }
            v[node_index(w.n, i, j)] = val;
        }
    return v;
}

WaveGrid preset_double_slit(int n, double length, double separation,
                            double slit_width) {
    WaveGrid w;
    w.dim = 1;
    w.n = {n, 1};
    w.origin = {-length / 2.0, 0.0};
    w.spacing = {length / n, 0.0};
    w.psi.resize(static_cast<std::size_t>(n));
    const double s2 = 2.0 * slit_width * slit_width;
    for (int i = 0; i < n; ++i) {
        const double x = w.coord(0, i);
        const double up = x - separation;
        const double dn = x + separation;
        w.psi[static_cast<std::size_t>(i)] =
            std::exp(-up * up / s2) + std::exp(-dn * dn / s2);
    }
    w.normalize();
    return w;
}

TwoParticleWave preset_two_particle_product(int n, double length, double p0) {
    TwoParticleWave tp;
    tp.n1 = tp.n2 = n;
    tp.origin1 = tp.origin2 = -length / 2.0;
    tp.dx1 = tp.dx2 = length / n;
    tp.components.assign(1, std::vector<cplx>(static_cast<std::size_t>(n) * n));
    for (int i = 0; i < n; ++i) {
        const double x1 = tp.coord1(i);
        const cplx phi = std::polar(std::exp(-0.5 * x1 * x1), p0 * x1 / tp.hbar);
        for (int j = 0; j < n; ++j) {
            const double x2 = tp.coord2(j);
            tp.components[0][static_cast<std::size_t>(i) * n + j] =
                phi * std::exp(-0.5 * x2 * x2);
        }
    }
    tp.normalize();
    return tp;
}

TwoParticleWave preset_two_particle_entangled(int n, double length, double separation,
                                              double p0) {
    TwoParticleWave tp;
    tp.n1 = tp.n2 = n;
    tp.origin1 = tp.origin2 = -length / 2.0;
    tp.dx1 = tp.dx2 = length / n;
    tp.components.assign(1, std::vector<cplx>(static_cast<std::size_t>(n) * n));
    auto g = [](double u) { return std::exp(-0.5 * u * u); };
    for (int i = 0; i < n; ++i) {
        const double x1 = tp.coord1(i);
        for (int j = 0; j < n; ++j) {
            const double x2 = tp.coord2(j);
            const cplx branch1 = std::polar(g(x1 - separation) * g(x2 + separation),
                                            p0 * (x1 - x2) / tp.hbar);
            const cplx branch2 = std::polar(g(x1 + separation) * g(x2 - separation),
                                            p0 * (x2 - x1) / tp.hbar);
            tp.components[0][static_cast<std::size_t>(i) * n + j] = branch1 - branch2;
        }
    }
    tp.normalize();
    return tp;
}

WaveGrid preset_by_name(const std::string& name) {
    if (name == "free-gaussian") return preset_free_gaussian();
    if (name == "harmonic-ground") return preset_harmonic_ground();
    if (name == "double-slit") return preset_double_slit();
    throw std::invalid_argument("unknown preset: " + name);
}

TwoParticleWave two_particle_preset_by_name(const std::string& name) {
    if (name == "two-particle-product") return preset_two_particle_product();
    if (name == "two-particle-entangled") return preset_two_particle_entangled();
    throw std::invalid_argument("unknown two-particle preset: " + name);
}

bool is_two_particle_preset(const std::string& name) {
    return name == "two-particle-product" || name == "two-particle-entangled";
}

} // namespace hvlab::bohmian
