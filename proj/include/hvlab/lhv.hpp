#pragma once

#include "hvlab/correlations.hpp"
#include "hvlab/rng.hpp"
#include "hvlab/spin_algebra.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hvlab::lhv {

using correlations::MeterSettings;
using spin::Direction;

// Hidden value drawn per trial. The slots are model-private; callers only
// pass the record between sample() and the responses.
using Hidden = std::array<double, 4>;

// A local model: a normalized hidden-variable sampler plus per-meter
// response functions bounded by 1 in modulus. Locality is structural --
// response_a never sees b and vice versa.
class LhvModel {
  public:
    virtual ~LhvModel() = default;
    virtual const char* name() const = 0;
    virtual Hidden sample(rng::Stream& rng) const = 0;
    virtual double response_a(const Direction& a, const Hidden& h) const = 0;
    virtual double response_b(const Direction& b, const Hidden& h) const = 0;
    // closed-form correlation when the model has one, for oracle checks
    virtual std::optional<double> closed_form(const Direction& a,
                                              const Direction& b) const {
        (void)a;
        (void)b;
        return std::nullopt;
    }
};

// lambda uniform on the unit sphere; A = sign(a.lambda), B = -sign(b.lambda).
// Correlation is -1 + 2 theta_ab / pi.
std::unique_ptr<LhvModel> builtin_sign_model();

// lambda = (s, u1, u2): a fair product-state label and two uniforms that
// threshold the per-particle Born marginals. Reproduces the mixture
// correlation -a_z b_z with strictly local responses.
std::unique_ptr<LhvModel> builtin_mixture_model();

std::vector<std::string> registered_models();
std::unique_ptr<LhvModel> model_by_name(const std::string& name);

struct Estimate {
    double mean = 0.0;
    double stderr_est = 0.0;
    std::uint64_t n = 0;
};

// Monte Carlo mean of A(a,lambda) B(b,lambda) over n fresh lambda draws.
// Deterministic per (seed, stream); identical for any worker count. A
// response leaving [-1, 1] aborts with the offending lambda in the message.
Estimate estimate_correlation(const LhvModel& m, const Direction& a,
                              const Direction& b, std::uint64_t n, std::uint64_t seed,
                              int threads = 1, std::uint64_t stream = 0);

// CHSH left side assembled from four estimates on sub-streams 0..3 of the
// seed; stderr is the sum of the four standard errors (conservative).
Estimate chsh_of_model(const LhvModel& m, const MeterSettings& s, std::uint64_t n,
                       std::uint64_t seed, int threads = 1);

} // namespace hvlab::lhv
