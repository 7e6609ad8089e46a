#include "hvlab/lhv.hpp"

#include "hvlab/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hvlab::lhv {

namespace {

double sign(double x) { return x >= 0.0 ? 1.0 : -1.0; }

class SignModel final : public LhvModel {
  public:
    const char* name() const override { return "sign"; }

    Hidden sample(rng::Stream& rng) const override {
        Hidden h{};
        rng.unit_sphere(h[0], h[1], h[2]);
        return h;
    }

    double response_a(const Direction& a, const Hidden& h) const override {
        return sign(a.x() * h[0] + a.y() * h[1] + a.z() * h[2]);
    }

    double response_b(const Direction& b, const Hidden& h) const override {
        return -sign(b.x() * h[0] + b.y() * h[1] + b.z() * h[2]);
    }

    std::optional<double> closed_form(const Direction& a,
                                      const Direction& b) const override {
        return -1.0 + 2.0 * a.angle_to(b) / M_PI;
    }
};

class MixtureModel final : public LhvModel {
  public:
    const char* name() const override { return "mixture"; }

    // h = (s, u1, u2): product-state label and the two response uniforms
    Hidden sample(rng::Stream& rng) const override {
        return {rng.bernoulli(0.5) ? 1.0 : -1.0, rng.uniform(), rng.uniform(), 0.0};
    }

    double response_a(const Direction& a, const Hidden& h) const override {
        const double p_plus = 0.5 * (1.0 + h[0] * a.z()); // particle 1 in |s>
        return h[1] < p_plus ? 1.0 : -1.0;
    }

    double response_b(const Direction& b, const Hidden& h) const override {
        const double p_plus = 0.5 * (1.0 - h[0] * b.z()); // particle 2 in |-s>
        return h[2] < p_plus ? 1.0 : -1.0;
    }

    std::optional<double> closed_form(const Direction& a,
                                      const Direction& b) const override {
        return -a.z() * b.z();
    }
};

[[noreturn]] void bound_violation(const char* which, double value, const Hidden& h) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "lhv response %s = %.6g out of [-1, 1] at lambda = (%.6g, %.6g, "
                  "%.6g, %.6g)",
                  which, value, h[0], h[1], h[2], h[3]);
    throw std::runtime_error(msg);
}

} // namespace

std::unique_ptr<LhvModel> builtin_sign_model() { return std::make_unique<SignModel>(); }

std::unique_ptr<LhvModel> builtin_mixture_model() {
    return std::make_unique<MixtureModel>();
}

std::vector<std::string> registered_models() { return {"sign", "mixture"}; }

std::unique_ptr<LhvModel> model_by_name(const std::string& name) {
    if (name == "sign") return builtin_sign_model();
    if (name == "mixture") return builtin_mixture_model();
    throw std::invalid_argument("unknown lhv model: " + name);
}

Estimate estimate_correlation(const LhvModel& m, const Direction& a,
                              const Direction& b, std::uint64_t n, std::uint64_t seed,
                              int threads, std::uint64_t stream) {
    if (n < 2) throw std::invalid_argument("estimate_correlation: need n >= 2");

    struct Block {
        double sum = 0.0, sum_sq = 0.0;
    };
    const std::uint64_t n_blocks = (n + kTrialBlock - 1) / kTrialBlock;
    std::vector<Block> blocks(n_blocks);

    for_blocks(n, kTrialBlock, threads,
               [&](std::size_t bi, std::uint64_t lo, std::uint64_t hi) {
                   Block st;
                   for (std::uint64_t i = lo; i < hi; ++i) {
                       auto rng = rng::trial_stream(seed, stream, i);
                       const Hidden h = m.sample(rng);
                       const double va = m.response_a(a, h);
                       const double vb = m.response_b(b, h);
                       if (std::abs(va) > 1.0) bound_violation("A", va, h);
                       if (std::abs(vb) > 1.0) bound_violation("B", vb, h);
                       const double prod = va * vb;
                       st.sum += prod;
                       st.sum_sq += prod * prod;
                   }
                   blocks[bi] = st;
               });

    double sum = 0.0, sum_sq = 0.0;
    for (const auto& st : blocks) {
        sum += st.sum;
        sum_sq += st.sum_sq;
    }
    Estimate e;
    e.n = n;
    e.mean = sum / static_cast<double>(n);
    const double var =
        (sum_sq - sum * e.mean) / static_cast<double>(n - 1); // jackknife-equivalent
    e.stderr_est = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    return e;
}

Estimate chsh_of_model(const LhvModel& m, const MeterSettings& s, std::uint64_t n,
                       std::uint64_t seed, int threads) {
    const Estimate ab = estimate_correlation(m, s.a, s.b, n, seed, threads, 0);
    const Estimate ab2 = estimate_correlation(m, s.a, s.b_prime, n, seed, threads, 1);
    const Estimate a2b2 =
        estimate_correlation(m, s.a_prime, s.b_prime, n, seed, threads, 2);
    const Estimate a2b = estimate_correlation(m, s.a_prime, s.b, n, seed, threads, 3);
    Estimate e;
    e.n = n;
    e.mean = std::abs(ab.mean - ab2.mean) + std::abs(a2b2.mean + a2b.mean);
    e.stderr_est =
        ab.stderr_est + ab2.stderr_est + a2b2.stderr_est + a2b.stderr_est;
    return e;
}

} // namespace hvlab::lhv
