#pragma once

#include "hvlab/spin_algebra.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hvlab::correlations {

using spin::Direction;

// The four meter orientations entering the CHSH functional.
struct MeterSettings {
    Direction a, a_prime, b, b_prime;
};

// Which per-trial state the pair carried before measurement.
// PM = |+>|->, MP = |->|+>, NA = entangled (no definite product label).
enum class TrialLabel : std::int8_t { PM, MP, NA };

const char* to_string(TrialLabel label);

struct TrialRecord {
    std::uint64_t trial;
    TrialLabel label;
    int a_outcome; // +1 or -1
    int b_outcome;
};

enum class ModelKind { Singlet, Mixture };

// Correlation map (a, b) -> [-1, 1] for either hypothesis about the
// post-dissociation pair.
class CorrelationModel {
  public:
    explicit CorrelationModel(ModelKind kind) : kind_(kind) {}
    ModelKind kind() const { return kind_; }
    double operator()(const Direction& a, const Direction& b) const;

  private:
    ModelKind kind_;
};

// <Psi_S| sigma_a x sigma_b |Psi_S> evaluated through the full 4x4
// expectation; equals -cos(angle between a and b).
double singlet_correlation(const Direction& a, const Direction& b);

// Equal-weight average of the product-state correlations of |+>|-> and
// |->|+>: (1/2)[<+|s_a|+><-|s_b|-> + <-|s_a|-><+|s_b|+>] = -a_z b_z.
double mixture_correlation(const Direction& a, const Direction& b);

// Cross terms (1/2)[<+|s_a|-><-|s_b|+> + <-|s_a|+><+|s_b|->] dropped by the
// one-system-at-a-time hypothesis. The decomposition identity is
// singlet_correlation = mixture_correlation - interference_terms.
double interference_terms(const Direction& a, const Direction& b);

// |P(a,b) - P(a,b')| + |P(a',b') + P(a',b)|
double chsh(const CorrelationModel& p, const MeterSettings& s);

// Coplanar arrangement in the xz-plane with angle(a,b') = 2 theta,
// angle(b,a') = 0 and angle(b,b') = angle(a,a') = theta: polar angles
// (0, theta, theta, 2 theta). Requires theta in [0, 2 pi).
MeterSettings bell_config(double theta);

// |cos 2t - cos t| + |cos t| |cos 2t + cos t|: the CHSH left side of the
// mixture hypothesis on the bell_config family. Never exceeds 2.
double mixture_lhs(double theta);

struct SampleResult {
    std::vector<TrialRecord> records; // empty when record keeping is off
    double estimate = 0.0;            // mean of A*B
    double stderr_est = 0.0;          // sample standard error of the mean
    std::uint64_t n = 0;
    ModelKind model = ModelKind::Singlet;
    Direction a = Direction::z_axis(); // settings shared by every record
    Direction b = Direction::z_axis();
};

// Per-trial Monte Carlo measurement of n pairs. Singlet trials draw joint
// outcomes from the Born distribution of sigma_a x sigma_b on the singlet;
// Mixture trials first pick one of the two product states with probability
// one half, then draw each side from its own marginal. Deterministic per
// (seed, n) and independent of the worker count.
SampleResult sample_trials(const CorrelationModel& model, const Direction& a,
                           const Direction& b, std::uint64_t n, std::uint64_t seed,
                           int threads = 1, bool keep_records = true);

// CSV rows "trial,label,A,B" with header, 17 significant digits where
// applicable, LF line endings.
std::string trials_csv(const SampleResult& r);

} // namespace hvlab::correlations
