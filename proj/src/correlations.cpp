#include "hvlab/correlations.hpp"

#include "hvlab/parallel.hpp"
#include "hvlab/rng.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hvlab::correlations {

using spin::Spinor2;

const char* to_string(TrialLabel label) {
    switch (label) {
        case TrialLabel::PM: return "PM";
        case TrialLabel::MP: return "MP";
        default: return "NA";
    }
}

double CorrelationModel::operator()(const Direction& a, const Direction& b) const {
    const double v = kind_ == ModelKind::Singlet ? singlet_correlation(a, b)
                                                 : mixture_correlation(a, b);
    if (std::abs(v) > 1.0 + 1e-12)
        throw std::runtime_error("correlation out of [-1, 1]");
    return v;
}

double singlet_correlation(const Direction& a, const Direction& b) {
    return spin::expectation(spin::singlet(),
                             spin::tensor(spin::spin_along(a), spin::spin_along(b)));
}

double mixture_correlation(const Direction& a, const Direction& b) {
    const Matrix sa = spin::spin_along(a);
    const Matrix sb = spin::spin_along(b);
    const Spinor2 up = Spinor2::plus(), dn = Spinor2::minus();
    return 0.5 * (spin::expectation(up, sa) * spin::expectation(dn, sb) +
                  spin::expectation(dn, sa) * spin::expectation(up, sb));
}

double interference_terms(const Direction& a, const Direction& b) {
    const Matrix sa = spin::spin_along(a);
    const Matrix sb = spin::spin_along(b);
    const Spinor2 up = Spinor2::plus(), dn = Spinor2::minus();
    const cplx cross = spin::matrix_element(up, sa, dn) * spin::matrix_element(dn, sb, up) +
                       spin::matrix_element(dn, sa, up) * spin::matrix_element(up, sb, dn);
    // the two terms are conjugates, so the sum is real
    return 0.5 * cross.real();
}

double chsh(const CorrelationModel& p, const MeterSettings& s) {
    return std::abs(p(s.a, s.b) - p(s.a, s.b_prime)) +
           std::abs(p(s.a_prime, s.b_prime) + p(s.a_prime, s.b));
}

MeterSettings bell_config(double theta) {
    if (theta < 0.0 || theta >= 2.0 * M_PI)
        throw std::invalid_argument("bell_config: theta must lie in [0, 2 pi)");
    return {Direction::polar(0.0), Direction::polar(theta), Direction::polar(theta),
            Direction::polar(2.0 * theta)};
}

double mixture_lhs(double theta) {
    const double c1 = std::cos(theta);
    const double c2 = std::cos(2.0 * theta);
    return std::abs(c2 - c1) + std::abs(c1) * std::abs(c2 + c1);
}

namespace {

struct BlockStat {
    double sum = 0.0;
    std::uint64_t n = 0;
};

// Joint Born probabilities for outcomes (+1,+1), (+1,-1), (-1,+1), (-1,-1)
// of sigma_a, sigma_b on the singlet.
std::array<double, 4> singlet_joint(const Direction& a, const Direction& b) {
    const auto psi = spin::singlet();
    std::array<double, 4> p{};
    double total = 0.0;
    int k = 0;
    for (int sa : {+1, -1})
        for (int sb : {+1, -1}) {
            const Matrix pr =
                spin::tensor(spin::spin_projector(a, sa), spin::spin_projector(b, sb));
            p[k] = std::max(0.0, spin::expectation(psi, pr));
            total += p[k];
            ++k;
        }
    for (auto& x : p) x /= total;
    return p;
}

} // namespace

SampleResult sample_trials(const CorrelationModel& model, const Direction& a,
                           const Direction& b, std::uint64_t n, std::uint64_t seed,
                           int threads, bool keep_records) {
    if (n < 1) throw std::invalid_argument("sample_trials: need at least one trial");

    const bool is_singlet = model.kind() == ModelKind::Singlet;
    const auto joint = is_singlet ? singlet_joint(a, b) : std::array<double, 4>{};
    // marginal +1 probabilities of sigma_n on |+> and |->
    const double pa_plus = 0.5 * (1.0 + a.z());
    const double pb_plus = 0.5 * (1.0 + b.z());

    SampleResult out;
    out.n = n;
    out.model = model.kind();
    out.a = a;
    out.b = b;
    if (keep_records) out.records.resize(n);

    const std::uint64_t n_blocks = (n + kTrialBlock - 1) / kTrialBlock;
    std::vector<BlockStat> blocks(n_blocks);
    auto* records = keep_records ? out.records.data() : nullptr;

    for_blocks(n, kTrialBlock, threads,
               [&](std::size_t bi, std::uint64_t lo, std::uint64_t hi) {
                   BlockStat st;
                   for (std::uint64_t i = lo; i < hi; ++i) {
                       auto rng = rng::trial_stream(seed, 0, i);
                       TrialRecord rec{i, TrialLabel::NA, +1, +1};
                       if (is_singlet) {
                           const double u = rng.uniform();
                           if (u < joint[0]) {
                               rec.a_outcome = +1, rec.b_outcome = +1;
                           } else if (u < joint[0] + joint[1]) {
                               rec.a_outcome = +1, rec.b_outcome = -1;
                           } else if (u < joint[0] + joint[1] + joint[2]) {
                               rec.a_outcome = -1, rec.b_outcome = +1;
                           } else {
                               rec.a_outcome = -1, rec.b_outcome = -1;
                           }
                       } else {
                           const bool pm = rng.bernoulli(0.5);
                           rec.label = pm ? TrialLabel::PM : TrialLabel::MP;
                           // particle 1 carries |+> for PM, |-> for MP
                           const double p1 = pm ? pa_plus : 1.0 - pa_plus;
                           const double p2 = pm ? 1.0 - pb_plus : pb_plus;
                           rec.a_outcome = rng.bernoulli(p1) ? +1 : -1;
                           rec.b_outcome = rng.bernoulli(p2) ? +1 : -1;
                       }
                       st.sum += rec.a_outcome * rec.b_outcome;
                       ++st.n;
                       if (records) records[i] = rec;
                   }
                   blocks[bi] = st;
               });

    double sum = 0.0;
    for (const auto& st : blocks) sum += st.sum;
    out.estimate = sum / static_cast<double>(n);
    if (n > 1) {
        // products are +-1, so sum of squares is n
        const double var =
            (static_cast<double>(n) - sum * out.estimate) / static_cast<double>(n - 1);
        out.stderr_est = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
    }
    return out;
}

std::string trials_csv(const SampleResult& r) {
    std::string s = "trial,label,A,B\n";
    char line[64];
    for (const auto& rec : r.records) {
        std::snprintf(line, sizeof line, "%llu,%s,%d,%d\n",
                      static_cast<unsigned long long>(rec.trial), to_string(rec.label),
                      rec.a_outcome, rec.b_outcome);
        s += line;
    }
    return s;
}

} // namespace hvlab::correlations
