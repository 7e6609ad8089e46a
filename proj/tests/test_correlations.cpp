#include "hvlab/correlations.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace hvlab;
using namespace hvlab::correlations;

namespace {

std::mt19937_64 gen(11);

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

} // namespace

TEST_CASE("singlet correlation equals -cos(theta)") {
    const Direction a = Direction::z_axis();
    CHECK(singlet_correlation(a, Direction::polar(0.0)) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(singlet_correlation(a, Direction::polar(M_PI / 2.0))) < 1e-12);
    CHECK(singlet_correlation(a, Direction::polar(M_PI / 3.0)) ==
          doctest::Approx(-0.5).epsilon(1e-10));
    // closed-form oracle over random pairs, coplanar or not
    for (int t = 0; t < 100; ++t) {
        const Direction u = random_direction(), v = random_direction();
        CHECK(singlet_correlation(u, v) ==
              doctest::Approx(-std::cos(u.angle_to(v))).epsilon(1e-10));
    }
}

TEST_CASE("mixture correlation reproduces the four configuration entries") {
    const double theta = 0.8349;
    const MeterSettings s = bell_config(theta);
    CHECK(mixture_correlation(s.a, s.b) == doctest::Approx(-std::cos(theta)).epsilon(1e-10));
    CHECK(mixture_correlation(s.a_prime, s.b) ==
          doctest::Approx(-std::cos(theta) * std::cos(theta)).epsilon(1e-10));
    CHECK(mixture_correlation(s.a, s.b_prime) ==
          doctest::Approx(-std::cos(2.0 * theta)).epsilon(1e-10));
    CHECK(mixture_correlation(s.a_prime, s.b_prime) ==
          doctest::Approx(-std::cos(theta) * std::cos(2.0 * theta)).epsilon(1e-10));

    // a = z, b at polar angle: -cos(theta)
    CHECK(mixture_correlation(Direction::z_axis(), Direction::polar(0.31)) ==
          doctest::Approx(-std::cos(0.31)).epsilon(1e-12));
    // equatorial b kills the correlation for every a
    for (int t = 0; t < 20; ++t)
        CHECK(std::abs(mixture_correlation(random_direction(),
                                           Direction::polar(M_PI / 2.0))) < 1e-12);
}

TEST_CASE("bell_config realizes the pairwise angle constraints") {
    CHECK_THROWS_AS(bell_config(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(bell_config(2.0 * M_PI), std::invalid_argument);

    const MeterSettings s0 = bell_config(0.0);
    CHECK(s0.a.dot(Direction::z_axis()) == doctest::Approx(1.0));
    CHECK(s0.b_prime.dot(Direction::z_axis()) == doctest::Approx(1.0));

    const double theta = M_PI / 4.0;
    const MeterSettings s = bell_config(theta);
    CHECK(s.a.angle_to(s.b_prime) == doctest::Approx(2.0 * theta).epsilon(1e-12));
    CHECK(s.b.angle_to(s.a_prime) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.b.angle_to(s.b_prime) == doctest::Approx(theta).epsilon(1e-12));
    CHECK(s.a.angle_to(s.a_prime) == doctest::Approx(theta).epsilon(1e-12));
}

TEST_CASE("chsh: known values and the scan maximum") {
    const CorrelationModel singlet(ModelKind::Singlet);
    const CorrelationModel mixture(ModelKind::Mixture);

    CHECK(chsh(singlet, bell_config(M_PI / 4.0)) ==
          doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
    CHECK(chsh(singlet, bell_config(M_PI / 3.0)) == doctest::Approx(2.5).epsilon(1e-12));

    // scan oracle: closed-form maximum over a dense grid
    double best = 0.0, best_theta = 0.0;
    const int grid = 10000;
    for (int k = 0; k < grid; ++k) {
        const double theta = 2.0 * M_PI * k / grid;
        const double value = std::abs(std::cos(2 * theta) - std::cos(theta)) +
                             std::abs(std::cos(theta) + 1.0);
        if (value > best) {
            best = value;
            best_theta = theta;
        }
    }
    CHECK(best == doctest::Approx(2.5).epsilon(1e-7));
    CHECK(chsh(singlet, bell_config(best_theta)) == doctest::Approx(best).epsilon(1e-10));

    for (const double theta : {0.13, 0.77, 1.9, 3.2, 5.5})
        CHECK(chsh(mixture, bell_config(theta)) <= 2.0 + 1e-12);
}

TEST_CASE("tsirelson bound over unconstrained settings") {
    const CorrelationModel singlet(ModelKind::Singlet);
    for (int t = 0; t < 1000; ++t) {
        const MeterSettings s{random_direction(), random_direction(), random_direction(),
                              random_direction()};
        CHECK(chsh(singlet, s) <= 2.0 * std::sqrt(2.0) + 1e-9);
    }
}

TEST_CASE("mixture_lhs closed form and equality with chsh") {
    CHECK(mixture_lhs(0.0) == doctest::Approx(2.0));
    CHECK(mixture_lhs(M_PI / 2.0) == doctest::Approx(1.0));

    const CorrelationModel mixture(ModelKind::Mixture);
    for (int k = 0; k < 200; ++k) {
        const double theta = 2.0 * M_PI * k / 200;
        CHECK(mixture_lhs(theta) ==
              doctest::Approx(chsh(mixture, bell_config(theta))).epsilon(1e-10));
    }

    // dense grid: never exceeds 2; maximum attained at 0 and pi
    double best = 0.0, best_theta = -1.0;
    for (int k = 0; k < 10000; ++k) {
        const double theta = 2.0 * M_PI * k / 10000;
        const double v = mixture_lhs(theta);
        CHECK(v <= 2.0 + 1e-12);
        if (v > best) {
            best = v;
            best_theta = theta;
        }
    }
    CHECK(best == doctest::Approx(2.0).epsilon(1e-9));
    const bool at_zero_or_pi =
        std::abs(best_theta) < 1e-9 || std::abs(best_theta - M_PI) < 1e-3;
    CHECK(at_zero_or_pi);
}

TEST_CASE("interference terms: decomposition identity and special points") {
    // off-diagonal sigma_z elements vanish
    CHECK(std::abs(interference_terms(Direction::z_axis(), Direction::z_axis())) < 1e-14);
    CHECK(std::abs(interference_terms(Direction::z_axis(), Direction::polar(0.9))) < 1e-14);

    // both meters on the equator: mixture gives 0, singlet gives -1, so the
    // dropped cross terms carry the whole correlation
    CHECK(interference_terms(Direction::x_axis(), Direction::x_axis()) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(singlet_correlation(Direction::x_axis(), Direction::x_axis()) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(mixture_correlation(Direction::x_axis(), Direction::x_axis())) < 1e-12);

    // coplanar pattern: mixture - singlet = cos(t_ab) - cos(t_a)cos(t_b)
    const Direction a = Direction::polar(0.6), b = Direction::polar(1.7);
    CHECK(interference_terms(a, b) ==
          doctest::Approx(std::cos(a.angle_to(b)) - std::cos(0.6) * std::cos(1.7))
              .epsilon(1e-10));

    for (int t = 0; t < 100; ++t) {
        const Direction u = t % 2 ? random_direction() : Direction::polar(0.013 * t);
        const Direction v = t % 3 ? random_direction() : Direction::polar(0.029 * t);
        CHECK(singlet_correlation(u, v) ==
              doctest::Approx(mixture_correlation(u, v) - interference_terms(u, v))
                  .epsilon(1e-10));
    }
}

TEST_CASE("sample_trials: anticorrelated labels at aligned meters") {
    const Direction z = Direction::z_axis();
    const auto r = sample_trials(CorrelationModel(ModelKind::Mixture), z, z, 100000, 3);
    CHECK(std::abs(r.estimate - (-1.0)) <= 4.0 * std::max(r.stderr_est, 1e-12));
    // perfectly anticorrelated: every product is -1
    CHECK(r.estimate == doctest::Approx(-1.0));
    for (const auto& rec : r.records) {
        CHECK(rec.a_outcome * rec.b_outcome == -1);
        CHECK(rec.label != TrialLabel::NA);
    }
}

TEST_CASE("sample_trials: singlet and mixture convergence to closed forms") {
    const Direction a = Direction::z_axis();
    const Direction b = Direction::polar(M_PI / 3.0);
    const auto rs =
        sample_trials(CorrelationModel(ModelKind::Singlet), a, b, 200000, 5, 1, false);
    CHECK(std::abs(rs.estimate - (-0.5)) <= 4.0 * rs.stderr_est);

    const Direction a3 = Direction::polar(M_PI / 3.0);
    const auto rm =
        sample_trials(CorrelationModel(ModelKind::Mixture), a3, a3, 200000, 6, 1, false);
    CHECK(std::abs(rm.estimate - (-0.25)) <= 4.0 * rm.stderr_est);
}

TEST_CASE("sample_trials: seeded repetitions stay within 5 standard errors") {
    const Direction a = Direction::polar(0.4);
    const Direction b = Direction::polar(1.3);
    const double singlet_truth = -std::cos(a.angle_to(b));
    const double mixture_truth = -std::cos(0.4) * std::cos(1.3);

    for (const auto kind : {ModelKind::Singlet, ModelKind::Mixture}) {
        const double truth = kind == ModelKind::Singlet ? singlet_truth : mixture_truth;
        int ok = 0;
        const int reps = 200;
        for (int rep = 0; rep < reps; ++rep) {
            const auto r = sample_trials(CorrelationModel(kind), a, b, 20000,
                                         static_cast<std::uint64_t>(rep), 1, false);
            if (std::abs(r.estimate - truth) <= 5.0 * r.stderr_est) ++ok;
        }
        CHECK(ok >= 198); // >= 99%
    }
}

TEST_CASE("sample_trials: deterministic and worker-count independent") {
    const Direction a = Direction::polar(0.3);
    const Direction b = Direction::polar(2.1);
    const auto r1 = sample_trials(CorrelationModel(ModelKind::Singlet), a, b, 70000, 9, 1);
    const auto r2 = sample_trials(CorrelationModel(ModelKind::Singlet), a, b, 70000, 9, 4);
    CHECK(r1.estimate == r2.estimate); // bit-identical
    CHECK(r1.stderr_est == r2.stderr_est);
    REQUIRE(r1.records.size() == r2.records.size());
    for (std::size_t i = 0; i < r1.records.size(); i += 997) {
        CHECK(r1.records[i].a_outcome == r2.records[i].a_outcome);
        CHECK(r1.records[i].b_outcome == r2.records[i].b_outcome);
        CHECK(r1.records[i].label == r2.records[i].label);
    }
}

TEST_CASE("sample_trials rejects n = 0") {
    CHECK_THROWS_AS((void)sample_trials(CorrelationModel(ModelKind::Mixture),
                                        Direction::z_axis(), Direction::z_axis(), 0, 1),
                    std::invalid_argument);
}

TEST_CASE("trial csv format") {
    const auto r = sample_trials(CorrelationModel(ModelKind::Mixture),
                                 Direction::z_axis(), Direction::z_axis(), 3, 1);
    const std::string csv = trials_csv(r);
    CHECK(csv.rfind("trial,label,A,B\n", 0) == 0);
    CHECK(csv.find("NA") == std::string::npos); // mixture trials carry labels
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
