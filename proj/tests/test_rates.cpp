#include <doctest.h>

#include <cmath>
#include <random>

#include "vamopt/rates.hpp"
#include "vamopt/rng.hpp"

using namespace vamopt;

namespace {

// Counts samples until the covered distance reaches delta.
double oracle_lambda_position(double omega, double delta, double sigma) {
    long long k = 1;
    while (k * sigma / omega < delta * (1.0 - 1e-12)) ++k;
    return omega / k;
}

// Defective renewal process simulated directly: blocks of I
// samples, an orientation trigger ends the realization at its time, a block
// without triggers in its first I samples restarts the count, and a trigger
// exactly at sample I removes the realization's contribution.
double oracle_mean_gap(double omega, const std::vector<double>& p, int samples, std::uint64_t seed, int reps) {
    Rng rng(seed);
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
        long long elapsed = 0;
        for (;;) {
            bool done = false;
            bool restart = false;
            for (int k = 1; k <= samples; ++k) {
                const bool fire = rng.uniform() < p[static_cast<std::size_t>(k - 1)];
                if (k < samples && fire) {
                    total += (elapsed + k) / omega;
                    done = true;
                    break;
                }
                if (k == samples) {
                    if (fire) done = true; else restart = true;
                }
            }
            if (done) break;
            if (restart) elapsed += samples;
        }
    }
    return total / reps;
}

}  // namespace

TEST_CASE("position rate reference values") {
    CHECK(lambda_position(10.0, 4.0, 1.34) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(lambda_position(0.3, 4.0, 1.34) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(lambda_position(2.0, 2.0, 2.68) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("position rate against a counting oracle over random inputs") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> lw(-2.0, 1.5), ld(0.5, 10.0), ls(0.2, 3.0);
    for (int i = 0; i < 10000; ++i) {
        const double omega = std::pow(10.0, lw(gen)), delta = ld(gen), sigma = ls(gen);
        const double l = lambda_position(omega, delta, sigma);
        REQUIRE(l == doctest::Approx(oracle_lambda_position(omega, delta, sigma)).epsilon(1e-12));
        REQUIRE(l <= omega * (1 + 1e-12));
        REQUIRE(l <= sigma / delta * (1 + 1e-9));
        REQUIRE(l > omega / (omega * delta / sigma + 1.0) * (1 - 1e-12));
    }
}

TEST_CASE("position rate hits sigma/delta exactly at integer sample counts") {
    for (int k = 1; k <= 40; ++k) {
        const double omega = k * 1.34 / 4.0;
        CHECK(lambda_position(omega, 4.0, 1.34) == doctest::Approx(1.34 / 4.0).epsilon(1e-12));
    }
    CHECK(lambda_position(1e4, 4.0, 1.34) == doctest::Approx(1.34 / 4.0).epsilon(1e-4));
    CHECK_THROWS_AS(lambda_position(0.0, 4.0, 1.34), std::invalid_argument);
    CHECK_THROWS_AS(lambda_position(1.0, -1.0, 1.34), std::invalid_argument);
}

TEST_CASE("speed rate with a zero threshold fires on the first sample") {
    SpeedRateOptions o;
    o.delta_sigma = 0.0;
    o.realizations = 200;
    for (double omega : {0.1, 1.0, 10.0}) CHECK(lambda_speed(omega, 0, GnmParams{}, o).rate == doctest::Approx(omega));
}

TEST_CASE("speed rate with a pinned direction norm matches the deterministic recursion") {
    const GnmParams p;
    SpeedRateOptions o;
    o.fixed_direction_norm = 1.0;
    o.w_initial = 0.0;
    o.realizations = 3;
    for (double omega : {0.5, 1.0, 2.0, 10.0}) {
        const double a = 1.0 - p.h / p.tau;
        const double steps = 1.0 / (omega * p.h);
        int i = 1;
        for (;; ++i) {
            const long long k = static_cast<long long>(std::floor(i * steps + 1e-9));
            const double w = p.v_desired * (1.0 - std::pow(a, static_cast<double>(k)));
            if (w >= 0.5) break;
        }
        CHECK(lambda_speed(omega, 0, p, o).rate == doctest::Approx(omega / i));
    }
    o.w_initial = p.v_desired;
    const SpeedRate still = lambda_speed(1.0, 0, p, o);
    CHECK(still.rate == 0.0);
    CHECK(still.horizon_exhausted);
}

TEST_CASE("speed curve is consistent with single evaluations and independent of jobs") {
    SpeedRateOptions o;
    o.realizations = 600;
    o.seed = 17;
    const auto curve = lambda_speed_curve(1.0, 8, GnmParams{}, o);
    CHECK(lambda_speed(1.0, 5, GnmParams{}, o).rate == curve[5].rate);
    o.jobs = 3;
    const auto threaded = lambda_speed_curve(1.0, 8, GnmParams{}, o);
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(threaded[i].rate == curve[i].rate);
    CHECK(curve[0].rate > curve[8].rate);
    for (const auto& r : curve) {
        CHECK(r.rate >= 0.0);
        CHECK(r.rate <= 1.0);
    }
}

TEST_CASE("band count weight equals its factorized form") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> h(1e-4, 1.9), m(1e-4, 2.0);
    for (int i = 0; i < 300; ++i) {
        const double area = h(gen), mu = m(gen);
        const double literal = band_count_weight(area, 1.96, mu);
        const double closed = band_count_weight_closed_form(area, 1.96, mu);
        CHECK(literal == doctest::Approx(closed).epsilon(1e-8));
    }
    CHECK(band_count_weight(0.3, 1.96, 0.0) == 0.0);
    CHECK(band_count_weight(0.0, 1.96, 0.5) == 0.0);
}

TEST_CASE("band partition covers the kernel range geometrically") {
    const GnmParams p;
    const auto bands = band_partition(p, 20);
    REQUIRE(bands.size() == 20);
    CHECK(bands.front().level == doctest::Approx(1e-3 * kernel_maximum(p)));
    CHECK(bands.back().level + bands.back().width == doctest::Approx(kernel_maximum(p)));
    for (std::size_t i = 1; i < bands.size(); ++i)
        CHECK(bands[i].level == doctest::Approx(bands[i - 1].level + bands[i - 1].width));
}

TEST_CASE("band area against a Cartesian cell count") {
    const GnmParams p;
    const auto bands = band_partition(p, 20);
    for (std::size_t j : {2u, 10u, 17u}) {
        for (double d : {0.05, 0.3, 5.0}) {
            const double lo = bands[j].level, hi = lo + bands[j].width;
            const double step = 1.5e-3;
            double area = 0.0;
            for (double x = -0.7 + step / 2; x < 0.7; x += step) {
                for (double y = -0.7 + step / 2; y < 0.7; y += step) {
                    if (y > d) continue;
                    const double k = influence_kernel(std::hypot(x, y), std::atan2(y, x), p);
                    if (k >= lo && k < hi) area += step * step;
                }
            }
            CHECK(band_area(bands[j], d, p) == doctest::Approx(area).epsilon(0.02));
        }
    }
}

TEST_CASE("band area grows with the wall distance and the influence is linear in k") {
    const GnmParams p;
    const auto bands = band_partition(p, 20);
    double prev = 0.0;
    for (double d = 0.02; d < 1.0; d += 0.05) {
        const double a = band_area(bands[5], d, p);
        CHECK(a >= prev - 1e-15);
        prev = a;
    }
    const Vec2 one = band_influence_k(bands[5], 1, 0.3, p);
    const Vec2 three = band_influence_k(bands[5], 3, 0.3, p);
    CHECK(three.x == doctest::Approx(3 * one.x));
    CHECK(three.y == doctest::Approx(3 * one.y));
    CHECK(band_influence_k(bands[5], 0, 0.3, p).norm() == 0.0);
    CHECK(one.x > 0.0);
}

TEST_CASE("precomputed band tables agree with the direct quadrature") {
    const GnmParams p;
    const BandModel model(p);
    for (std::size_t j : {0u, 7u, 19u}) {
        CHECK(model.area(j, 0.4) == doctest::Approx(band_area(model.bands()[j], 0.4, p)).epsilon(1e-12));
        const Vec2 a = model.influence_k(j, 2, 0.4), b = band_influence_k(model.bands()[j], 2, 0.4, p);
        CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
        CHECK(a.y == doctest::Approx(b.y).epsilon(1e-12));
    }
}

TEST_CASE("doubling the quadrature resolution changes the results by under half a percent") {
    const GnmParams p;
    const auto bands = band_partition(p, 20);
    for (std::size_t j : {3u, 12u}) {
        const double a1 = band_area(bands[j], 0.3, p, 2048), a2 = band_area(bands[j], 0.3, p, 4096);
        CHECK(std::abs(a1 - a2) <= 5e-3 * a2);
        const Vec2 v1 = band_influence_k(bands[j], 1, 0.3, p, 2048), v2 = band_influence_k(bands[j], 1, 0.3, p, 4096);
        CHECK((v1 - v2).norm() <= 5e-3 * v2.norm());
    }
    OrientationModel m;
    const VamThresholds th;
    const double p1 = orientation_trigger_prob(1, 10.0, m, th, p);
    m.angular_points = 4096;
    m.d_grid = 256;
    const double p2 = orientation_trigger_prob(1, 10.0, m, th, p);
    CHECK(std::abs(p1 - p2) <= 5e-3 * p2);
}

TEST_CASE("expected orientation change") {
    const GnmParams p;
    const BandModel bands(p);
    CHECK(expected_orientation_change(1, 2.0, 0.002, p, bands) < 1e-3);
    const double near = expected_orientation_change(1, 0.21, 0.002, p, bands);
    CHECK(near == doctest::Approx(45.0).epsilon(0.02));
    CHECK(near < 90.0);
    CHECK(expected_orientation_change(3, 0.21, 0.002, p, bands) == near);
    CHECK_THROWS_AS(expected_orientation_change(0, 0.5, 0.002, p, bands), std::invalid_argument);
}

TEST_CASE("orientation trigger probability") {
    const GnmParams p;
    const VamThresholds th;
    OrientationModel m;
    const double base = orientation_trigger_prob(1, 10.0, m, th, p);
    CHECK(base > 0.0);
    CHECK(base < 1.0);
    VamThresholds wide = th;
    wide.delta_orientation_deg = 8.0;
    CHECK(orientation_trigger_prob(1, 10.0, m, wide, p) <= base);
    wide.delta_orientation_deg = 60.0;
    CHECK(orientation_trigger_prob(1, 10.0, m, wide, p) == 0.0);
    CHECK_THROWS_AS(orientation_trigger_prob(31, 10.0, m, th, p), std::invalid_argument);
    CHECK_NOTHROW(orientation_trigger_prob(30, 10.0, m, th, p));
}

TEST_CASE("orientation rate vanishes when one sample already triggers a position VAM") {
    const std::vector<double> probs{0.5};
    CHECK(lambda_orientation_from_probs(0.1, 4.0, 1.34, probs) == 0.0);
    const std::vector<double> zero(30, 0.0);
    CHECK(lambda_orientation_from_probs(10.0, 4.0, 1.34, zero) == 0.0);
}

TEST_CASE("orientation rate against a direct simulation of the renewal process") {
    struct Case {
        double omega;
        std::vector<double> p;
    };
    std::vector<Case> cases;
    cases.push_back({10.0, std::vector<double>(30, 0.02)});
    cases.push_back({2.0, std::vector<double>(6, 0.3)});
    std::vector<double> ramp;
    for (int k = 1; k <= 15; ++k) ramp.push_back(0.01 * k);
    cases.push_back({5.0, ramp});
    for (const auto& c : cases) {
        const int samples = static_cast<int>(robust_ceil(4.0 * c.omega / 1.34));
        REQUIRE(static_cast<int>(c.p.size()) == samples);
        const double analytic = lambda_orientation_from_probs(c.omega, 4.0, 1.34, c.p);
        const double mc = 1.0 / oracle_mean_gap(c.omega, c.p, samples, 99, 400000);
        CHECK(analytic == doctest::Approx(mc).epsilon(0.02));
    }
}

TEST_CASE("analytic rate curve") {
    Config c;
    c.scenario.omega_grid = {0.1, 1.0, 10.0};
    c.scenario.speed_realizations = 500;
    const RateCurve curve = analytic_rate_curve(c);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.mu == doctest::Approx(0.002));
    for (const auto& pt : curve.points) {
        CHECK(pt.lambda_total == doctest::Approx(pt.lambda_position + pt.lambda_speed + pt.lambda_orientation));
        CHECK(pt.lambda_speed <= pt.omega / (c.scenario.warmup * pt.omega + 1.0) + 1e-12);
    }
    CHECK(curve.points[0].lambda_orientation == 0.0);
    CHECK(curve.points[2].lambda_position == doctest::Approx(1.0 / 3.0));
    CHECK(curve.points[2].lambda_total < 1.0);
}
