#include <doctest.h>

#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "vamopt/optimizer.hpp"

using namespace vamopt;

namespace {

ChannelParams scaled_channel(double factor) {
    ChannelParams c;
    c.slot_time *= factor;
    c.aifs_delta *= factor;
    c.frame_time *= factor;
    return c;
}

ChannelParams slow_channel() { return scaled_channel(100.0); }

RateCurve synthetic_curve(const std::vector<double>& omegas, const std::vector<double>& totals) {
    RateCurve rc;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        RatePoint p;
        p.omega = omegas[i];
        p.lambda_total = totals[i];
        rc.points.push_back(p);
    }
    return rc;
}

}  // namespace

TEST_CASE("pIPG with a contention-free channel") {
    const ChannelLoad load{16, 1, 0.0};
    CHECK(expected_pipg(load, 0.5, ChannelParams{}) == doctest::Approx(0.125));
    CHECK_THROWS_AS(expected_pipg(load, 0.0, ChannelParams{}), std::invalid_argument);
}

TEST_CASE("channel load from a population") {
    ScenarioConfig s;
    const ChannelLoad load = ChannelLoad::from({48, 24, 12}, s);
    CHECK(load.stations == 84);
    CHECK(load.background_rate == doctest::Approx(24 * 1.0 + 12 * 3.0));
    CHECK(load.aggregate_rate(2.0) == doctest::Approx(60.0 + 96.0));
}

TEST_CASE("log grid") {
    const auto g = log_grid(1e-3, 5.0, 1000);
    REQUIRE(g.size() == 1000);
    CHECK(g.front() == 1e-3);
    CHECK(g.back() == 5.0);
    for (std::size_t i = 2; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]));
}

TEST_CASE("Brent minimization") {
    const auto r = brent_minimize([](double x) { return (x - 2) * (x - 2); }, 0.0, 5.0);
    CHECK(r.converged);
    CHECK(std::abs(r.x - 2.0) < 1e-6);

    const auto f = [](double x) { return -x * std::exp(-x) + 0.1 * std::sin(3 * x); };
    const auto mine = brent_minimize(f, 0.0, 2.0, 1e-10);
    const auto ref = boost::math::tools::brent_find_minima(f, 0.0, 2.0, 40);
    CHECK(mine.x == doctest::Approx(ref.first).epsilon(1e-6));
    CHECK(mine.fx == doctest::Approx(ref.second).epsilon(1e-10));

    const auto mono = brent_minimize([](double x) { return -x; }, 1.0, 3.0);
    CHECK(mono.x == 3.0);
    const auto mono_lo = brent_minimize([](double x) { return x * x; }, 1.0, 3.0);
    CHECK(mono_lo.x == 1.0);

    const auto capped = brent_minimize([](double x) { return std::cos(x); }, 0.0, 6.0, 1e-12, 2);
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterations == 2);
    CHECK(capped.fx <= std::cos(0.0));
    CHECK_THROWS_AS(brent_minimize([](double x) { return x; }, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("pIPG curve agrees with pointwise evaluation") {
    const ChannelLoad load{16, 40, 24.0};
    const PipgCurve c = pipg_curve(load, ChannelParams{}, 1e-2, 50.0, 50);
    for (std::size_t i = 0; i < c.lambda.size(); i += 7)
        CHECK(c.pipg[i] == doctest::Approx(expected_pipg(load, c.lambda[i], ChannelParams{})));
}

TEST_CASE("interior maximum bracket") {
    const ChannelLoad load{16, 16, 0.0};
    const Bracket b = bracket_interior_max(load, slow_channel(), 1e-3, 5.0, 1000);
    REQUIRE(b.found);
    CHECK(b.left < b.peak);
    CHECK(b.peak < b.right);
    CHECK(b.left >= 1e-3);
    CHECK(b.right <= 5.0);
    const double peak = expected_pipg(load, b.peak, slow_channel());
    CHECK(peak > expected_pipg(load, b.left, slow_channel()));
    CHECK(peak > expected_pipg(load, b.right, slow_channel()));

    const Bracket none = bracket_interior_max(load, ChannelParams{}, 1e-3, 5.0, 1000);
    CHECK_FALSE(none.found);
    CHECK(none.left == 1e-3);
    CHECK(none.right == 5.0);
}

TEST_CASE("gradient check at a smooth minimum") {
    const ChannelLoad load{16, 16, 0.0};
    const auto ex = interior_extrema(load, ChannelParams{}, 1e-2, 1e2, 1000);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].kind == ExtremumKind::Minimum);
    CHECK(ex[0].check.relative_balance < 1e-3);
    CHECK(std::abs(ex[0].check.dpipg) < 1e-3 * ex[0].pipg / ex[0].lambda);

    const GradientCheck g = pipg_gradient_check(load, 10.0, ChannelParams{});
    const double predicted = -g.balance / (load.n_p * g.lambda * g.lambda * g.pdr * g.pdr);
    CHECK(g.dpipg == doctest::Approx(predicted).epsilon(1e-4));
    CHECK(g.dpipg < 0.0);
}

TEST_CASE("extrema alternate on the slow channel") {
    const auto ex = interior_extrema({16, 16, 0.0}, slow_channel(), 1e-3, 5.0, 1000);
    REQUIRE(ex.size() == 2);
    CHECK(ex[0].kind == ExtremumKind::Minimum);
    CHECK(ex[1].kind == ExtremumKind::Maximum);
    CHECK(ex[0].lambda < ex[1].lambda);
    CHECK(ex[0].check.relative_balance < 1e-3);
}

TEST_CASE("optimal sampling picks the grid rate nearest to the continuous optimum") {
    Config c;
    c.channel = scaled_channel(30.0);
    const std::vector<double> omegas{0.5, 1.0, 2.0, 5.0, 10.0};
    const RateCurve rc = synthetic_curve(omegas, {0.5, 1.4, 3.0, 4.5, 6.0});
    const OptimizationResult r = optimal_sampling({16, 0, 0}, rc, c);
    CHECK(r.lambda_min == doctest::Approx(3.26).epsilon(0.01));
    CHECK(r.local_minima == 1);
    CHECK(r.omega_star == 2.0);
    CHECK_FALSE(r.grid_polished);
    CHECK(r.pipg_at_10hz == doctest::Approx(expected_pipg({16, 16, 0.0}, 6.0, c.channel)));
    for (double v : r.grid_pipg) CHECK(r.pipg_at_star <= v);
}

TEST_CASE("optimal sampling on the physical channel uses the largest rate") {
    Config c;
    const RateCurve rc = synthetic_curve({0.1, 1.0, 10.0}, {0.1, 0.3, 0.6});
    const OptimizationResult r = optimal_sampling({16, 0, 0}, rc, c);
    CHECK(r.lambda_min == doctest::Approx(5.0));
    CHECK(r.omega_star == 10.0);
    CHECK(r.local_minima == 0);
    CHECK(r.pipg_at_star == r.pipg_at_10hz);
}

TEST_CASE("nearest-rate choice is replaced when another grid rate is strictly better") {
    Config c;
    c.channel = slow_channel();
    // The minimum over the bound interval sits at the upper end, so 4.5 is nearest,
    // but 1.0 lies in the interior valley and has the lower pIPG.
    const RateCurve rc = synthetic_curve({1.0, 2.0}, {1.0, 4.5});
    const OptimizationResult r = optimal_sampling({16, 0, 0}, rc, c);
    CHECK(r.lambda_min == doctest::Approx(5.0));
    REQUIRE(expected_pipg({16, 16, 0.0}, 1.0, c.channel) < expected_pipg({16, 16, 0.0}, 4.5, c.channel));
    CHECK(r.grid_polished);
    CHECK(r.omega_star == 1.0);
    CHECK(r.pipg_at_star == doctest::Approx(expected_pipg({16, 16, 0.0}, 1.0, c.channel)));
}
