#include <doctest.h>

#include <cmath>
#include <map>

#include "vamopt/simulator.hpp"

using namespace vamopt;

namespace {

Observation obs(double x, double y, double speed, double heading_deg, double t) {
    return {{x, y}, speed, heading_deg * kPi / 180.0, t};
}

}  // namespace

TEST_CASE("trigger classification and priority") {
    const VamThresholds th;
    const Observation last = obs(0, 0, 1.34, 0, 0);
    CHECK(vam_trigger_check(obs(0, 0, 1.34, 0, 5.0), last, th) == TriggerClass::Timer);
    CHECK(vam_trigger_check(obs(0, 0, 1.34, 0, 4.9), last, th) == TriggerClass::None);
    CHECK(vam_trigger_check(obs(4.01, 0, 1.34, 0, 1.0), last, th) == TriggerClass::Position);
    CHECK(vam_trigger_check(obs(4.01, 0, 1.34, 5, 1.0), last, th) == TriggerClass::Position);
    CHECK(vam_trigger_check(obs(4.01, 0, 0.5, 5, 6.0), last, th) == TriggerClass::Position);
    CHECK(vam_trigger_check(obs(4.0, 0, 1.34, 0, 1.0), last, th) == TriggerClass::None);
    CHECK(vam_trigger_check(obs(1, 0, 0.7, 5, 1.0), last, th) == TriggerClass::Speed);
    CHECK(vam_trigger_check(obs(1, 0, 1.0, 5, 1.0), last, th) == TriggerClass::Orientation);
    CHECK(vam_trigger_check(obs(1, 0, 1.0, -5, 6.0), last, th) == TriggerClass::Orientation);
    CHECK(vam_trigger_check(obs(1, 0, 1.0, 359, 1.0), obs(0, 0, 1.0, 1, 0), th) == TriggerClass::None);
}

TEST_CASE("street initialization") {
    Config c;
    const Simulation sim = init_street(c, 10.0, 3);
    REQUIRE(sim.pedestrians.size() == 16);
    std::map<std::pair<int, int>, int> groups;
    for (const auto& p : sim.pedestrians) {
        ++groups[{p.sidewalk, p.direction}];
        const double y0 = sim.geometry.sidewalk_base(p.sidewalk);
        CHECK(p.state.position.y >= y0 + 0.2);
        CHECK(p.state.position.y <= y0 + 1.8);
        CHECK(p.state.position.x >= 0.0);
        CHECK(p.state.position.x < 2000.0);
        CHECK(p.state.w == 1.34);
        CHECK(p.state.n_t.x == p.direction);
        CHECK(p.next_sample < 0.1);
    }
    CHECK(groups.size() == 4);
    for (const auto& [k, n] : groups) CHECK(n == 4);
}

TEST_CASE("a lone pedestrian reproduces the position rate exactly") {
    Config c;
    c.scenario.n_p = 1;
    c.scenario.warmup = 10.0;
    c.scenario.duration = 120.0;
    for (double omega : {0.1, 1.0, 10.0}) {
        Simulation sim = init_street(c, omega, 5);
        sim.pedestrians[0].state.position.y = 1.0;
        std::vector<VamEvent> log;
        sim.event_log = &log;
        while (sim.time < sim.measure_end) step(sim);
        CHECK(sim.counts[static_cast<std::size_t>(TriggerClass::Orientation)] == 0);
        CHECK(sim.counts[static_cast<std::size_t>(TriggerClass::Speed)] == 0);
        const double rate = sim.counts[static_cast<std::size_t>(TriggerClass::Position)] / c.scenario.duration;
        CHECK(rate == doctest::Approx(lambda_position(omega, 4.0, 1.34)).epsilon(0.02));
    }
}

TEST_CASE("inter-VAM gaps respect the generation interval bounds") {
    Config c;
    c.scenario.warmup = 5.0;
    c.scenario.duration = 60.0;
    for (double omega : {0.5, 3.0, 10.0}) {
        std::vector<VamEvent> log;
        run_simulation(c, omega, 9, &log);
        std::map<int, double> last;
        int gaps = 0;
        for (const auto& e : log) {
            auto it = last.find(e.pedestrian);
            if (it != last.end()) {
                const double gap = e.time - it->second;
                CHECK(gap >= c.thresholds.t_gen_min - c.gnm.h);
                CHECK(gap <= c.thresholds.t_gen_max + 1.0 / omega + 1e-9);
                ++gaps;
            }
            last[e.pedestrian] = e.time;
        }
        CHECK(gaps > 0);
    }
}

TEST_CASE("neighbours interact across the periodic boundary") {
    Config c;
    c.scenario.n_p = 2;
    auto run_pair = [&](double xa, double xb) {
        Simulation sim = init_street(c, 1.0, 1);
        auto& a = sim.pedestrians[0];
        auto& b = sim.pedestrians[1];
        b.sidewalk = 0;
        a.state.position = {xa, 1.0};
        b.state.position = {xb, 1.05};
        a.direction = 1;
        a.state.n_t = {1.0, 0.0};
        a.state.heading = 0.0;
        b.direction = -1;
        b.state.n_t = {-1.0, 0.0};
        b.state.heading = kPi;
        for (int i = 0; i < 10; ++i) step(sim);
        return std::make_pair(sim.pedestrians[0].state, sim.pedestrians[1].state);
    };
    const auto wrapped = run_pair(1999.7, 0.1);
    const auto inside = run_pair(999.7, 1000.1);
    CHECK(wrapped.first.position.y == doctest::Approx(inside.first.position.y).epsilon(1e-9));
    CHECK(wrapped.second.position.y == doctest::Approx(inside.second.position.y).epsilon(1e-9));
    CHECK(std::abs(inside.first.position.y - 1.0) > 1e-3);
}

TEST_CASE("simulation is deterministic for a fixed seed") {
    Config c;
    c.scenario.warmup = 5.0;
    c.scenario.duration = 30.0;
    const EmpiricalRates a = run_simulation(c, 2.0, 77);
    const EmpiricalRates b = run_simulation(c, 2.0, 77);
    CHECK(a.counts == b.counts);
}

TEST_CASE("percentiles use linear interpolation") {
    CHECK(percentile({4, 1, 3, 2}, 50) == doctest::Approx(2.5));
    CHECK(percentile({4, 1, 3, 2}, 25) == doctest::Approx(1.75));
    CHECK(percentile({4, 1, 3, 2}, 100) == 4.0);
    CHECK(percentile({7}, 30) == 7.0);
    CHECK_THROWS(percentile({}, 50));
}

TEST_CASE("short validation run produces one row per rate") {
    Config c;
    c.scenario.omega_grid = {0.5, 5.0};
    c.scenario.warmup = 10.0;
    c.scenario.duration = 40.0;
    c.scenario.repetitions = 2;
    c.scenario.speed_realizations = 300;
    const ValidationReport r = validate_rates(c, 2);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.position.errors.size() == 2);
    CHECK(r.rows[1].analytic[0] == doctest::Approx(lambda_position(5.0, 4.0, 1.34)));
    CHECK(r.position.p100 < 0.05);
}
