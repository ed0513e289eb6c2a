#include "vamopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "vamopt/parallel.hpp"
#include "vamopt/rng.hpp"

namespace vamopt {

const char* to_string(TriggerClass c) {
    switch (c) {
        case TriggerClass::None: return "none";
        case TriggerClass::Position: return "position";
        case TriggerClass::Speed: return "speed";
        case TriggerClass::Orientation: return "orientation";
        case TriggerClass::Timer: return "timer";
    }
    return "unknown";
}

TriggerClass vam_trigger_check(const Observation& now, const Observation& last, const VamThresholds& th) {
    if ((now.position - last.position).norm() > th.delta_position) return TriggerClass::Position;
    if (std::abs(now.speed - last.speed) > th.delta_speed) return TriggerClass::Speed;
    const double turn = std::abs(wrap_angle(now.heading - last.heading)) * 180.0 / kPi;
    if (turn > th.delta_orientation_deg) return TriggerClass::Orientation;
    if (now.time - last.time >= th.t_gen_max - 1e-9) return TriggerClass::Timer;
    return TriggerClass::None;
}

Simulation init_street(const Config& config, double omega, std::uint64_t seed) {
    if (!(omega > 0.0)) throw std::invalid_argument("simulation requires omega > 0");
    const auto& s = config.scenario;
    Simulation sim;
    sim.geometry = {s.street_length, s.sidewalk_width, s.road_width};
    sim.gnm = config.gnm;
    sim.thresholds = config.thresholds;
    sim.omega = omega;
    sim.measure_start = s.warmup;
    sim.measure_end = s.warmup + s.duration;

    Rng rng(seed);
    const double margin = std::min(0.2, 0.1 * s.sidewalk_width);
    for (int i = 0; i < s.n_p; ++i) {
        SimPedestrian p;
        p.sidewalk = i % 2;
        p.direction = (i / 2) % 2 == 0 ? 1 : -1;
        const double y0 = sim.geometry.sidewalk_base(p.sidewalk);
        p.state.position = {rng.uniform(0.0, s.street_length),
                            y0 + rng.uniform(margin, s.sidewalk_width - margin)};
        p.state.w = config.gnm.v_desired;
        p.state.n_t = {static_cast<double>(p.direction), 0.0};
        p.state.heading = p.direction > 0 ? 0.0 : kPi;
        p.next_sample = rng.uniform(0.0, 1.0 / omega);
        sim.pedestrians.push_back(p);
    }
    return sim;
}

namespace {

double wrap_x(double x, double length) {
    double r = std::fmod(x, length);
    if (r < 0.0) r += length;
    return r;
}

void emit(Simulation& sim, int index, TriggerClass c, double t) {
    if (t >= sim.measure_start && t < sim.measure_end) ++sim.counts[static_cast<std::size_t>(c)];
    if (sim.event_log) sim.event_log->push_back({t, index, c});
}

void process_sample(Simulation& sim, int index, const Observation& obs) {
    SimPedestrian& p = sim.pedestrians[static_cast<std::size_t>(index)];
    if (!p.has_vam) {
        p.has_vam = true;
        p.last_vam = obs;
        emit(sim, index, TriggerClass::None, obs.time);
        return;
    }
    if (obs.time - p.last_vam.time < sim.thresholds.t_gen_min - 1e-9) return;
    const TriggerClass c = vam_trigger_check(obs, p.last_vam, sim.thresholds);
    if (c == TriggerClass::None) return;
    p.last_vam = obs;
    emit(sim, index, c, obs.time);
}

}  // namespace

void step(Simulation& sim) {
    const double h = sim.gnm.h;
    const double length = sim.geometry.length;
    const double cell = sim.gnm.r_h;
    const int n_cells = std::max(1, static_cast<int>(std::floor(length / cell)));
    const double cell_width = length / n_cells;
    const std::size_t n = sim.pedestrians.size();

    std::vector<std::vector<std::vector<int>>> grid(2, std::vector<std::vector<int>>(static_cast<std::size_t>(n_cells)));
    std::vector<int> cell_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = sim.pedestrians[i];
        int c = static_cast<int>(wrap_x(p.state.position.x, length) / cell_width);
        c = std::clamp(c, 0, n_cells - 1);
        cell_of[i] = c;
        grid[static_cast<std::size_t>(p.sidewalk)][static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
    }

    std::vector<PedestrianState> next(n);
    std::vector<Vec2> offsets;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = sim.pedestrians[i];
        offsets.clear();
        const auto& side = grid[static_cast<std::size_t>(p.sidewalk)];
        const int span = n_cells >= 3 ? 1 : 0;
        for (int dc = -span; dc <= span; ++dc) {
            const int c = ((cell_of[i] + dc) % n_cells + n_cells) % n_cells;
            for (int j : side[static_cast<std::size_t>(c)]) {
                if (static_cast<std::size_t>(j) == i) continue;
                const auto& q = sim.pedestrians[static_cast<std::size_t>(j)].state.position;
                double dx = wrap_x(q.x - p.state.position.x, length);
                if (dx > 0.5 * length) dx -= length;
                const Vec2 off{dx, q.y - p.state.position.y};
                if (off.norm() < sim.gnm.r_h) offsets.push_back(off);
            }
        }
        const double y0 = sim.geometry.sidewalk_base(p.sidewalk);
        const double top = y0 + sim.geometry.sidewalk_width;
        const std::array<WallContact, 2> walls{
            WallContact{std::max(p.state.position.y - y0, 1e-6), {0.0, -1.0}},
            WallContact{std::max(top - p.state.position.y, 1e-6), {0.0, 1.0}}};
        next[i] = euler_step(p.state, offsets, walls, h, sim.gnm);
        next[i].position.y = std::clamp(next[i].position.y, y0 + 1e-4, top - 1e-4);
    }

    const double t0 = sim.time;
    const double t1 = t0 + h;
    const double period = 1.0 / sim.omega;
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = sim.pedestrians[i];
        const PedestrianState& before = p.state;
        const PedestrianState& after = next[i];
        while (p.next_sample <= t1 + 1e-12) {
            const double frac = std::clamp((p.next_sample - t0) / h, 0.0, 1.0);
            Observation obs;
            obs.time = p.next_sample;
            obs.position = before.position + (after.position - before.position) * frac;
            obs.speed = before.w * after.direction_norm;
            const Vec2 disp = obs.position - p.previous_sample;
            if (p.has_previous_sample && disp.norm() > 1e-12) {
                obs.heading = std::atan2(disp.y, disp.x);
            } else {
                obs.heading = after.heading;
            }
            p.previous_sample = obs.position;
            p.has_previous_sample = true;
            process_sample(sim, static_cast<int>(i), obs);
            p.next_sample += period;
        }
        p.state = after;
    }
    sim.time = t1;
}

EmpiricalRates run_simulation(const Config& config, double omega, std::uint64_t seed,
                              std::vector<VamEvent>* event_log) {
    Simulation sim = init_street(config, omega, seed);
    sim.event_log = event_log;
    const long long steps = static_cast<long long>(std::ceil(sim.measure_end / config.gnm.h - 1e-9));
    for (long long k = 0; k < steps; ++k) step(sim);

    EmpiricalRates r;
    r.omega = omega;
    r.counts = sim.counts;
    const double exposure = config.scenario.n_p * config.scenario.duration;
    r.position = sim.counts[1] / exposure;
    r.speed = sim.counts[2] / exposure;
    r.orientation = sim.counts[3] / exposure;
    r.timer = sim.counts[4] / exposure;
    return r;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

namespace {

ClassErrors summarize(std::vector<double> errors) {
    ClassErrors c;
    c.errors = std::move(errors);
    c.p25 = percentile(c.errors, 25);
    c.p50 = percentile(c.errors, 50);
    c.p75 = percentile(c.errors, 75);
    c.p100 = percentile(c.errors, 100);
    return c;
}

std::uint64_t omega_tag(double omega) {
    std::uint64_t bits;
    std::memcpy(&bits, &omega, sizeof bits);
    return bits;
}

}  // namespace

ValidationReport validate_rates(const Config& config, int jobs) {
    const auto& s = config.scenario;
    const RateCurve analytic = analytic_rate_curve(config, jobs);
    const std::size_t n_omega = s.omega_grid.size();
    const std::size_t reps = static_cast<std::size_t>(s.repetitions);

    std::vector<EmpiricalRates> runs(n_omega * reps);
    parallel_for(runs.size(), jobs, [&](std::size_t k) {
        const double omega = s.omega_grid[k / reps];
        runs[k] = run_simulation(config, omega, derive_seed(config.seed, {omega_tag(omega), k % reps}));
    });

    ValidationReport report;
    std::array<std::vector<double>, 3> errors;
    for (std::size_t i = 0; i < n_omega; ++i) {
        ValidationRow row;
        row.omega = s.omega_grid[i];
        const auto& a = analytic.points[i];
        row.analytic = {a.lambda_position, a.lambda_speed, a.lambda_orientation};
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& run = runs[i * reps + r];
                const double v = c == 0 ? run.position : c == 1 ? run.speed : run.orientation;
                sum += v;
                sum_sq += v * v;
            }
            const double n = static_cast<double>(reps);
            const double mean = sum / n;
            const double var = reps > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
            row.empirical[static_cast<std::size_t>(c)] = mean;
            row.standard_error[static_cast<std::size_t>(c)] = std::sqrt(var / n);
            errors[static_cast<std::size_t>(c)].push_back(std::abs(row.analytic[static_cast<std::size_t>(c)] - mean));
        }
        if (row.omega > 0.1 + 1e-12) {
            static const char* names[] = {"position", "speed", "orientation"};
            for (std::size_t c = 0; c < 3; ++c) {
                if (row.analytic[c] < row.empirical[c] - 2.0 * row.standard_error[c]) {
                    std::ostringstream msg;
                    msg << names[c] << " at omega=" << row.omega << ": analytic " << row.analytic[c]
                        << " < empirical " << row.empirical[c] << " - 2*" << row.standard_error[c];
                    report.conservatism_violations.push_back(msg.str());
                }
            }
        }
        report.rows.push_back(row);
    }
    report.position = summarize(errors[0]);
    report.speed = summarize(errors[1]);
    report.orientation = summarize(errors[2]);
    return report;
}

}  // namespace vamopt
