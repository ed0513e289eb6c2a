#include "vamopt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "vamopt/parallel.hpp"
#include "vamopt/rng.hpp"

namespace vamopt {

namespace {

void check_busy(double busy_prob) {
    if (!(busy_prob >= 0.0 && busy_prob <= 1.0))
        throw std::invalid_argument("busy probability must lie in [0, 1]");
}

}  // namespace

double virtual_slot_transform(double s, double busy_prob, const ChannelParams& params) {
    check_busy(busy_prob);
    const double idle = std::exp(-s * params.slot_time);
    return (1.0 - busy_prob) * idle + busy_prob * idle * std::exp(-s * params.busy_time());
}

double service_time_transform(double s, double busy_prob, const ChannelParams& params) {
    const double lx = virtual_slot_transform(s, busy_prob, params);
    double sum = 0.0, power = 1.0;
    for (int k = 1; k <= params.w0; ++k) {
        power *= lx;
        sum += power;
    }
    return std::exp(-s * params.busy_time()) * sum / params.w0;
}

double mean_virtual_slot(double busy_prob, const ChannelParams& params) {
    check_busy(busy_prob);
    return params.slot_time + busy_prob * params.busy_time();
}

double mean_service_time(double busy_prob, const ChannelParams& params) {
    return params.busy_time() + 0.5 * (params.w0 + 1) * mean_virtual_slot(busy_prob, params);
}

FixedPoint solve_fixed_point(double big_lambda, int n, const ChannelParams& params,
                             const FixedPointOptions& options) {
    if (n < 1) throw std::invalid_argument("fixed point requires at least one station");
    if (!(big_lambda >= 0.0) || !std::isfinite(big_lambda))
        throw std::invalid_argument("aggregate rate must be finite and non-negative");
    const double per_station = big_lambda / n;
    const double tx_scale = 2.0 / (params.w0 + 1);

    FixedPoint fp;
    double tau = std::clamp(options.tau_initial, 0.0, 1.0);
    auto evaluate = [&](double t, FixedPoint& out) {
        out.busy_prob = 1.0 - std::pow(1.0 - t, n - 1);
        out.service_time = mean_service_time(out.busy_prob, params);
        out.idle_prob = std::max(0.0, 1.0 - per_station * out.service_time);
        return (1.0 - out.idle_prob) * tx_scale;
    };
    for (int it = 1; it <= options.max_iterations; ++it) {
        const double target = evaluate(tau, fp);
        const double next = (1.0 - options.damping) * tau + options.damping * target;
        fp.iterations = it;
        const bool done = std::abs(next - tau) < options.tolerance;
        tau = next;
        if (done) {
            fp.converged = true;
            break;
        }
    }
    evaluate(tau, fp);
    fp.tau = tau;
    fp.pdr = std::pow(1.0 - tau, n - 1);
    return fp;
}

double expected_pdr(double big_lambda, int n, const ChannelParams& params, const FixedPointOptions& options) {
    FixedPoint fp = solve_fixed_point(big_lambda, n, params, options);
    if (!fp.converged) throw NumericalError("channel fixed point did not converge");
    return fp.pdr;
}

namespace {

struct ReplicationCounts {
    std::uint64_t attempts = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
};

ReplicationCounts simulate_channel(double per_station, int n, const ChannelParams& params, double duration,
                                   std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t ns = static_cast<std::size_t>(n);
    std::vector<double> next_arrival(ns);
    std::vector<int> counter(ns, 0);
    std::vector<char> holding(ns, 0);
    for (auto& a : next_arrival) a = rng.exponential(per_station);

    ReplicationCounts counts;
    double t = 0.0;
    std::vector<std::size_t> transmitters;
    while (t < duration) {
        bool any = false;
        for (std::size_t i = 0; i < ns; ++i) {
            while (next_arrival[i] <= t) {
                if (holding[i]) {
                    ++counts.dropped;
                } else {
                    holding[i] = 1;
                    counter[i] = rng.uniform_int(1, params.w0);
                }
                next_arrival[i] += rng.exponential(per_station);
            }
            any = any || holding[i];
        }
        if (!any) {
            t = *std::min_element(next_arrival.begin(), next_arrival.end());
            continue;
        }
        t += params.slot_time;
        transmitters.clear();
        for (std::size_t i = 0; i < ns; ++i) {
            if (holding[i] && --counter[i] == 0) transmitters.push_back(i);
        }
        if (transmitters.empty()) continue;
        t += params.busy_time();
        counts.attempts += transmitters.size();
        if (transmitters.size() == 1) ++counts.delivered;
        for (std::size_t i : transmitters) holding[i] = 0;
    }
    return counts;
}

}  // namespace

MonteCarloPdr monte_carlo_pdr(double big_lambda, int n, const ChannelParams& params,
                              const MonteCarloOptions& options) {
    if (n < 1) throw std::invalid_argument("channel simulation requires at least one station");
    if (!(big_lambda >= 0.0) || !std::isfinite(big_lambda))
        throw std::invalid_argument("aggregate rate must be finite and non-negative");
    if (options.replications < 1 || !(options.duration > 0.0))
        throw std::invalid_argument("channel simulation requires positive duration and replications");
    MonteCarloPdr out;
    if (big_lambda == 0.0 || n == 1) return out;

    const std::size_t reps = static_cast<std::size_t>(options.replications);
    std::vector<ReplicationCounts> per_rep(reps);
    parallel_for(reps, options.jobs, [&](std::size_t r) {
        per_rep[r] = simulate_channel(big_lambda / n, n, params, options.duration, derive_seed(options.seed, {r}));
    });

    std::vector<double> ratios;
    for (const auto& c : per_rep) {
        out.attempts += c.attempts;
        out.delivered += c.delivered;
        out.dropped += c.dropped;
        if (c.attempts > 0) ratios.push_back(static_cast<double>(c.delivered) / c.attempts);
    }
    out.pdr = out.attempts ? static_cast<double>(out.delivered) / out.attempts : 1.0;
    if (ratios.size() >= 2) {
        double mean = 0.0;
        for (double x : ratios) mean += x;
        mean /= ratios.size();
        double var = 0.0;
        for (double x : ratios) var += (x - mean) * (x - mean);
        var /= ratios.size() - 1;
        const boost::math::students_t dist(static_cast<double>(ratios.size() - 1));
        out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) *
                         std::sqrt(var / ratios.size());
    } else {
        out.half_width = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace vamopt
