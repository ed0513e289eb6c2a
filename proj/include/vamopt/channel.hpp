#pragma once

#include <cstdint>

#include "vamopt/core.hpp"

namespace vamopt {

// Laplace transform of one virtual backoff slot: idle with probability
// 1 - busy_prob, otherwise an idle slot followed by a foreign transmission.
double virtual_slot_transform(double s, double busy_prob, const ChannelParams& params);

// Laplace transform of the service time: K ~ U{1..W0} virtual slots followed
// by the own AIFS and frame.
double service_time_transform(double s, double busy_prob, const ChannelParams& params);

double mean_virtual_slot(double busy_prob, const ChannelParams& params);
double mean_service_time(double busy_prob, const ChannelParams& params);

struct FixedPointOptions {
    double tolerance = 1e-9;
    int max_iterations = 10000;
    double damping = 0.5;
    double tau_initial = 0.0;
};

struct FixedPoint {
    double tau = 0.0;
    double busy_prob = 0.0;
    double idle_prob = 1.0;
    double service_time = 0.0;
    double pdr = 1.0;
    int iterations = 0;
    bool converged = false;
};

// Solves for the per-slot transmission probability of n stations sharing an
// aggregate packet rate big_lambda.
FixedPoint solve_fixed_point(double big_lambda, int n, const ChannelParams& params,
                             const FixedPointOptions& options = {});

double expected_pdr(double big_lambda, int n, const ChannelParams& params,
                    const FixedPointOptions& options = {});

struct MonteCarloOptions {
    double duration = 200.0;
    int replications = 10;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct MonteCarloPdr {
    double pdr = 1.0;
    // Half-width of the 95% confidence interval over replications.
    double half_width = 0.0;
    std::uint64_t attempts = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
};

// Slot-level simulation of n broadcast stations with Poisson
// arrivals at rate big_lambda / n each and a single packet buffer.
MonteCarloPdr monte_carlo_pdr(double big_lambda, int n, const ChannelParams& params,
                              const MonteCarloOptions& options = {});

}  // namespace vamopt
