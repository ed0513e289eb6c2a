#pragma once

#include <functional>
#include <vector>

#include "vamopt/channel.hpp"
#include "vamopt/core.hpp"
#include "vamopt/rates.hpp"

namespace vamopt {

// Channel occupancy seen by the pedestrians: n_p pedestrians each sending at
// rate lambda, plus a fixed background rate from bikes and cars.
struct ChannelLoad {
    int n_p = 16;
    int stations = 16;
    double background_rate = 0.0;

    static ChannelLoad from(const Population& population, const ScenarioConfig& scenario);
    double aggregate_rate(double lambda) const { return background_rate + n_p * lambda; }
};

std::vector<double> log_grid(double lo, double hi, int points);

double pipg_pdr(const ChannelLoad& load, double lambda, const ChannelParams& channel,
                const FixedPointOptions& options = {});

// Expected pedestrian inter-packet gap 1 / (n_p lambda pdr).
double expected_pipg(const ChannelLoad& load, double lambda, const ChannelParams& channel,
                     const FixedPointOptions& options = {});

struct PipgCurve {
    std::vector<double> lambda;
    std::vector<double> pipg;
    std::vector<double> pdr;
};

PipgCurve pipg_curve(const ChannelLoad& load, const ChannelParams& channel, double lo, double hi, int points);

struct BrentResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Derivative-free minimization on [a, b]; endpoints are returned when they beat
// the interior iterate.
BrentResult brent_minimize(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-6,
                           int max_iterations = 200);

struct Bracket {
    double left = 0.0;
    double peak = 0.0;
    double right = 0.0;
    bool found = false;
};

// Locates the interior local maximum of the pIPG with the largest lambda on a
// log grid, refined between its grid neighbours.
Bracket bracket_interior_max(const ChannelLoad& load, const ChannelParams& channel, double lo, double hi,
                             int points);

struct GradientCheck {
    double lambda = 0.0;
    double pipg = 0.0;
    double pdr = 0.0;
    double dpdr = 0.0;
    double dpipg = 0.0;
    // p + lambda p', zero at a stationary point of the pIPG.
    double balance = 0.0;
    double relative_balance = 0.0;
};

GradientCheck pipg_gradient_check(const ChannelLoad& load, double lambda, const ChannelParams& channel,
                                  double rel_step = 1e-4);

enum class ExtremumKind { Minimum, Maximum };

struct Extremum {
    ExtremumKind kind = ExtremumKind::Minimum;
    double lambda = 0.0;
    double pipg = 0.0;
    GradientCheck check;
};

// Interior local extrema of the pIPG on a log grid, each refined by Brent
// between its grid neighbours.
std::vector<Extremum> interior_extrema(const ChannelLoad& load, const ChannelParams& channel, double lo,
                                       double hi, int points);

struct OptimizationResult {
    Population population;
    double lambda_min = 0.0;
    double pipg_min = 0.0;
    double omega_star = 0.0;
    double lambda_at_star = 0.0;
    double pipg_at_star = 0.0;
    double pipg_at_10hz = 0.0;
    int local_minima = 0;
    Bracket bracket;
    // Set when the nearest-rate choice was replaced by a strictly better grid rate.
    bool grid_polished = false;
    std::vector<double> grid_pipg;
};

OptimizationResult optimal_sampling(const Population& population, const RateCurve& rates,
                                    const Config& config);

}  // namespace vamopt
