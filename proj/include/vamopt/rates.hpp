#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vamopt/core.hpp"
#include "vamopt/gnm.hpp"

namespace vamopt {

// ceil(x) that snaps values within 1e-9 of an integer onto that integer.
long long robust_ceil(double x);

// Position-triggered VAM rate for a pedestrian walking at constant speed sigma
// and sampled at rate omega.
double lambda_position(double omega, double delta, double sigma);

struct SpeedRateOptions {
    double delta_sigma = 0.5;
    double w_initial = 1.34;
    int realizations = 10000;
    std::uint64_t seed = 1;
    // Model time searched after the reference sample.
    double horizon = 120.0;
    // Replaces the random direction norm N with a constant when set.
    std::optional<double> fixed_direction_norm;
    int jobs = 1;
};

struct SpeedRate {
    int i0 = 0;
    double rate = 0.0;
    double standard_error = 0.0;
    // Fraction of realizations that crossed the threshold inside the horizon.
    double crossing_fraction = 0.0;
    bool horizon_exhausted = false;
};

// Speed-triggered rate omega / i*, where i* is the first sample index after i0
// whose speed differs from the speed at sample i0 by at least delta_sigma.
SpeedRate lambda_speed(double omega, int i0, const GnmParams& params, const SpeedRateOptions& options);

// lambda_speed for every i0 in [0, i0_max], computed from one shared set of trajectories.
std::vector<SpeedRate> lambda_speed_curve(double omega, int i0_max, const GnmParams& params,
                                          const SpeedRateOptions& options);

struct BandSpec {
    double level = 0.0;
    double width = 0.0;
};

// Geometric partition of [1e-3 * Kmax, Kmax] into `levels` bands.
std::vector<BandSpec> band_partition(const GnmParams& params, int levels = 20);

// Area between the isolines at level + width and level, excluding the region
// beyond a wall at distance d on the +y side.
double band_area(const BandSpec& band, double d, const GnmParams& params, int angular_points = 2048);

// Expected repulsion gradient of k neighbours spread uniformly in angle along the
// band's mid isoline, excluding those beyond the wall.
Vec2 band_influence_k(const BandSpec& band, int k, double d, const GnmParams& params,
                      int angular_points = 2048);

// Expected neighbour count weight sum_n sum_k k P(n in box, k in band) for a
// Poisson field of intensity mu.
double band_count_weight(double band_area, double box_area, double mu);

// The same quantity in factorized form.
double band_count_weight_closed_form(double band_area, double box_area, double mu);

// Expected band repulsion gradient for neighbour density mu.
Vec2 band_influence(const BandSpec& band, double d, double mu, const GnmParams& params,
                    int angular_points = 2048);

// Precomputed isoline tables for evaluating all bands at many wall distances.
class BandModel {
public:
    BandModel(const GnmParams& params, int levels = 20, int angular_points = 2048);

    const std::vector<BandSpec>& bands() const { return bands_; }
    double area(std::size_t band, double d) const;
    Vec2 influence_k(std::size_t band, int k, double d) const;
    // Sum over bands of the expected neighbour gradient.
    Vec2 expected_gradient(double d, double mu) const;

private:
    GnmParams params_;
    std::vector<BandSpec> bands_;
    int angular_points_;
    std::vector<double> cos_, sin_;
    // radii_[j][t]: isoline radius at band edge j; mid_[j][t]: at band j midpoint.
    std::vector<std::vector<double>> radii_, mid_;
};

struct OrientationModel {
    double mu = 0.002;
    double d_min = 0.2;
    double d_max = 2.0;
    double delta_orientation_deg = 4.0;
    int levels = 20;
    int angular_points = 2048;
    int d_grid = 128;
};

// Expected change of heading (degrees) for a pedestrian walking along +x at
// distance d from a wall, k > 0 samples after the reference sample.
double expected_orientation_change(int k, double d, double mu, const GnmParams& params,
                                   const BandModel& bands);
double expected_orientation_change(int k, double d, double mu, const GnmParams& params);

// Probability, over a wall distance uniform on [d_min, d_max], that the expected
// heading change exceeds the orientation threshold.
double orientation_trigger_prob(int k, double omega, const OrientationModel& model,
                                const VamThresholds& thresholds, const GnmParams& params);

// Orientation-triggered rate given per-sample trigger probabilities
// p_theta[k - 1] for k = 1, ..., I with I = ceil(delta * omega / sigma).
double lambda_orientation_from_probs(double omega, double delta, double sigma,
                                     std::span<const double> p_theta);

double lambda_orientation(double omega, const OrientationModel& model, const VamThresholds& thresholds,
                          const GnmParams& params);

struct RatePoint {
    double omega = 0.0;
    double lambda_position = 0.0;
    double lambda_speed = 0.0;
    double lambda_orientation = 0.0;
    double lambda_total = 0.0;
    bool speed_horizon_exhausted = false;
};

struct RateCurve {
    std::vector<RatePoint> points;
    double mu = 0.0;
    double p_theta = 0.0;
};

OrientationModel orientation_model_for(const Config& config);

// Analytic per-pedestrian VAM rates for every omega of the scenario grid.
RateCurve analytic_rate_curve(const Config& config, int jobs = 1);

}  // namespace vamopt
