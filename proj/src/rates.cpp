#include "vamopt/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vamopt/parallel.hpp"
#include "vamopt/rng.hpp"

namespace vamopt {

long long robust_ceil(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<long long>(r);
    return static_cast<long long>(std::ceil(x));
}

double lambda_position(double omega, double delta, double sigma) {
    if (!(omega > 0.0) || !(delta > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("lambda_position requires positive omega, delta and sigma");
    const long long samples = std::max(1LL, robust_ceil(omega * delta / sigma));
    return omega / static_cast<double>(samples);
}

namespace {

// Speeds w_k N_k at each sample instant 0..last_sample for one realization.
void speed_samples(double omega, int last_sample, const GnmParams& params, const SpeedRateOptions& opt,
                   std::uint64_t seed, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(last_sample) + 1, 0.0);
    Rng rng(seed);
    const double a = 1.0 - params.h / params.tau;
    const double steps_per_sample = 1.0 / (omega * params.h);
    double w = opt.w_initial;
    long long k = 0;
    for (int i = 0; i <= last_sample; ++i) {
        const long long target = static_cast<long long>(std::floor(i * steps_per_sample + 1e-9));
        double n = 0.0;
        for (;;) {
            n = opt.fixed_direction_norm ? *opt.fixed_direction_norm : rng.uniform();
            if (k == target) break;
            w = a * w + (1.0 - a) * params.v_desired * n;
            ++k;
        }
        out[static_cast<std::size_t>(i)] = w * n;
        w = a * w + (1.0 - a) * params.v_desired * n;
        ++k;
    }
}

}  // namespace

std::vector<SpeedRate> lambda_speed_curve(double omega, int i0_max, const GnmParams& params,
                                          const SpeedRateOptions& opt) {
    if (!(omega > 0.0)) throw std::invalid_argument("lambda_speed requires omega > 0");
    if (i0_max < 0) throw std::invalid_argument("lambda_speed requires i0 >= 0");
    if (opt.realizations < 1) throw std::invalid_argument("lambda_speed requires realizations >= 1");
    const int horizon_samples = std::max(1, static_cast<int>(robust_ceil(opt.horizon * omega)));
    const int last = i0_max + horizon_samples;
    const std::size_t n_i0 = static_cast<std::size_t>(i0_max) + 1;
    const std::size_t reps = static_cast<std::size_t>(opt.realizations);

    // contrib[r * n_i0 + i0]: rate contribution, negative when no crossing.
    std::vector<double> contrib(reps * n_i0, 0.0);
    const std::size_t chunk = 256;
    const std::size_t n_chunks = (reps + chunk - 1) / chunk;
    parallel_for(n_chunks, opt.jobs, [&](std::size_t c) {
        std::vector<double> sigma;
        for (std::size_t r = c * chunk; r < std::min(reps, (c + 1) * chunk); ++r) {
            speed_samples(omega, last, params, opt, derive_seed(opt.seed, {r}), sigma);
            for (std::size_t i0 = 0; i0 < n_i0; ++i0) {
                double value = -1.0;
                const double ref = sigma[i0];
                for (std::size_t i = i0 + 1; i <= i0 + static_cast<std::size_t>(horizon_samples); ++i) {
                    if (std::abs(sigma[i] - ref) >= opt.delta_sigma) {
                        value = omega / static_cast<double>(i);
                        break;
                    }
                }
                contrib[r * n_i0 + i0] = value;
            }
        }
    });

    std::vector<SpeedRate> result(n_i0);
    for (std::size_t i0 = 0; i0 < n_i0; ++i0) {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t crossed = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const double v = contrib[r * n_i0 + i0];
            if (v >= 0.0) {
                sum += v;
                sum_sq += v * v;
                ++crossed;
            }
        }
        const double n = static_cast<double>(reps);
        const double mean = sum / n;
        const double var = reps > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
        SpeedRate& out = result[i0];
        out.i0 = static_cast<int>(i0);
        out.rate = mean;
        out.standard_error = std::sqrt(var / n);
        out.crossing_fraction = static_cast<double>(crossed) / n;
        out.horizon_exhausted = crossed == 0;
    }
    return result;
}

SpeedRate lambda_speed(double omega, int i0, const GnmParams& params, const SpeedRateOptions& options) {
    auto curve = lambda_speed_curve(omega, i0, params, options);
    return curve.back();
}

std::vector<BandSpec> band_partition(const GnmParams& params, int levels) {
    if (levels < 1) throw std::invalid_argument("band_partition requires levels >= 1");
    const double kmax = kernel_maximum(params);
    std::vector<BandSpec> bands;
    bands.reserve(static_cast<std::size_t>(levels));
    auto edge = [&](int j) { return kmax * std::pow(10.0, -3.0 + 3.0 * j / levels); };
    for (int j = 0; j < levels; ++j) bands.push_back({edge(j), edge(j + 1) - edge(j)});
    return bands;
}

namespace {

double wall_cap(double sin_t, double d) {
    return sin_t > 0.0 ? d / sin_t : std::numeric_limits<double>::infinity();
}

void check_band(const BandSpec& band, double d, int angular_points) {
    if (!(band.level > 0.0) || !(band.width > 0.0))
        throw std::invalid_argument("band requires positive level and width");
    if (!(d > 0.0)) throw std::invalid_argument("wall distance must be positive");
    if (angular_points < 8) throw std::invalid_argument("angular_points must be at least 8");
}

}  // namespace

double band_area(const BandSpec& band, double d, const GnmParams& params, int angular_points) {
    check_band(band, d, angular_points);
    const double dt = 2.0 * kPi / angular_points;
    double sum = 0.0;
    for (int t = 0; t < angular_points; ++t) {
        const double theta = -kPi + (t + 0.5) * dt;
        const double cap = wall_cap(std::sin(theta), d);
        const double outer = std::min(isoline_radius(theta, band.level, params), cap);
        const double inner = std::min(isoline_radius(theta, band.level + band.width, params), cap);
        sum += 0.5 * (outer * outer - inner * inner);
    }
    return sum * dt;
}

Vec2 band_influence_k(const BandSpec& band, int k, double d, const GnmParams& params, int angular_points) {
    check_band(band, d, angular_points);
    if (k < 0) throw std::invalid_argument("band_influence_k requires k >= 0");
    const double mid = band.level + 0.5 * band.width;
    const double dt = 2.0 * kPi / angular_points;
    Vec2 sum{0.0, 0.0};
    for (int t = 0; t < angular_points; ++t) {
        const double theta = -kPi + (t + 0.5) * dt;
        const double r = isoline_radius(theta, mid, params);
        if (r <= 0.0 || r * std::sin(theta) > d) continue;
        sum += unit_from_angle(theta) * mid;
    }
    return sum * (k * dt / (2.0 * kPi));
}

double band_count_weight(double band_area, double box_area, double mu) {
    if (band_area < 0.0 || box_area <= 0.0 || mu < 0.0)
        throw std::invalid_argument("band_count_weight requires non-negative areas and density");
    if (mu == 0.0 || band_area == 0.0) return 0.0;
    const double rest = std::max(0.0, box_area - band_area);
    const double log_mu2 = 2.0 * std::log(mu);
    const double log_h = std::log(band_area);
    const double log_rest = rest > 0.0 ? std::log(rest) : -std::numeric_limits<double>::infinity();
    const double log_b = std::log(box_area);
    const double damping = -2.0 * mu * box_area;

    double total = 0.0;
    double previous_row = std::numeric_limits<double>::infinity();
    for (int n = 1; n < 100000; ++n) {
        double row = 0.0;
        for (int k = 1; k <= n; ++k) {
            const int m = n - k;
            if (m > 0 && rest == 0.0) continue;
            const double log_term = n * log_mu2 + k * log_h + (m > 0 ? m * log_rest : 0.0) + n * log_b -
                                    std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m + 1.0) +
                                    damping;
            row += k * std::exp(log_term);
        }
        total += row;
        if (row < previous_row && row <= 1e-9 * std::max(total, 1e-300)) break;
        previous_row = row;
    }
    return total;
}

double band_count_weight_closed_form(double band_area, double box_area, double mu) {
    if (mu == 0.0 || band_area == 0.0) return 0.0;
    // |H| e^{-2 mu |B|} sum_n n mu^{2n} |B|^{2n-1} / (n!)^2
    const double x = mu * box_area;
    double total = 0.0;
    for (int n = 1; n < 100000; ++n) {
        const double log_term = 2.0 * n * std::log(x) - std::log(box_area) - 2.0 * std::lgamma(n + 1.0);
        const double term = n * std::exp(log_term);
        total += term;
        if (n > x && term <= 1e-17 * total) break;
    }
    return band_area * std::exp(-2.0 * mu * box_area) * total;
}

Vec2 band_influence(const BandSpec& band, double d, double mu, const GnmParams& params, int angular_points) {
    const double box = 4.0 * params.r_h * params.r_h;
    const double area = band_area(band, d, params, angular_points);
    return band_influence_k(band, 1, d, params, angular_points) * band_count_weight(area, box, mu);
}

BandModel::BandModel(const GnmParams& params, int levels, int angular_points)
    : params_(params), bands_(band_partition(params, levels)), angular_points_(angular_points) {
    if (angular_points < 8) throw std::invalid_argument("angular_points must be at least 8");
    const double dt = 2.0 * kPi / angular_points;
    cos_.resize(static_cast<std::size_t>(angular_points));
    sin_.resize(cos_.size());
    for (int t = 0; t < angular_points; ++t) {
        const double theta = -kPi + (t + 0.5) * dt;
        cos_[static_cast<std::size_t>(t)] = std::cos(theta);
        sin_[static_cast<std::size_t>(t)] = std::sin(theta);
    }
    auto table = [&](double level) {
        std::vector<double> r(cos_.size());
        for (int t = 0; t < angular_points; ++t)
            r[static_cast<std::size_t>(t)] = isoline_radius(-kPi + (t + 0.5) * dt, level, params_);
        return r;
    };
    for (const auto& b : bands_) {
        radii_.push_back(table(b.level));
        mid_.push_back(table(b.level + 0.5 * b.width));
    }
    radii_.push_back(table(bands_.back().level + bands_.back().width));
}

double BandModel::area(std::size_t band, double d) const {
    const double dt = 2.0 * kPi / angular_points_;
    double sum = 0.0;
    for (std::size_t t = 0; t < cos_.size(); ++t) {
        const double cap = wall_cap(sin_[t], d);
        const double outer = std::min(radii_[band][t], cap);
        const double inner = std::min(radii_[band + 1][t], cap);
        sum += 0.5 * (outer * outer - inner * inner);
    }
    return sum * dt;
}

Vec2 BandModel::influence_k(std::size_t band, int k, double d) const {
    const double mid = bands_[band].level + 0.5 * bands_[band].width;
    Vec2 sum{0.0, 0.0};
    for (std::size_t t = 0; t < cos_.size(); ++t) {
        const double r = mid_[band][t];
        if (r <= 0.0 || r * sin_[t] > d) continue;
        sum += Vec2{cos_[t], sin_[t]} * mid;
    }
    return sum * (static_cast<double>(k) / angular_points_);
}

Vec2 BandModel::expected_gradient(double d, double mu) const {
    const double box = 4.0 * params_.r_h * params_.r_h;
    Vec2 total{0.0, 0.0};
    for (std::size_t j = 0; j < bands_.size(); ++j) {
        const double w = band_count_weight(area(j, d), box, mu);
        if (w > 0.0) total += influence_k(j, 1, d) * w;
    }
    return total;
}

double expected_orientation_change(int k, double d, double mu, const GnmParams& params, const BandModel& bands) {
    if (k <= 0) throw std::invalid_argument("expected_orientation_change requires k > 0");
    if (!(d > 0.0)) throw std::invalid_argument("expected_orientation_change requires d > 0");
    const Vec2 grad = wall_repulsion(d, {0.0, 1.0}, params) + bands.expected_gradient(d, mu);
    const Vec2 n = desired_direction({1.0, 0.0}, grad, params);
    const double norm = n.norm();
    if (norm == 0.0) return 0.0;
    const double c = std::clamp(n.x / norm, -1.0, 1.0);
    return std::acos(c) * 180.0 / kPi;
}

double expected_orientation_change(int k, double d, double mu, const GnmParams& params) {
    return expected_orientation_change(k, d, mu, params, BandModel(params));
}

namespace {

double trigger_measure(const OrientationModel& model, double threshold, const GnmParams& params) {
    const BandModel bands(params, model.levels, model.angular_points);
    auto excess = [&](double d) {
        return expected_orientation_change(1, d, model.mu, params, bands) - threshold;
    };
    const int n = std::max(2, model.d_grid);
    const double span = model.d_max - model.d_min;
    double measure = 0.0;
    double prev_d = model.d_min;
    double prev_f = excess(prev_d);
    for (int i = 1; i <= n; ++i) {
        const double d = model.d_min + span * i / n;
        const double f = excess(d);
        if ((prev_f > 0.0) == (f > 0.0)) {
            if (f > 0.0) measure += d - prev_d;
        } else {
            double lo = prev_d, hi = d;
            const bool lo_positive = prev_f > 0.0;
            for (int it = 0; it < 60; ++it) {
                const double m = 0.5 * (lo + hi);
                if ((excess(m) > 0.0) == lo_positive) lo = m; else hi = m;
            }
            const double root = 0.5 * (lo + hi);
            measure += lo_positive ? root - prev_d : d - root;
        }
        prev_d = d;
        prev_f = f;
    }
    return measure / span;
}

}  // namespace

double orientation_trigger_prob(int k, double omega, const OrientationModel& model,
                                const VamThresholds& thresholds, const GnmParams& params) {
    if (k <= 0) throw std::invalid_argument("orientation_trigger_prob requires k > 0");
    const long long cap = robust_ceil(thresholds.delta_position * omega / params.w_bar);
    if (k > std::max(1LL, cap))
        throw std::invalid_argument("orientation_trigger_prob requires k <= ceil(delta * omega / sigma)");
    if (!(model.d_max > model.d_min) || !(model.d_min > 0.0 || model.d_min == 0.0))
        throw std::invalid_argument("orientation model requires 0 <= d_min < d_max");
    OrientationModel m = model;
    if (m.d_min <= 0.0) m.d_min = 1e-6;
    return trigger_measure(m, thresholds.delta_orientation_deg, params);
}

double lambda_orientation_from_probs(double omega, double delta, double sigma, std::span<const double> p_theta) {
    if (!(omega > 0.0) || !(delta > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("lambda_orientation requires positive omega, delta and sigma");
    const long long samples = std::max(1LL, robust_ceil(delta * omega / sigma));
    if (static_cast<long long>(p_theta.size()) < samples)
        throw std::invalid_argument("lambda_orientation needs one probability per sample up to I");
    double survive = 1.0;
    double p0 = 0.0, p1 = 0.0;
    for (long long k = 1; k < samples; ++k) {
        const double p = p_theta[static_cast<std::size_t>(k - 1)];
        const double pk = p * survive;
        p0 += pk;
        p1 += static_cast<double>(k) * pk;
        survive *= 1.0 - p;
    }
    const double p_err = survive * (1.0 - p_theta[static_cast<std::size_t>(samples - 1)]);
    if (p0 <= 0.0 || p_err >= 1.0) return 0.0;
    const double mean_gap =
        (1.0 / omega) / (1.0 - p_err) * (p1 + static_cast<double>(samples) * p0 * p_err / (1.0 - p_err));
    return 1.0 / mean_gap;
}

double lambda_orientation(double omega, const OrientationModel& model, const VamThresholds& thresholds,
                          const GnmParams& params) {
    const double p = orientation_trigger_prob(1, omega, model, thresholds, params);
    const long long samples = std::max(1LL, robust_ceil(thresholds.delta_position * omega / params.w_bar));
    const std::vector<double> probs(static_cast<std::size_t>(samples), p);
    return lambda_orientation_from_probs(omega, thresholds.delta_position, params.w_bar, probs);
}

OrientationModel orientation_model_for(const Config& config) {
    OrientationModel m;
    m.mu = config.scenario.density();
    m.d_min = config.scenario.d_min;
    m.d_max = config.scenario.d_max;
    m.delta_orientation_deg = config.thresholds.delta_orientation_deg;
    return m;
}

RateCurve analytic_rate_curve(const Config& config, int jobs) {
    const auto& s = config.scenario;
    const auto& th = config.thresholds;
    const auto& g = config.gnm;
    RateCurve curve;
    OrientationModel model = orientation_model_for(config);
    if (model.d_min <= 0.0) model.d_min = 1e-6;
    curve.mu = model.mu;
    curve.p_theta = trigger_measure(model, th.delta_orientation_deg, g);

    SpeedRateOptions speed;
    speed.delta_sigma = th.delta_speed;
    speed.w_initial = g.v_desired;
    speed.realizations = s.speed_realizations;
    speed.seed = derive_seed(config.seed, {0x5eedULL});
    speed.horizon = s.speed_horizon;
    speed.jobs = jobs;

    for (double omega : s.omega_grid) {
        RatePoint pt;
        pt.omega = omega;
        pt.lambda_position = lambda_position(omega, th.delta_position, g.w_bar);
        const int i0 = static_cast<int>(std::llround(s.warmup * omega));
        const SpeedRate sr = lambda_speed(omega, i0, g, speed);
        pt.lambda_speed = sr.rate;
        pt.speed_horizon_exhausted = sr.horizon_exhausted;
        const long long samples = std::max(1LL, robust_ceil(th.delta_position * omega / g.w_bar));
        const std::vector<double> probs(static_cast<std::size_t>(samples), curve.p_theta);
        pt.lambda_orientation = lambda_orientation_from_probs(omega, th.delta_position, g.w_bar, probs);
        pt.lambda_total = pt.lambda_position + pt.lambda_speed + pt.lambda_orientation;
        curve.points.push_back(pt);
    }
    return curve;
}

}  // namespace vamopt
