#include "vamopt/gnm.hpp"

#include <algorithm>

namespace vamopt {

double wrap_angle(double theta) {
    double t = std::remainder(theta, 2.0 * kPi);
    if (t <= -kPi) t += 2.0 * kPi;
    return t;
}

double radial_kernel(double r, double peak, double support) {
    const double u = r / support;
    if (u >= 1.0 || u < 0.0) return 0.0;
    return peak * std::exp(1.0 / (u * u - 1.0));
}

double angular_kernel(double theta, const GnmParams& params) {
    const double c = std::cos(params.kappa * wrap_angle(theta));
    return 1.0 / (1.0 + std::exp(-(c - params.x0) / params.r_s));
}

double influence_kernel(double r, double theta, const GnmParams& params) {
    return radial_kernel(r, params.p, params.r_h) * angular_kernel(theta, params);
}

double kernel_maximum(const GnmParams& params) {
    return radial_kernel(0.0, params.p, params.r_h) * angular_kernel(0.0, params);
}

double isoline_radius(double theta, double level, const GnmParams& params) {
    if (level <= 0.0) return params.r_h;
    const double c = std::cos(params.kappa * wrap_angle(theta));
    const double q = (level / params.p) * (1.0 + std::exp(-(c - params.x0) / params.r_s));
    const double lq = std::log(q);
    if (!(lq < -1.0)) return 0.0;
    const double u = 1.0 / lq;
    return params.r_h * std::sqrt(1.0 + u);
}

double normalize_profile(double r, const GnmParams& params) {
    const double eps = params.eps_g;
    const double knee = 1.0 - eps;
    if (r <= knee) return r;
    if (r >= 1.0) return 1.0;
    const double t = (r - knee) / eps;
    return 1.0 - eps * (1.0 - t) * (1.0 - t) * (1.0 + t);
}

Vec2 normalize_g(Vec2 v, const GnmParams& params) {
    const double n = v.norm();
    if (n == 0.0) return {0.0, 0.0};
    return v * (normalize_profile(n, params) / n);
}

Vec2 pedestrian_repulsion(Vec2 offset, double heading, const GnmParams& params) {
    const double r = offset.norm();
    if (r == 0.0 || r >= params.r_h) return {0.0, 0.0};
    const double rel = std::atan2(offset.y, offset.x) - heading;
    return offset * (influence_kernel(r, rel, params) / r);
}

Vec2 wall_repulsion(double d, Vec2 toward_wall, const GnmParams& params) {
    if (d <= 0.0) d = 1e-9;
    return toward_wall * (radial_kernel(d, params.p_b, params.r_b) / d);
}

Vec2 desired_direction(Vec2 n_t, Vec2 gradient_sum, const GnmParams& params) {
    return normalize_g(normalize_g(n_t, params) + normalize_g(-gradient_sum, params), params);
}

PedestrianState euler_step(const PedestrianState& state, std::span<const Vec2> neighbor_offsets,
                           std::span<const WallContact> walls, double h, const GnmParams& params) {
    Vec2 grad{0.0, 0.0};
    for (const Vec2& off : neighbor_offsets) grad += pedestrian_repulsion(off, state.heading, params);
    for (const WallContact& wall : walls) grad += wall_repulsion(wall.distance, wall.toward_wall, params);
    const Vec2 n = desired_direction(state.n_t, grad, params);
    const double n_norm = n.norm();

    PedestrianState next = state;
    next.position = state.position + n * (h * state.w);
    const double a = h / params.tau;
    next.w = std::clamp(state.w * (1.0 - a) + a * params.v_desired * n_norm, 0.0, params.v_max);
    next.direction_norm = n_norm;
    if (n_norm > 1e-12) next.heading = std::atan2(n.y, n.x);
    return next;
}

}  // namespace vamopt
