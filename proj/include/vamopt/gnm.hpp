#pragma once

#include <cmath>
#include <span>

#include "vamopt/core.hpp"

namespace vamopt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    double norm() const { return std::hypot(x, y); }
    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

inline Vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Wraps an angle in radians to (-pi, pi].
double wrap_angle(double theta);

// h(r; peak, support): smooth bump, maximal (peak/e) at r = 0 and zero for r >= support.
double radial_kernel(double r, double peak, double support);

// s(theta): anisotropy of the neighbour influence, theta relative to the heading (radians).
double angular_kernel(double theta, const GnmParams& params);

// h(r; p, R_h) s(theta).
double influence_kernel(double r, double theta, const GnmParams& params);

// Supremum of influence_kernel, attained at (0, 0).
double kernel_maximum(const GnmParams& params);

// Radius of the isoline influence_kernel(r, theta) = level along direction theta,
// or 0 when the level exceeds the kernel maximum in that direction.
double isoline_radius(double theta, double level, const GnmParams& params);

// Scalar profile of the normalizing function: identity below 1 - eps_g,
// C1 blend to 1 on [1 - eps_g, 1], saturated at 1 beyond.
double normalize_profile(double r, const GnmParams& params);

// g: R^2 -> R^2 with g(0) = 0 and |g(x)| in [0, 1].
Vec2 normalize_g(Vec2 v, const GnmParams& params);

// Repulsion gradient induced by a neighbour at `offset` from the observer,
// with the observer heading along `heading` (radians). Points toward the neighbour.
Vec2 pedestrian_repulsion(Vec2 offset, double heading, const GnmParams& params);

// Repulsion gradient of a wall at distance d along unit direction `toward_wall`.
Vec2 wall_repulsion(double d, Vec2 toward_wall, const GnmParams& params);

// Desired direction g(g(N_T) + g(-sum of gradients)).
Vec2 desired_direction(Vec2 n_t, Vec2 gradient_sum, const GnmParams& params);

struct WallContact {
    double distance = 1.0;
    Vec2 toward_wall{0.0, -1.0};
};

struct PedestrianState {
    Vec2 position;
    double w = 1.34;
    Vec2 n_t{1.0, 0.0};
    double heading = 0.0;
    // Norm of the desired direction used in the most recent step.
    double direction_norm = 1.0;

    // Instantaneous velocity w * N.
    double speed() const { return w * direction_norm; }
};

// One explicit Euler step of the position/speed ODE. Neighbour offsets are
// relative to the pedestrian's current position.
PedestrianState euler_step(const PedestrianState& state, std::span<const Vec2> neighbor_offsets,
                           std::span<const WallContact> walls, double h, const GnmParams& params);

}  // namespace vamopt
