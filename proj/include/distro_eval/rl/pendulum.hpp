#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "distro_eval/rng.hpp"

namespace distro_eval::rl {

/// Torque-limited pendulum; theta = 0 is upright.
struct PendulumParams {
    double mass = 1.0;          // kg
    double length = 1.0;        // m
    double gravity = 9.81;      // m/s^2
    double friction = 0.01;     // N m s
    double max_torque = 5.0;    // N m
    double dt = 0.05;           // s
    int steps_per_episode = 200;
    double max_speed = 10.0;    // rad/s

    /// Throws if a parameter is nonpositive or the torque limit would allow
    /// lifting the pendulum statically.
    void validate() const
    {
        if (!(mass > 0 && length > 0 && gravity > 0 && friction >= 0 && max_torque > 0 && dt > 0 &&
              steps_per_episode > 0 && max_speed > 0)) {
            throw std::invalid_argument("pendulum parameters must be positive");
        }
        if (!(max_torque < mass * gravity * length)) {
            throw std::invalid_argument("max_torque must be below m*g*l so swing-up is required");
        }
    }
};

struct PendulumState {
    double theta = 0.0;      // rad, in (-pi, pi]
    double theta_dot = 0.0;  // rad/s, in [-max_speed, max_speed]
};

/// Wraps an angle into (-pi, pi]. Values already in range come back unchanged.
inline double wrap_angle(double theta)
{
    constexpr double pi = std::numbers::pi;
    if (theta > -pi && theta <= pi) {
        return theta;
    }
    double w = std::fmod(theta + pi, 2.0 * pi);
    if (w <= 0.0) {
        w += 2.0 * pi;
    }
    return std::clamp(w - pi, std::nextafter(-pi, 0.0), pi);
}

struct StepResult {
    PendulumState next;
    double reward = 0.0;
};

/// Semi-implicit Euler step; reward is cos(theta) of the new state.
inline StepResult pendulum_step(const PendulumParams& p, const PendulumState& s, double torque)
{
    if (std::isnan(torque) || !std::isfinite(s.theta) || !std::isfinite(s.theta_dot)) {
        throw std::domain_error("pendulum step received a NaN or infinite input");
    }
    const double u = std::clamp(torque, -p.max_torque, p.max_torque);
    const double inertia = p.mass * p.length * p.length;
    const double accel =
        (-p.friction * s.theta_dot + p.mass * p.gravity * p.length * std::sin(s.theta) + u) / inertia;
    StepResult r;
    r.next.theta_dot = std::clamp(s.theta_dot + p.dt * accel, -p.max_speed, p.max_speed);
    r.next.theta = wrap_angle(s.theta + p.dt * r.next.theta_dot);
    r.reward = std::cos(r.next.theta);
    return r;
}

/// Hanging start with a small angular jitter.
inline PendulumState pendulum_reset(const PendulumParams&, Rng& rng)
{
    return {wrap_angle(std::numbers::pi + rng.uniform(-0.05, 0.05)), 0.0};
}

/// Mechanical energy with the upright-zero angle convention.
inline double pendulum_energy(const PendulumParams& p, const PendulumState& s)
{
    return 0.5 * p.mass * p.length * p.length * s.theta_dot * s.theta_dot +
           p.mass * p.gravity * p.length * std::cos(s.theta);
}

}  // namespace distro_eval::rl
