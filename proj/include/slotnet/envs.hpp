#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>

#include "slotnet/common.hpp"
#include "slotnet/rng.hpp"

namespace slotnet {

enum class EnvId { CartPole, Acrobot, MountainCar };

struct EnvSpec {
    EnvId id;
    const char* name;
    std::size_t obs_dim;
    std::size_t n_actions;
    std::size_t max_steps;
    double solve_threshold;
};

inline EnvSpec env_spec(EnvId id) {
    switch (id) {
        case EnvId::CartPole: return {EnvId::CartPole, "cartpole", 4, 2, 500, 495.0};
        case EnvId::Acrobot: return {EnvId::Acrobot, "acrobot", 6, 3, 500, -96.0};
        case EnvId::MountainCar: return {EnvId::MountainCar, "mountaincar", 2, 3, 200, -105.0};
    }
    throw ConfigError("env_spec: unknown environment");
}

inline EnvId env_from_name(const std::string& name) {
    if (name == "cartpole") return EnvId::CartPole;
    if (name == "acrobot") return EnvId::Acrobot;
    if (name == "mountaincar") return EnvId::MountainCar;
    throw ConfigError("unknown environment: " + name);
}

/// Physical state plus step bookkeeping. CartPole: (x, x_dot, theta,
/// theta_dot). Acrobot: (theta1, theta2, dtheta1, dtheta2). MountainCar:
/// (position, velocity) in the first two entries.
struct EnvState {
    EnvId id = EnvId::CartPole;
    std::array<double, 4> s{};
    std::size_t steps = 0;
    bool done = false;
};

struct StepResult {
    EnvState state;
    Vec obs;
    double reward = 0.0;
    bool done = false;
};

namespace envdetail {

// CartPole constants
inline constexpr double kGravity = 9.8;
inline constexpr double kMassCart = 1.0;
inline constexpr double kMassPole = 0.1;
inline constexpr double kTotalMass = kMassPole + kMassCart;
inline constexpr double kPoleHalfLength = 0.5;
inline constexpr double kPoleMassLength = kMassPole * kPoleHalfLength;
inline constexpr double kForceMag = 10.0;
inline constexpr double kTau = 0.02;
inline constexpr double kXThreshold = 2.4;
inline const double kThetaThreshold = 12.0 * 2.0 * std::numbers::pi / 360.0;

// MountainCar constants
inline constexpr double kMinPosition = -1.2;
inline constexpr double kMaxPosition = 0.6;
inline constexpr double kMaxSpeed = 0.07;
inline constexpr double kGoalPosition = 0.5;
inline constexpr double kCarForce = 0.001;
inline constexpr double kCarGravity = 0.0025;

// Acrobot constants (two unit links, unit masses, centers at mid-link)
inline constexpr double kLink1 = 1.0;
inline constexpr double kLinkCom1 = 0.5;
inline constexpr double kLinkCom2 = 0.5;
inline constexpr double kLinkMass1 = 1.0;
inline constexpr double kLinkMass2 = 1.0;
inline constexpr double kLinkMoi = 1.0;
inline constexpr double kAcrobotDt = 0.2;
inline const double kMaxVel1 = 4.0 * std::numbers::pi;
inline const double kMaxVel2 = 9.0 * std::numbers::pi;

inline double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

inline double wrap(double x, double lo, double hi) {
    double diff = hi - lo;
    while (x > hi) x -= diff;
    while (x < lo) x += diff;
    return x;
}

/// Two-link pendulum derivatives ("book" formulation). y = (theta1, theta2,
/// dtheta1, dtheta2, torque); the torque component has zero derivative.
inline std::array<double, 5> acrobot_dsdt(const std::array<double, 5>& y) {
    const double g = 9.8;
    const double a = y[4];
    const double theta1 = y[0], theta2 = y[1], dtheta1 = y[2], dtheta2 = y[3];
    const double pi = std::numbers::pi;
    double d1 = kLinkMass1 * kLinkCom1 * kLinkCom1 +
                kLinkMass2 * (kLink1 * kLink1 + kLinkCom2 * kLinkCom2 +
                              2.0 * kLink1 * kLinkCom2 * std::cos(theta2)) +
                kLinkMoi + kLinkMoi;
    double d2 = kLinkMass2 * (kLinkCom2 * kLinkCom2 + kLink1 * kLinkCom2 * std::cos(theta2)) +
                kLinkMoi;
    double phi2 = kLinkMass2 * kLinkCom2 * g * std::cos(theta1 + theta2 - pi / 2.0);
    double phi1 = -kLinkMass2 * kLink1 * kLinkCom2 * dtheta2 * dtheta2 * std::sin(theta2) -
                  2.0 * kLinkMass2 * kLink1 * kLinkCom2 * dtheta2 * dtheta1 * std::sin(theta2) +
                  (kLinkMass1 * kLinkCom1 + kLinkMass2 * kLink1) * g *
                      std::cos(theta1 - pi / 2.0) +
                  phi2;
    double ddtheta2 =
        (a + d2 / d1 * phi1 -
         kLinkMass2 * kLink1 * kLinkCom2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
        (kLinkMass2 * kLinkCom2 * kLinkCom2 + kLinkMoi - d2 * d2 / d1);
    double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0};
}

/// Single fourth-order Runge-Kutta step over [0, dt].
inline std::array<double, 5> rk4_step(const std::array<double, 5>& y0, double dt) {
    const double dt2 = dt / 2.0;
    auto k1 = acrobot_dsdt(y0);
    std::array<double, 5> t{};
    for (int i = 0; i < 5; ++i) t[i] = y0[i] + dt2 * k1[i];
    auto k2 = acrobot_dsdt(t);
    for (int i = 0; i < 5; ++i) t[i] = y0[i] + dt2 * k2[i];
    auto k3 = acrobot_dsdt(t);
    for (int i = 0; i < 5; ++i) t[i] = y0[i] + dt * k3[i];
    auto k4 = acrobot_dsdt(t);
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i)
        out[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

}  // namespace envdetail

inline Vec observe(const EnvState& st) {
    switch (st.id) {
        case EnvId::CartPole:
            return {st.s[0], st.s[1], st.s[2], st.s[3]};
        case EnvId::Acrobot:
            return {std::cos(st.s[0]), std::sin(st.s[0]), std::cos(st.s[1]),
                    std::sin(st.s[1]), st.s[2], st.s[3]};
        case EnvId::MountainCar:
            return {st.s[0], st.s[1]};
    }
    throw ConfigError("observe: unknown environment");
}

/// Reference-suite initial distributions: CartPole all four ~U(-0.05, 0.05);
/// Acrobot all four ~U(-0.1, 0.1); MountainCar position ~U(-0.6, -0.4),
/// velocity exactly zero.
inline std::pair<EnvState, Vec> env_reset(EnvId id, Rng& rng) {
    EnvState st;
    st.id = id;
    switch (id) {
        case EnvId::CartPole:
            for (auto& v : st.s) v = rng.uniform(-0.05, 0.05);
            break;
        case EnvId::Acrobot:
            for (auto& v : st.s) v = rng.uniform(-0.1, 0.1);
            break;
        case EnvId::MountainCar:
            st.s = {rng.uniform(-0.6, -0.4), 0.0, 0.0, 0.0};
            break;
    }
    return {st, observe(st)};
}

inline StepResult env_step(const EnvState& st, int action) {
    using namespace envdetail;
    const EnvSpec spec = env_spec(st.id);
    require(!st.done, "env_step: episode is already done");
    require(action >= 0 && static_cast<std::size_t>(action) < spec.n_actions,
            "env_step: action out of range");

    StepResult r;
    r.state = st;
    r.state.steps = st.steps + 1;
    bool terminated = false;

    switch (st.id) {
        case EnvId::CartPole: {
            double x = st.s[0], x_dot = st.s[1], theta = st.s[2], theta_dot = st.s[3];
            double force = action == 1 ? kForceMag : -kForceMag;
            double costheta = std::cos(theta);
            double sintheta = std::sin(theta);
            double temp =
                (force + kPoleMassLength * theta_dot * theta_dot * sintheta) / kTotalMass;
            double thetaacc =
                (kGravity * sintheta - costheta * temp) /
                (kPoleHalfLength * (4.0 / 3.0 - kMassPole * costheta * costheta / kTotalMass));
            double xacc = temp - kPoleMassLength * thetaacc * costheta / kTotalMass;
            // forward Euler, the reference integrator
            x += kTau * x_dot;
            x_dot += kTau * xacc;
            theta += kTau * theta_dot;
            theta_dot += kTau * thetaacc;
            r.state.s = {x, x_dot, theta, theta_dot};
            terminated = x < -kXThreshold || x > kXThreshold || theta < -kThetaThreshold ||
                         theta > kThetaThreshold;
            r.reward = 1.0;
            break;
        }
        case EnvId::MountainCar: {
            double position = st.s[0], velocity = st.s[1];
            velocity += (action - 1) * kCarForce + std::cos(3.0 * position) * (-kCarGravity);
            velocity = clip(velocity, -kMaxSpeed, kMaxSpeed);
            position += velocity;
            position = clip(position, kMinPosition, kMaxPosition);
            if (position == kMinPosition && velocity < 0.0) velocity = 0.0;
            r.state.s = {position, velocity, 0.0, 0.0};
            terminated = position >= kGoalPosition;
            r.reward = -1.0;
            break;
        }
        case EnvId::Acrobot: {
            double torque = static_cast<double>(action - 1);
            std::array<double, 5> aug = {st.s[0], st.s[1], st.s[2], st.s[3], torque};
            auto ns = rk4_step(aug, kAcrobotDt);
            const double pi = std::numbers::pi;
            double th1 = wrap(ns[0], -pi, pi);
            double th2 = wrap(ns[1], -pi, pi);
            double dth1 = clip(ns[2], -kMaxVel1, kMaxVel1);
            double dth2 = clip(ns[3], -kMaxVel2, kMaxVel2);
            r.state.s = {th1, th2, dth1, dth2};
            terminated = -std::cos(th1) - std::cos(th2 + th1) > 1.0;
            r.reward = terminated ? 0.0 : -1.0;
            break;
        }
    }

    r.done = terminated || r.state.steps >= spec.max_steps;
    r.state.done = r.done;
    r.obs = observe(r.state);
    return r;
}

/// Sum of per-step rewards of a completed episode.
inline double episode_return(std::span<const double> rewards) {
    double total = 0.0;
    for (double r : rewards) total += r;
    return total;
}

}  // namespace slotnet
