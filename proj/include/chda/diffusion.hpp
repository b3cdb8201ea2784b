#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "chda/rng.hpp"

namespace chda::score {

/// Variance-exploding schedule: dx = sigma^t dW, g(t) = sigma^t,
/// marginal std sigma_t = sqrt((sigma^(2t) - 1) / (2 ln sigma)).
struct VESchedule {
    double sigma = 25.0;
    double terminal_time = 1.0;

    void validate() const {
        if (sigma <= 1.0) throw std::invalid_argument("VESchedule: sigma must be > 1");
        if (terminal_time <= 0.0) throw std::invalid_argument("VESchedule: T must be > 0");
    }

    double g(double t) const { return std::pow(sigma, t); }
    double g_squared(double t) const { return std::pow(sigma, 2.0 * t); }
};

/// Marginal noise standard deviation at time t; rejects t outside [0, T].
inline double sigma_t(double t, const VESchedule& sched) {
    sched.validate();
    if (t < 0.0 || t > sched.terminal_time)
        throw std::invalid_argument("sigma_t: t outside [0, T]");
    if (t == 0.0) return 0.0;
    return std::sqrt((std::pow(sched.sigma, 2.0 * t) - 1.0) / (2.0 * std::log(sched.sigma)));
}

/// x_t = x0 + sigma_t * eps, eps ~ N(0, I). t must lie in (0, T].
inline Eigen::VectorXd perturb(const Eigen::VectorXd& x0, double t, const VESchedule& sched,
                               RngStream& rng) {
    if (t <= 0.0 || t > sched.terminal_time)
        throw std::invalid_argument("perturb: t outside (0, T]");
    const double s = sigma_t(t, sched);
    Eigen::VectorXd x = x0;
    for (Eigen::Index c = 0; c < x.size(); ++c) x[c] += s * rng.normal();
    return x;
}

}  // namespace chda::score
