#pragma once

#include <optional>
#include <vector>

#include "chda/score_model.hpp"

namespace chda::score {

struct SamplerConfig {
    int n_steps = 1000;
    double t_cutoff = 1e-3;
    double snr = 0.16;          // corrector signal-to-noise (PC / posterior)
    bool final_denoise = true;  // one Tweedie step at the cutoff
    // Applied after denormalization when the model carries stats.
    double clip_lo = 1.0;
    double clip_hi = 4.0;
    bool apply_clip = true;
};

/// Hard-data conditioning: observed cell indices, values (in the same units
/// as the denormalized field), and observation noise.
struct HardData {
    std::vector<Eigen::Index> cells;
    Eigen::VectorXd values;
    double sigma_obs = 0.01;
};

/// Probability-flow ODE (midpoint rule) from T down to t_cutoff, starting
/// from x_T ~ N(0, sigma_T^2 I); deterministic given the starting noise.
/// Output is denormalized and clipped when the model carries stats.
Eigen::VectorXd sample_ode(const ScoreModel& model, const VESchedule& sched,
                           const SamplerConfig& cfg, RngStream& rng);

/// Predictor-corrector: Euler-Maruyama reverse-SDE predictor plus one
/// Langevin correction per step with step size set from snr.
Eigen::VectorXd sample_pc(const ScoreModel& model, const VESchedule& sched,
                          const SamplerConfig& cfg, RngStream& rng);

/// Reverse-SDE sampling with likelihood guidance: per step the denoised
/// Tweedie estimate x0_hat = x_t + sigma_t^2 s feeds
/// g_lik = -(1/sigma_obs^2) H^T (H x0_hat - y), and the drift uses
/// s + gamma * g_lik. gamma = 0 reproduces sample_pc exactly under the same
/// seed. Observation values are normalized internally when stats exist.
Eigen::VectorXd sample_posterior(const ScoreModel& model, const VESchedule& sched,
                                 const HardData& obs, double gamma, const SamplerConfig& cfg,
                                 RngStream& rng);

/// Tweedie denoised estimate E[x0 | x_t] = x_t + sigma_t^2 s(x_t, t).
Eigen::VectorXd tweedie_denoise(const ScoreModel& model, const Eigen::VectorXd& x_t, double t,
                                const VESchedule& sched);

}  // namespace chda::score
