#include "chda/score_samplers.hpp"

#include <cmath>
#include <stdexcept>

namespace chda::score {
namespace {

void check_finite(const Eigen::VectorXd& x, const char* where) {
    if (!x.allFinite()) throw std::runtime_error(std::string(where) + ": non-finite state");
}

Eigen::VectorXd draw_normal(Eigen::Index n, RngStream& rng) {
    Eigen::VectorXd z(n);
    for (Eigen::Index c = 0; c < n; ++c) z[c] = rng.normal();
    return z;
}

Eigen::VectorXd finish(const ScoreModel& model, const SamplerConfig& cfg, Eigen::VectorXd x) {
    if (model.stats()) {
        x = model.stats()->denormalize(x);
        if (cfg.apply_clip)
            for (Eigen::Index c = 0; c < x.size(); ++c)
                x[c] = std::clamp(x[c], cfg.clip_lo, cfg.clip_hi);
    }
    return x;
}

struct Guidance {
    std::vector<Eigen::Index> cells;
    Eigen::VectorXd values;        // model-space observation values
    std::vector<double> inv_var;   // model-space 1/sigma_obs^2 per cell
    double gamma = 0.0;

    bool active() const { return gamma != 0.0 && !cells.empty(); }
};

Guidance make_guidance(const ScoreModel& model, const HardData& obs, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("sample_posterior: gamma must be >= 0");
    if (obs.cells.size() != static_cast<std::size_t>(obs.values.size()))
        throw std::invalid_argument("sample_posterior: cells/values size mismatch");
    if (!obs.cells.empty() && obs.sigma_obs <= 0.0)
        throw std::invalid_argument("sample_posterior: sigma_obs must be > 0");
    Guidance g;
    g.gamma = gamma;
    g.cells = obs.cells;
    g.values.resize(obs.values.size());
    g.inv_var.resize(obs.cells.size());
    for (std::size_t k = 0; k < obs.cells.size(); ++k) {
        const Eigen::Index cell = obs.cells[k];
        if (cell < 0 || cell >= model.size())
            throw std::invalid_argument("sample_posterior: observation cell out of range");
        double value = obs.values[static_cast<Eigen::Index>(k)];
        double sigma = obs.sigma_obs;
        if (model.stats()) {
            const double m = model.stats()->mean[cell];
            const double s = model.stats()->stddev[cell];
            value = s > 0.0 ? (value - m) / s : value - m;
            if (s > 0.0) sigma /= s;
        }
        g.values[static_cast<Eigen::Index>(k)] = value;
        g.inv_var[k] = 1.0 / (sigma * sigma);
    }
    return g;
}

/// Guided score s + gamma * g_lik with the Tweedie-denoised likelihood term.
Eigen::VectorXd guided_score(const ScoreModel& model, const Guidance& g, const Eigen::VectorXd& x,
                             double t, const VESchedule& sched) {
    Eigen::VectorXd s = model.score(x, t, sched);
    if (!g.active()) return s;
    const double st = sigma_t(t, sched);
    const double st2 = st * st;
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        const Eigen::Index cell = g.cells[k];
        const double x0_hat = x[cell] + st2 * s[cell];
        s[cell] += g.gamma * g.inv_var[k] * (g.values[static_cast<Eigen::Index>(k)] - x0_hat);
    }
    return s;
}

/// Shared predictor-corrector loop; gamma = 0 + empty guidance is the plain
/// PC sampler, consuming RNG identically.
Eigen::VectorXd run_pc(const ScoreModel& model, const VESchedule& sched, const Guidance& guide,
                       const SamplerConfig& cfg, RngStream& rng) {
    sched.validate();
    if (cfg.n_steps < 2) throw std::invalid_argument("sampler: n_steps must be >= 2");
    const Eigen::Index n = model.size();
    const double T = sched.terminal_time;
    const double sigma_T = sigma_t(T, sched);
    const double dt = (T - cfg.t_cutoff) / cfg.n_steps;

    Eigen::VectorXd x = sigma_T * draw_normal(n, rng);
    for (int k = 0; k < cfg.n_steps; ++k) {
        const double t = T - k * dt;
        const double g2 = sched.g_squared(t);

        // Predictor: Euler-Maruyama on the reverse SDE.
        Eigen::VectorXd s = guided_score(model, guide, x, t, sched);
        Eigen::VectorXd z = draw_normal(n, rng);
        x += g2 * dt * s + std::sqrt(g2 * dt) * z;
        check_finite(x, "sample_pc predictor");

        // Corrector: one Langevin step at the new time level.
        const double t_next = T - (k + 1) * dt;
        const double t_corr = std::max(t_next, cfg.t_cutoff);
        Eigen::VectorXd sc = guided_score(model, guide, x, t_corr, sched);
        Eigen::VectorXd zc = draw_normal(n, rng);
        const double grad_norm = sc.norm();
        if (grad_norm > 0.0 && cfg.snr > 0.0) {
            const double step = 2.0 * std::pow(cfg.snr * zc.norm() / grad_norm, 2.0);
            x += step * sc + std::sqrt(2.0 * step) * zc;
            check_finite(x, "sample_pc corrector");
        }
    }

    if (cfg.final_denoise) {
        const Eigen::VectorXd s = guided_score(model, guide, x, cfg.t_cutoff, sched);
        const double st = sigma_t(cfg.t_cutoff, sched);
        x += st * st * s;
        check_finite(x, "sample_pc denoise");
    }
    return x;
}

}  // namespace

Eigen::VectorXd tweedie_denoise(const ScoreModel& model, const Eigen::VectorXd& x_t, double t,
                                const VESchedule& sched) {
    const double st = sigma_t(t, sched);
    return x_t + st * st * model.score(x_t, t, sched);
}

Eigen::VectorXd sample_ode(const ScoreModel& model, const VESchedule& sched,
                           const SamplerConfig& cfg, RngStream& rng) {
    sched.validate();
    if (cfg.n_steps < 2) throw std::invalid_argument("sample_ode: n_steps must be >= 2");
    const Eigen::Index n = model.size();
    const double T = sched.terminal_time;
    const double sigma_T = sigma_t(T, sched);
    const double dt = -(T - cfg.t_cutoff) / cfg.n_steps;  // negative: T -> cutoff

    auto drift = [&](const Eigen::VectorXd& x, double t) -> Eigen::VectorXd {
        return -0.5 * sched.g_squared(t) * model.score(x, t, sched);
    };

    Eigen::VectorXd x = sigma_T * draw_normal(n, rng);
    for (int k = 0; k < cfg.n_steps; ++k) {
        const double t = T + k * dt;
        const Eigen::VectorXd mid = x + 0.5 * dt * drift(x, t);
        x += dt * drift(mid, t + 0.5 * dt);
        check_finite(x, "sample_ode");
    }
    if (cfg.final_denoise) {
        x = tweedie_denoise(model, x, cfg.t_cutoff, sched);
        check_finite(x, "sample_ode denoise");
    }
    return finish(model, cfg, std::move(x));
}

Eigen::VectorXd sample_pc(const ScoreModel& model, const VESchedule& sched,
                          const SamplerConfig& cfg, RngStream& rng) {
    Guidance none;
    return finish(model, cfg, run_pc(model, sched, none, cfg, rng));
}

Eigen::VectorXd sample_posterior(const ScoreModel& model, const VESchedule& sched,
                                 const HardData& obs, double gamma, const SamplerConfig& cfg,
                                 RngStream& rng) {
    const Guidance guide = make_guidance(model, obs, gamma);
    return finish(model, cfg, run_pc(model, sched, guide, cfg, rng));
}

}  // namespace chda::score
