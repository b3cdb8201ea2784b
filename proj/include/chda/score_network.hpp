#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "chda/diffusion.hpp"
#include "chda/rng.hpp"

namespace chda::score {

/// Compact fully-convolutional residual score network: conv_in lifts the
/// field to `channels`, each block applies two same-padded KxK convolutions
/// with an additive per-channel time embedding and a residual link, and
/// conv_out projects back to one channel. Diffusion time enters through
/// Gaussian Fourier features passed through a one-layer MLP. The raw output
/// u predicts -eps; the score is u / sigma_t.
struct NetworkSpec {
    int height = 16;
    int width = 16;
    int channels = 16;
    int n_blocks = 3;
    int kernel = 3;
    int time_embed_dim = 32;
    double fourier_scale = 16.0;

    void validate() const;
    std::size_t n_params() const;
    std::size_t field_size() const { return static_cast<std::size_t>(height) * width; }
};

class ScoreNetwork {
public:
    ScoreNetwork() = default;

    /// Seeded He-style initialization; conv_out is down-scaled so the
    /// untrained output starts near zero.
    ScoreNetwork(const NetworkSpec& spec, RngStream& rng);

    const NetworkSpec& spec() const { return spec_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& fourier_freqs() const { return fourier_freqs_; }

    /// Raw output u(x, t), same shape as x.
    Eigen::VectorXd forward(const Eigen::VectorXd& x, double t) const;

    /// Denoising-score-matching sample loss ||eps + u(x0 + sigma_t*eps, t)||^2
    /// (sum over pixels) with its gradient accumulated into grad (which must
    /// be zero-initialized by the caller and have n_params entries).
    double loss_and_grad(const Eigen::VectorXd& x0, double t, const Eigen::VectorXd& eps,
                         const VESchedule& sched, std::vector<double>& grad) const;

    void save(const std::filesystem::path& path) const;
    static ScoreNetwork load(const std::filesystem::path& path);
    void write(std::ostream& out) const;
    static ScoreNetwork read(std::istream& in);

private:
    NetworkSpec spec_;
    std::vector<double> params_;
    std::vector<double> fourier_freqs_;  // time_embed_dim / 2, non-trainable

    struct Workspace;
    void run_forward(const Eigen::VectorXd& x, double t, Workspace& ws) const;
};

}  // namespace chda::score
