#pragma once

#include <filesystem>
#include <vector>

#include "chda/ensemble.hpp"
#include "chda/normalization.hpp"
#include "chda/score_network.hpp"

namespace chda::score {

/// Momentum SGD with a cosine learning-rate schedule (lr_max -> lr_min over
/// the configured epochs). Early stopping triggers after `patience` epochs
/// without improving the best epoch loss (0 disables it).
struct OptConfig {
    int epochs = 200;
    int batch_size = 16;
    double lr_max = 1e-4;
    double lr_min = 1e-6;
    double momentum = 0.9;
    double t_cutoff = 1e-3;
    int patience = 0;
};

struct EpochLoss {
    int epoch = 0;
    double loss = 0.0;
    double best_loss = 0.0;  // running minimum
};

struct TrainResult {
    ScoreNetwork net;
    std::vector<EpochLoss> trajectory;
    int epochs_run = 0;
};

/// Optimizer + position state for exact resume.
struct Checkpoint {
    ScoreNetwork net;
    std::vector<double> momentum;
    int next_epoch = 0;
    double best_loss = 0.0;
    std::uint64_t rng_seed = 0, rng_stream = 0, rng_counter = 0;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

/// Denoising score matching on pre-normalized fields: per sample draw
/// t ~ U(t_cutoff, T), eps ~ N(0, I), and minimize ||eps + sigma_t s(x_t,t)||^2.
/// Aborts with diagnostics on a non-finite loss. Zero epochs returns the
/// initial weights unchanged. `resume` continues from a checkpoint.
TrainResult dsm_train(const Eigen::MatrixXd& data, const NetworkSpec& spec,
                      const VESchedule& sched, const OptConfig& opt, RngStream& rng,
                      const Checkpoint* resume = nullptr,
                      const std::filesystem::path& checkpoint_path = {});

void write_loss_csv(const std::vector<EpochLoss>& trajectory, const std::filesystem::path& path);

/// Ensemble rows as normalized training matrix.
Eigen::MatrixXd normalized_training_matrix(const Ensemble& data, const NormStats& stats);

}  // namespace chda::score
