#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include "chda/diffusion.hpp"
#include "chda/normalization.hpp"
#include "chda/score_network.hpp"

namespace chda::score {

/// Pluggable score function s(x_t, t) over flattened fields. Backends:
///  - analytic Gaussian N(mu, var*I):    s = -(x - mu) / (var + sigma_t^2)
///  - analytic point mass at x0:         s = -(x - x0) / sigma_t^2
///  - trained network (u / sigma_t) with its training normalization stats.
class ScoreModel {
public:
    static ScoreModel gaussian(Eigen::VectorXd mean, double variance);
    static ScoreModel pointmass(Eigen::VectorXd x0);
    static ScoreModel network(ScoreNetwork net, std::optional<NormStats> stats);

    Eigen::VectorXd score(const Eigen::VectorXd& x, double t, const VESchedule& sched) const;

    Eigen::Index size() const;
    bool is_network() const { return std::holds_alternative<NetBackend>(backend_); }
    const std::optional<NormStats>& stats() const { return stats_; }

    /// Weight file plus normalization block; analytic backends are not
    /// persistable.
    void save(const std::filesystem::path& path) const;
    static ScoreModel load_network(const std::filesystem::path& path);

private:
    struct GaussBackend {
        Eigen::VectorXd mean;
        double variance;
    };
    struct PointBackend {
        Eigen::VectorXd x0;
    };
    struct NetBackend {
        ScoreNetwork net;
    };
    std::variant<GaussBackend, PointBackend, NetBackend> backend_;
    std::optional<NormStats> stats_;
};

}  // namespace chda::score
