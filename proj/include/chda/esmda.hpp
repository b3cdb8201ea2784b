#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chda/ensemble.hpp"
#include "chda/flowsim.hpp"
#include "chda/localization.hpp"
#include "chda/rng.hpp"

namespace chda::da {

struct Bounds {
    double lo = 1.0;
    double hi = 4.0;
};

struct EsmdaConfig {
    int n_assimilations = 4;
    std::vector<double> alphas = {4.0, 4.0, 4.0, 4.0};
    Bounds bounds;

    /// Sum of 1/alpha_i must equal 1 within 1e-12 and every alpha_i >= 1.
    void validate() const;
};

struct AssimilationRecord {
    int iteration = 0;  // 0 = prior state, i = after update i
    std::string prior_tag;
    std::string posterior_tag;
    double rmse = 0.0;  // data_rmse of this state's predictions vs observations
    double nv = 1.0;    // normalized variance vs the initial prior
    std::string taper_method = "none";
    std::size_t n_e = 0;
    std::size_t n_s = 0;
    double wall_seconds = 0.0;
};

/// One perturbed-observation ESMDA analysis step:
///   z_a = z_f + K_loc (d_obs + sqrt(alpha) eps - d_f),
///   K_loc = L o [C_zD (C_DD + alpha C_D)^-1],
/// covariances from prior anomalies with 1/(N_e-1); posterior clipped to
/// bounds. L omitted when null. Per-member perturbation streams fork from
/// rng by member index.
Ensemble esmda_update(const Ensemble& prior, const Eigen::MatrixXd& d_forecast,
                      const flow::ObservationSet& obs, double alpha,
                      const local::LocalizationMatrix* L, const Bounds& bounds, RngStream& rng);

using ForwardModel = std::function<Eigen::VectorXd(const LogPermField&)>;

/// Taper factory invoked before each update; may retrain proxies on each
/// call. Returns nullptr for no localization.
using LocBuilder = std::function<std::shared_ptr<const local::LocalizationMatrix>(
    int iteration, const Ensemble& current, const Eigen::MatrixXd& d_forecast, RngStream& rng)>;

struct EsmdaResult {
    Ensemble posterior;
    std::vector<AssimilationRecord> records;  // n_assimilations + 1 states
};

/// Full multiple-data-assimilation loop. Forward simulations run in
/// parallel across members; record i carries the RMSE/NV of the ensemble
/// after i updates (one extra forward sweep evaluates the final posterior).
EsmdaResult run_esmda(const EsmdaConfig& cfg, const Ensemble& prior, const ForwardModel& forward,
                      const LocBuilder& loc_builder, const flow::ObservationSet& obs,
                      RngStream& rng);

/// NV = tr(C_post) / tr(C_prior) over per-cell sample variances.
double normalized_variance(const Ensemble& prior, const Ensemble& post);

/// Root-mean-square over all members and all data of (d - d_obs).
double data_rmse(const Eigen::MatrixXd& d, const flow::ObservationSet& obs);

void write_records_csv(const std::vector<AssimilationRecord>& records, const std::string& method,
                       const std::filesystem::path& path);
void write_timings_csv(const std::vector<AssimilationRecord>& records, const std::string& method,
                       const std::filesystem::path& path);

}  // namespace chda::da
