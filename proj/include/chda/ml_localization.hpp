#pragma once

#include "chda/localization.hpp"
#include "chda/proxy.hpp"

namespace chda::local {

/// Produces field k of the super-ensemble (diffusion sampler, prior
/// generator, or a lookup into a materialized set).
using FieldSampler = std::function<LogPermField(std::size_t index, RngStream& rng)>;

struct MlLocalizationResult {
    LocalizationMatrix taper;
    proxy::ValidationReport proxy_report;
};

/// The four-step enhanced-localization procedure: train the proxy on the
/// working ensemble (80/20 split), draw N_s fields from the sampler, stream
/// the (z, f(z)) covariances, and apply the pseudo-optimal taper with the
/// WORKING ensemble size N_e in the denominator.
MlLocalizationResult ml_localization(const Ensemble& working, const Eigen::MatrixXd& data,
                                     proxy::Kind kind, const FieldSampler& sampler,
                                     std::size_t n_s, double eta, RngStream& rng,
                                     const proxy::FitConfig* fit_override = nullptr);

}  // namespace chda::local
