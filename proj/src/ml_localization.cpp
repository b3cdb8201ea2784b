#include "chda/ml_localization.hpp"

#include "chda/parallel.hpp"

namespace chda::local {

MlLocalizationResult ml_localization(const Ensemble& working, const Eigen::MatrixXd& data,
                                     proxy::Kind kind, const FieldSampler& sampler,
                                     std::size_t n_s, double eta, RngStream& rng,
                                     const proxy::FitConfig* fit_override) {
    working.validate();
    const std::size_t n_e = working.size();
    if (n_s < n_e) throw std::invalid_argument("ml_localization: N_s must be >= N_e");

    proxy::FitConfig cfg;
    if (fit_override) cfg = *fit_override;
    cfg.kind = kind;
    RngStream fit_rng = rng.fork("proxy-fit");
    const proxy::ProxyModel model = proxy::ProxyModel::fit(cfg, working.as_matrix(), data, fit_rng);

    const std::size_t n_z = working.grid().cell_count();
    const std::size_t n_d = static_cast<std::size_t>(data.cols());
    RngStream sample_rng = rng.fork("super");

    // Blocked draining: predictions run in parallel inside each block, the
    // covariance accumulation merges in fixed member order.
    constexpr std::size_t kBlock = 64;
    std::vector<LogPermField> fields(kBlock);
    std::vector<Eigen::VectorXd> preds(kBlock);
    std::size_t produced = 0;
    std::size_t block_fill = 0;
    std::size_t block_at = 0;

    CovariancePair cov = streaming_covariance(n_z, n_d, [&](LogPermField& z, Eigen::VectorXd& d) {
        if (block_at == block_fill) {
            if (produced >= n_s) return false;
            block_fill = std::min(kBlock, n_s - produced);
            block_at = 0;
            for (std::size_t k = 0; k < block_fill; ++k) {
                RngStream member = sample_rng.fork(produced + k);
                fields[k] = sampler(produced + k, member);
            }
            parallel_for(block_fill, [&](std::size_t k) { preds[k] = model.predict(fields[k]); });
            produced += block_fill;
        }
        z = std::move(fields[block_at]);
        d = std::move(preds[block_at]);
        ++block_at;
        return true;
    });

    MlLocalizationResult result;
    result.taper = pseudo_optimal_taper(cov, n_e, eta);
    result.taper.method = "ml-" + proxy::kind_name(kind);
    result.taper.n_s = n_s;
    result.taper.proxy_kind = proxy::kind_name(kind);
    result.proxy_report = model.validation_report();
    return result;
}

}  // namespace chda::local
