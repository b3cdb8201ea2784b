#include "chda/esmda.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chda/errors.hpp"
#include "chda/parallel.hpp"

namespace chda::da {

void EsmdaConfig::validate() const {
    if (n_assimilations < 1) throw std::invalid_argument("EsmdaConfig: n_assimilations >= 1");
    if (static_cast<int>(alphas.size()) != n_assimilations)
        throw std::invalid_argument("EsmdaConfig: alphas size must equal n_assimilations");
    double inv_sum = 0.0;
    for (double a : alphas) {
        if (a < 1.0) throw std::invalid_argument("EsmdaConfig: every alpha must be >= 1");
        inv_sum += 1.0 / a;
    }
    if (std::abs(inv_sum - 1.0) > 1e-12)
        throw std::invalid_argument("EsmdaConfig: sum of 1/alpha_i must equal 1");
    if (!(bounds.lo < bounds.hi)) throw std::invalid_argument("EsmdaConfig: bad bounds");
}

Ensemble esmda_update(const Ensemble& prior, const Eigen::MatrixXd& d_forecast,
                      const flow::ObservationSet& obs, double alpha,
                      const local::LocalizationMatrix* L, const Bounds& bounds, RngStream& rng) {
    prior.validate();
    const auto n_e = static_cast<Eigen::Index>(prior.size());
    const auto n_d = d_forecast.cols();
    if (d_forecast.rows() != n_e) throw std::invalid_argument("esmda_update: D rows != members");
    if (static_cast<Eigen::Index>(obs.d_obs.values_bar.size()) != n_d)
        throw std::invalid_argument("esmda_update: obs size != data columns");
    if (alpha < 1.0) throw std::invalid_argument("esmda_update: alpha must be >= 1");
    if (n_e < 2) throw std::invalid_argument("insufficient ensemble");

    auto [mean_z, dev_z] = ensemble_mean_and_deviations(prior);
    const Eigen::RowVectorXd mean_d = d_forecast.colwise().mean();
    Eigen::MatrixXd dev_d = d_forecast.rowwise() - mean_d;

    const double norm = 1.0 / static_cast<double>(n_e - 1);
    Eigen::MatrixXd c_zd = dev_z.transpose() * dev_d * norm;  // N_z x N_d
    Eigen::MatrixXd s = dev_d.transpose() * dev_d * norm;     // N_d x N_d
    for (Eigen::Index c = 0; c < n_d; ++c) s(c, c) += alpha * obs.cd_diagonal[c];

    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
        throw SolverError("esmda_update: (C_DD + alpha C_D) is not positive definite "
                          "(conditioning failure)", 0, 0.0);

    // Explicit gain so localization multiplies the same code path bitwise.
    Eigen::MatrixXd gain = llt.solve(c_zd.transpose()).transpose();  // N_z x N_d
    if (L) {
        if (L->entries.rows() != gain.rows() || L->entries.cols() != gain.cols())
            throw std::invalid_argument("esmda_update: taper shape mismatch");
        gain = L->entries.cwiseProduct(gain);
    }

    // Perturbed observations, one forked stream per member.
    Eigen::MatrixXd innovation(n_e, n_d);
    const double sqrt_alpha = std::sqrt(alpha);
    for (Eigen::Index j = 0; j < n_e; ++j) {
        RngStream member = rng.fork(static_cast<std::uint64_t>(j));
        for (Eigen::Index c = 0; c < n_d; ++c) {
            const double eps = std::sqrt(obs.cd_diagonal[c]) * member.normal();
            innovation(j, c) = obs.d_obs.values_bar[c] + sqrt_alpha * eps - d_forecast(j, c);
        }
    }

    Eigen::MatrixXd update = innovation * gain.transpose();  // N_e x N_z

    Ensemble posterior = prior;
    const auto n_z = static_cast<std::size_t>(dev_z.cols());
    for (Eigen::Index j = 0; j < n_e; ++j) {
        auto& vals = posterior.members[static_cast<std::size_t>(j)].values;
        for (std::size_t c = 0; c < n_z; ++c)
            vals[c] = std::clamp(vals[c] + update(j, static_cast<Eigen::Index>(c)), bounds.lo,
                                 bounds.hi);
    }
    return posterior;
}

EsmdaResult run_esmda(const EsmdaConfig& cfg, const Ensemble& prior, const ForwardModel& forward,
                      const LocBuilder& loc_builder, const flow::ObservationSet& obs,
                      RngStream& rng) {
    cfg.validate();
    prior.validate();

    EsmdaResult result;
    result.posterior = prior;
    const auto n_d = static_cast<Eigen::Index>(obs.d_obs.values_bar.size());
    const auto n_e = prior.size();

    for (int state = 0; state <= cfg.n_assimilations; ++state) {
        const auto t0 = std::chrono::steady_clock::now();

        Eigen::MatrixXd d_forecast(static_cast<Eigen::Index>(n_e), n_d);
        parallel_for(n_e, [&](std::size_t j) {
            Eigen::VectorXd d;
            try {
                d = forward(result.posterior.members[j]);
            } catch (const std::exception& e) {
                throw std::runtime_error("run_esmda: forward simulation failed for member " +
                                         std::to_string(j) + " at iteration " +
                                         std::to_string(state) + ": " + e.what());
            }
            if (d.size() != n_d)
                throw std::runtime_error("run_esmda: forward model returned wrong data length");
            d_forecast.row(static_cast<Eigen::Index>(j)) = d.transpose();
        });

        AssimilationRecord rec;
        rec.iteration = state;
        rec.n_e = n_e;
        rec.rmse = data_rmse(d_forecast, obs);
        rec.nv = state == 0 ? 1.0 : normalized_variance(prior, result.posterior);
        rec.prior_tag = state == 0 ? "prior" : "posterior-iter-" + std::to_string(state - 1);
        rec.posterior_tag = "posterior-iter-" + std::to_string(state);

        if (state == cfg.n_assimilations) {
            rec.posterior_tag = rec.prior_tag;
            rec.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.records.push_back(rec);
            break;
        }

        RngStream loc_rng = rng.fork("loc").fork(static_cast<std::uint64_t>(state));
        std::shared_ptr<const local::LocalizationMatrix> taper =
            loc_builder ? loc_builder(state, result.posterior, d_forecast, loc_rng) : nullptr;
        if (taper) {
            rec.taper_method = taper->method;
            rec.n_s = taper->n_s;
        }

        RngStream update_rng = rng.fork("update").fork(static_cast<std::uint64_t>(state));
        result.posterior = esmda_update(result.posterior, d_forecast, obs, cfg.alphas[state],
                                        taper.get(), cfg.bounds, update_rng);
        result.posterior.tag = "posterior-iter-" + std::to_string(state + 1);

        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.records.push_back(rec);
    }
    return result;
}

double normalized_variance(const Ensemble& prior, const Ensemble& post) {
    if (!(prior.grid() == post.grid()))
        throw std::invalid_argument("normalized_variance: grid mismatch");
    auto trace = [](const Ensemble& e) {
        auto [mean, dev] = ensemble_mean_and_deviations(e);
        double sum = 0.0;
        for (Eigen::Index c = 0; c < dev.cols(); ++c)
            sum += dev.col(c).squaredNorm() / static_cast<double>(dev.rows() - 1);
        return sum;
    };
    const double prior_trace = trace(prior);
    if (prior_trace <= 0.0) throw std::invalid_argument("normalized_variance: zero prior variance");
    return trace(post) / prior_trace;
}

double data_rmse(const Eigen::MatrixXd& d, const flow::ObservationSet& obs) {
    if (static_cast<std::size_t>(d.cols()) != obs.d_obs.values_bar.size())
        throw std::invalid_argument("data_rmse: shape mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < d.rows(); ++j)
        for (Eigen::Index c = 0; c < d.cols(); ++c) {
            const double e = d(j, c) - obs.d_obs.values_bar[static_cast<std::size_t>(c)];
            sum += e * e;
        }
    return std::sqrt(sum / static_cast<double>(d.rows() * d.cols()));
}

void write_records_csv(const std::vector<AssimilationRecord>& records, const std::string& method,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    std::ostringstream ss;
    ss.precision(17);
    ss << "iter,rmse,nv,method,Ne,Ns\n";
    for (const auto& r : records)
        ss << r.iteration << ',' << r.rmse << ',' << r.nv << ',' << method << ',' << r.n_e << ','
           << r.n_s << '\n';
    out << ss.str();
}

void write_timings_csv(const std::vector<AssimilationRecord>& records, const std::string& method,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "iter,method,seconds\n";
    for (const auto& r : records)
        out << r.iteration << ',' << method << ',' << r.wall_seconds << '\n';
}

}  // namespace chda::da
