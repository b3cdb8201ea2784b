#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chda/ensemble.hpp"
#include "chda/field.hpp"
#include "chda/flowsim.hpp"

namespace chda::local {

/// Dense N_z x N_d taper with entries in [0,1].
struct LocalizationMatrix {
    Eigen::MatrixXd entries;
    std::string method;
    std::size_t n_e = 0;   // working-ensemble size the taper was built for
    std::size_t n_s = 0;   // super-ensemble size behind the covariances (0 if n/a)
    std::string proxy_kind;
    double eta = 0.0;

    void validate() const;
};

/// Cross-covariance between parameters and data plus the marginal variances
/// entering the pseudo-optimal taper.
struct CovariancePair {
    Eigen::MatrixXd c_zd;   // N_z x N_d
    Eigen::VectorXd var_z;  // N_z
    Eigen::VectorXd var_d;  // N_d
};

/// Fifth-order piecewise-rational Gaspari-Cohn correlation taper with
/// half-support c; compactly supported on [0, 2c].
double gaspari_cohn(double r, double c);

/// Distance-based taper: entry (cell, datum) = gaspari_cohn(distance from
/// cell center to the datum's well cell, c). All data of one well share a
/// column pattern; time order is (t0 wells..., t1 wells, ...).
LocalizationMatrix gc_matrix(const GridSpec& grid, const std::vector<flow::WellSpec>& wells,
                             int n_reports, double half_support_m);

/// Furrer-Bengtsson-style pseudo-optimal Schur taper from plug-in
/// covariances:
///   L_ij = c_ij^2 / (c_ij^2 + (c_ij^2 + c_ii c_jj)/N_e)
/// then L_ij = 0 wherever |c_ij| < eta * sqrt(c_ii c_jj).
LocalizationMatrix pseudo_optimal_taper(const CovariancePair& cov, std::size_t n_e, double eta);

/// One member of a (super-)ensemble paired with its predicted data vector.
using MemberSource = std::function<bool(LogPermField& z, Eigen::VectorXd& d)>;

/// Streaming single-pass cross-covariance/variance accumulation with
/// compensated summation; 1/(N-1) normalization. The source is drained
/// until it returns false; members are never materialized together.
CovariancePair streaming_covariance(std::size_t n_z, std::size_t n_d, const MemberSource& next);

/// Covariances of (z, predict(z)) over an in-memory ensemble.
CovariancePair sample_covariance(const Ensemble& members,
                                 const std::function<Eigen::VectorXd(const LogPermField&)>& predict);

/// Plain pseudo-optimal method: covariances from the working ensemble and
/// its simulated data (row j of data = member j).
LocalizationMatrix po_localization(const Ensemble& working, const Eigen::MatrixXd& data,
                                   std::size_t n_e, double eta);

/// ML-enhanced covariance: super-ensemble fields with proxy predictions.
CovariancePair ml_enhanced_covariance(const Ensemble& super,
                                      const std::function<Eigen::VectorXd(const LogPermField&)>& proxy);

void save_taper_stack(const LocalizationMatrix& L, const GridSpec& grid,
                      const std::filesystem::path& path);

}  // namespace chda::local
