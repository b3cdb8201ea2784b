#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "chda/ensemble.hpp"

namespace chda::score {

/// Per-pixel z-scoring statistics from a training set. Pixels with zero
/// spread pass through unscaled (mean subtraction only).
struct NormStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;  // sample std, 1/(N-1)

    static NormStats from_ensemble(const Ensemble& data);

    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
    Eigen::VectorXd denormalize(const Eigen::VectorXd& x) const;

    void write(std::ostream& out) const;
    static NormStats read(std::istream& in);
};

/// Sample diagnostics reported after generation; never used to filter.
struct SampleDiagnostics {
    double channel_fraction = 0.0;  // share of pixels above the facies midpoint
    double in_range_fraction = 0.0; // share with log10 k in [1, 4]
    double min_value = 0.0;
    double max_value = 0.0;
};

SampleDiagnostics diagnose_sample(const Eigen::VectorXd& log10_k, double facies_midpoint = 2.5);

}  // namespace chda::score
