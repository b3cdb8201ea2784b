#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chda/field.hpp"

namespace chda {

/// Ordered collection of fields sharing one grid, with provenance metadata.
struct Ensemble {
    std::vector<LogPermField> members;
    std::uint64_t seed = 0;
    std::string tag;  // "prior" | "diffusion" | "posterior-iter-i" | ...

    std::size_t size() const { return members.size(); }
    const GridSpec& grid() const { return members.front().grid; }

    void validate() const;

    /// Members as an N_e x N_z row matrix (one flattened field per row).
    Eigen::MatrixXd as_matrix() const;
};

struct MeanAndDeviations {
    LogPermField mean;
    Eigen::MatrixXd deviations;  // N_e x N_z, row j = z_j - z_mean
};

/// Per-cell arithmetic mean and member anomalies. The mean is accumulated in
/// extended precision so per-cell deviation sums vanish to ~1e-12.
/// Throws std::invalid_argument("insufficient ensemble") for < 2 members.
MeanAndDeviations ensemble_mean_and_deviations(const Ensemble& e);

}  // namespace chda
