#pragma once

#include <filesystem>
#include <vector>

#include "chda/field.hpp"
#include "chda/rng.hpp"

namespace chda::flow {

struct WellSpec {
    enum class Kind { Injector, Monitor };
    int i = 0;
    int j = 0;
    Kind kind = Kind::Monitor;
    double rate_m3_per_day = 0.0;  // injector only
};

/// Single-phase slightly-compressible flow configuration.
/// Unit system: m, mD, bar, day, cP. The default viscosity/compressibility
/// pair puts background pressure-front arrival times inside the two-year
/// monitoring window (channel paths respond within a month), so monitor
/// responses are connectivity-dominated and informative at 1% noise.
struct SimConfig {
    double porosity = 0.3;
    double total_compressibility_per_bar = 4e-3;
    double viscosity_cp = 250.0;
    double initial_pressure_bar = 150.0;
    double duration_days = 730.0;
    int n_reports = 24;
    double injection_rate_m3_per_year = 1000.0;
    int substeps_per_report = 4;
    double cg_rel_tol = 1e-10;
    int cg_max_iter = 20000;

    void validate() const;
    double report_interval_days() const { return duration_days / n_reports; }
    double injection_rate_m3_per_day() const { return injection_rate_m3_per_year / 365.0; }
};

/// Monitor pressures: n_reports report times x 4 wells, flattened
/// time-major well-minor (length 96 for the standard configuration).
struct PressureSeries {
    std::vector<double> times_days;
    std::vector<double> values_bar;  // times.size() * n_wells
    int n_wells = 4;

    double value(int t_idx, int well_idx) const {
        return values_bar[static_cast<std::size_t>(t_idx) * n_wells + well_idx];
    }
    void validate() const;
};

/// Observed data with its diagonal error model C_D.
struct ObservationSet {
    PressureSeries d_obs;
    std::vector<double> cd_diagonal;  // (noise_frac * truth)^2, per datum
    double noise_frac = 0.0;
};

/// simulate() plus the full pressure state at each report time, for
/// diagnostics and conservation audits.
struct SimResult {
    PressureSeries series;
    std::vector<std::vector<double>> report_states;  // n_reports fields
    long total_cg_iterations = 0;
};

/// Central injector plus four monitors at the given cardinal offset
/// (order: N, E, S, W).
std::vector<WellSpec> five_spot_wells(const GridSpec& grid, const SimConfig& cfg,
                                      int monitor_offset_cells);

/// Validate the five-spot invariants: one injector at grid center, four
/// monitors equidistant from it in the cardinal directions.
void validate_wells(const GridSpec& grid, const std::vector<WellSpec>& wells);

/// Fully implicit backward-Euler pressure march: harmonic-mean
/// transmissibilities, no-flow outer boundaries, injector as rate source,
/// Jacobi-preconditioned CG per time step. Throws SolverError with
/// iteration diagnostics on non-convergence; rejects non-finite inputs.
SimResult simulate_detailed(const LogPermField& z, const SimConfig& cfg,
                            const std::vector<WellSpec>& wells);

PressureSeries simulate(const LogPermField& z, const SimConfig& cfg,
                        const std::vector<WellSpec>& wells);

/// d_obs = truth + eps, eps ~ N(0, diag((noise_frac * truth)^2)).
ObservationSet observe(const PressureSeries& truth, double noise_frac, RngStream& rng);

/// Peaceman well index for an isotropic cell, r_eq = 0.2*dx:
/// q = WI * (p_bh - p_cell) with WI in m3/day/bar for k in mD.
double peaceman_well_index(const GridSpec& grid, double k_md, double viscosity_cp);

void write_series_csv(const PressureSeries& s, const std::filesystem::path& path);
void write_observations_csv(const ObservationSet& o, const std::filesystem::path& path);

}  // namespace chda::flow
