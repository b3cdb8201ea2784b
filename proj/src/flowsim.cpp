#include "chda/flowsim.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "chda/errors.hpp"

namespace chda::flow {
namespace {

// q[m3/day] = kDarcy * k[mD] * A[m2] / (mu[cP] * L[m]) * dp[bar]
constexpr double kDarcy = 8.5270171e-3;

struct Stencil {
    int nx = 0, ny = 0;
    std::vector<double> tx;    // (nx-1)*ny, face (i,j)-(i+1,j)
    std::vector<double> ty;    // nx*(ny-1), face (i,j)-(i,j+1)
    std::vector<double> diag;  // accumulation/dt + sum of face transmissibilities

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    // y = A x with A = diag - offdiagonal transmissibility couplings (SPD).
    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = idx(i, j);
                double v = diag[c] * x[c];
                if (i > 0) v -= tx[static_cast<std::size_t>(j) * (nx - 1) + i - 1] * x[c - 1];
                if (i < nx - 1) v -= tx[static_cast<std::size_t>(j) * (nx - 1) + i] * x[c + 1];
                if (j > 0) v -= ty[idx(i, j - 1)] * x[c - nx];
                if (j < ny - 1) v -= ty[c] * x[c + nx];
                y[c] = v;
            }
        }
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
    return s;
}

/// Jacobi-preconditioned conjugate gradients on the SPD stencil system.
/// Returns iterations used; throws SolverError at cg_max_iter.
int solve_cg(const Stencil& A, const std::vector<double>& b, std::vector<double>& x,
             double rel_tol, int max_iter) {
    const std::size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), ap(n);

    A.apply(x, ap);
    for (std::size_t c = 0; c < n; ++c) r[c] = b[c] - ap[c];
    const double bnorm = std::sqrt(dot(b, b));
    const double stop = rel_tol * (bnorm > 0.0 ? bnorm : 1.0);

    double rnorm = std::sqrt(dot(r, r));
    if (rnorm <= stop) return 0;

    for (std::size_t c = 0; c < n; ++c) z[c] = r[c] / A.diag[c];
    p = z;
    double rz = dot(r, z);

    for (int it = 1; it <= max_iter; ++it) {
        A.apply(p, ap);
        const double alpha = rz / dot(p, ap);
        for (std::size_t c = 0; c < n; ++c) {
            x[c] += alpha * p[c];
            r[c] -= alpha * ap[c];
        }
        rnorm = std::sqrt(dot(r, r));
        if (rnorm <= stop) return it;
        for (std::size_t c = 0; c < n; ++c) z[c] = r[c] / A.diag[c];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t c = 0; c < n; ++c) p[c] = z[c] + beta * p[c];
    }
    throw SolverError("pressure solve did not converge: " + std::to_string(max_iter) +
                          " iterations, residual " + std::to_string(rnorm / (bnorm > 0 ? bnorm : 1)),
                      max_iter, rnorm);
}

}  // namespace

void SimConfig::validate() const {
    if (porosity <= 0 || total_compressibility_per_bar <= 0 || viscosity_cp <= 0 ||
        initial_pressure_bar <= 0 || duration_days <= 0 || injection_rate_m3_per_year < 0)
        throw std::invalid_argument("SimConfig: parameters must be positive");
    if (n_reports < 1 || substeps_per_report < 1)
        throw std::invalid_argument("SimConfig: report/substep counts must be >= 1");
}

void PressureSeries::validate() const {
    if (values_bar.size() != times_days.size() * static_cast<std::size_t>(n_wells))
        throw std::invalid_argument("PressureSeries: size mismatch");
    for (double v : values_bar)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("PressureSeries: values must be finite and >= 0");
}

std::vector<WellSpec> five_spot_wells(const GridSpec& grid, const SimConfig& cfg,
                                      int monitor_offset_cells) {
    const int ic = grid.nx / 2;
    const int jc = grid.ny / 2;
    const int d = monitor_offset_cells;
    std::vector<WellSpec> wells = {
        {ic, jc, WellSpec::Kind::Injector, cfg.injection_rate_m3_per_day()},
        {ic, jc + d, WellSpec::Kind::Monitor, 0.0},  // N
        {ic + d, jc, WellSpec::Kind::Monitor, 0.0},  // E
        {ic, jc - d, WellSpec::Kind::Monitor, 0.0},  // S
        {ic - d, jc, WellSpec::Kind::Monitor, 0.0},  // W
    };
    validate_wells(grid, wells);
    return wells;
}

void validate_wells(const GridSpec& grid, const std::vector<WellSpec>& wells) {
    int injectors = 0, monitors = 0;
    int ic = -1, jc = -1;
    for (const auto& w : wells) {
        if (!grid.contains(w.i, w.j)) throw std::invalid_argument("well outside grid");
        if (w.kind == WellSpec::Kind::Injector) {
            ++injectors;
            ic = w.i;
            jc = w.j;
        } else {
            ++monitors;
        }
    }
    if (injectors != 1) throw std::invalid_argument("exactly one injector required");
    if (monitors != 4) throw std::invalid_argument("exactly four monitors required");
    if (ic != grid.nx / 2 || jc != grid.ny / 2)
        throw std::invalid_argument("injector must sit at grid center");
    double dist = -1.0;
    for (const auto& w : wells) {
        if (w.kind != WellSpec::Kind::Monitor) continue;
        const double r = std::hypot((w.i - ic) * grid.dx, (w.j - jc) * grid.dy);
        if (dist < 0.0) dist = r;
        else if (std::abs(r - dist) > 1e-9)
            throw std::invalid_argument("monitors must be equidistant from injector");
    }
}

SimResult simulate_detailed(const LogPermField& z, const SimConfig& cfg,
                            const std::vector<WellSpec>& wells) {
    cfg.validate();
    z.grid.validate();
    if (!z.all_finite()) throw std::invalid_argument("simulate: non-finite permeability input");
    validate_wells(z.grid, wells);

    const GridSpec& g = z.grid;
    const int nx = g.nx, ny = g.ny;
    const std::size_t n = g.cell_count();
    const double dt = cfg.report_interval_days() / cfg.substeps_per_report;
    const double accum = cfg.porosity * cfg.total_compressibility_per_bar * g.cell_volume() / dt;

    // Harmonic-mean face transmissibilities from linear-mD permeabilities.
    std::vector<double> k(n);
    for (std::size_t c = 0; c < n; ++c) k[c] = std::pow(10.0, z.values[c]);

    Stencil A;
    A.nx = nx;
    A.ny = ny;
    A.tx.assign(static_cast<std::size_t>(nx - 1) * ny, 0.0);
    A.ty.assign(static_cast<std::size_t>(nx) * (ny - 1), 0.0);
    A.diag.assign(n, accum);
    const double fx = kDarcy * g.dy * g.thickness / (cfg.viscosity_cp * g.dx);
    const double fy = kDarcy * g.dx * g.thickness / (cfg.viscosity_cp * g.dy);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const double kl = k[g.index(i, j)], kr = k[g.index(i + 1, j)];
            const double t = fx * 2.0 * kl * kr / (kl + kr);
            A.tx[static_cast<std::size_t>(j) * (nx - 1) + i] = t;
            A.diag[g.index(i, j)] += t;
            A.diag[g.index(i + 1, j)] += t;
        }
    }
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double kl = k[g.index(i, j)], ku = k[g.index(i, j + 1)];
            const double t = fy * 2.0 * kl * ku / (kl + ku);
            A.ty[g.index(i, j)] = t;
            A.diag[g.index(i, j)] += t;
            A.diag[g.index(i, j + 1)] += t;
        }
    }

    std::vector<double> q(n, 0.0);
    std::vector<const WellSpec*> monitors;
    for (const auto& w : wells) {
        if (w.kind == WellSpec::Kind::Injector) q[g.index(w.i, w.j)] += w.rate_m3_per_day;
        else monitors.push_back(&w);
    }

    SimResult result;
    result.series.n_wells = static_cast<int>(monitors.size());
    std::vector<double> p(n, cfg.initial_pressure_bar), b(n);

    for (int rep = 0; rep < cfg.n_reports; ++rep) {
        for (int s = 0; s < cfg.substeps_per_report; ++s) {
            for (std::size_t c = 0; c < n; ++c) b[c] = accum * p[c] + q[c];
            result.total_cg_iterations += solve_cg(A, b, p, cfg.cg_rel_tol, cfg.cg_max_iter);
        }
        result.series.times_days.push_back((rep + 1) * cfg.report_interval_days());
        for (const WellSpec* m : monitors)
            result.series.values_bar.push_back(p[g.index(m->i, m->j)]);
        result.report_states.push_back(p);
    }
    result.series.validate();
    return result;
}

PressureSeries simulate(const LogPermField& z, const SimConfig& cfg,
                        const std::vector<WellSpec>& wells) {
    return simulate_detailed(z, cfg, wells).series;
}

ObservationSet observe(const PressureSeries& truth, double noise_frac, RngStream& rng) {
    if (noise_frac < 0.0) throw std::invalid_argument("observe: noise_frac must be >= 0");
    ObservationSet obs;
    obs.noise_frac = noise_frac;
    obs.d_obs = truth;
    obs.cd_diagonal.resize(truth.values_bar.size());
    for (std::size_t c = 0; c < truth.values_bar.size(); ++c) {
        const double sigma = noise_frac * truth.values_bar[c];
        obs.cd_diagonal[c] = sigma * sigma;
        obs.d_obs.values_bar[c] = truth.values_bar[c] + sigma * rng.normal();
    }
    return obs;
}

double peaceman_well_index(const GridSpec& grid, double k_md, double viscosity_cp) {
    const double r_eq = 0.2 * grid.dx;
    const double rw = 0.1;  // m
    return 2.0 * std::numbers::pi * kDarcy * k_md * grid.thickness /
           (viscosity_cp * std::log(r_eq / rw));
}

namespace {
void write_csv_payload(std::ostream& out, const PressureSeries& s,
                       const std::vector<double>* sigma) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "report_day,well_N,well_E,well_S,well_W";
    if (sigma) ss << ",sigma_N,sigma_E,sigma_S,sigma_W";
    ss << '\n';
    for (std::size_t t = 0; t < s.times_days.size(); ++t) {
        ss << s.times_days[t];
        for (int w = 0; w < s.n_wells; ++w) ss << ',' << s.value(static_cast<int>(t), w);
        if (sigma)
            for (int w = 0; w < s.n_wells; ++w)
                ss << ',' << std::sqrt((*sigma)[t * s.n_wells + w]);
        ss << '\n';
    }
    out << ss.str();
}
}  // namespace

void write_series_csv(const PressureSeries& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write_csv_payload(out, s, nullptr);
}

void write_observations_csv(const ObservationSet& o, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write_csv_payload(out, o.d_obs, &o.cd_diagonal);
}

}  // namespace chda::flow
