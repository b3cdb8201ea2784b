#include "chda/localization.hpp"

#include <cmath>
#include <stdexcept>

#include "chda/field_io.hpp"

namespace chda::local {
namespace {

/// Kahan-compensated accumulator over an Eigen array.
struct Compensated {
    Eigen::ArrayXd sum;
    Eigen::ArrayXd comp;

    explicit Compensated(Eigen::Index n) : sum(Eigen::ArrayXd::Zero(n)), comp(Eigen::ArrayXd::Zero(n)) {}

    void add(const Eigen::ArrayXd& v) {
        for (Eigen::Index c = 0; c < sum.size(); ++c) {
            const double y = v[c] - comp[c];
            const double t = sum[c] + y;
            comp[c] = (t - sum[c]) - y;
            sum[c] = t;
        }
    }
};

}  // namespace

void LocalizationMatrix::validate() const {
    for (Eigen::Index j = 0; j < entries.cols(); ++j)
        for (Eigen::Index i = 0; i < entries.rows(); ++i) {
            const double v = entries(i, j);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw std::logic_error("LocalizationMatrix: entry outside [0,1]");
        }
}

double gaspari_cohn(double r, double c) {
    if (r < 0.0 || c <= 0.0) throw std::invalid_argument("gaspari_cohn: need r >= 0, c > 0");
    const double x = r / c;
    if (x >= 2.0) return 0.0;
    if (x <= 1.0) {
        return 1.0 + x * x * (-5.0 / 3.0 + x * (5.0 / 8.0 + x * (0.5 - 0.25 * x)));
    }
    return 4.0 - 5.0 * x + x * x * (5.0 / 3.0 + x * (5.0 / 8.0 + x * (-0.5 + x / 12.0))) -
           2.0 / (3.0 * x);
}

LocalizationMatrix gc_matrix(const GridSpec& grid, const std::vector<flow::WellSpec>& wells,
                             int n_reports, double half_support_m) {
    if (half_support_m <= 0.0) throw std::invalid_argument("gc_matrix: half support must be > 0");
    std::vector<const flow::WellSpec*> monitors;
    for (const auto& w : wells)
        if (w.kind == flow::WellSpec::Kind::Monitor) monitors.push_back(&w);

    const auto n_z = static_cast<Eigen::Index>(grid.cell_count());
    const auto n_w = static_cast<Eigen::Index>(monitors.size());

    Eigen::MatrixXd per_well(n_z, n_w);
    for (Eigen::Index w = 0; w < n_w; ++w) {
        const double wx = grid.cell_x(monitors[w]->i);
        const double wy = grid.cell_y(monitors[w]->j);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                per_well(static_cast<Eigen::Index>(grid.index(i, j)), w) =
                    gaspari_cohn(std::hypot(grid.cell_x(i) - wx, grid.cell_y(j) - wy),
                                 half_support_m);
    }

    LocalizationMatrix L;
    L.method = "gaspari-cohn";
    L.entries.resize(n_z, n_w * n_reports);
    for (int t = 0; t < n_reports; ++t)
        for (Eigen::Index w = 0; w < n_w; ++w) L.entries.col(t * n_w + w) = per_well.col(w);
    L.validate();
    return L;
}

LocalizationMatrix pseudo_optimal_taper(const CovariancePair& cov, std::size_t n_e, double eta) {
    if (n_e < 2) throw std::invalid_argument("pseudo_optimal_taper: N_e must be >= 2");
    if (eta < 0.0) throw std::invalid_argument("pseudo_optimal_taper: eta must be >= 0");
    const auto n_z = cov.c_zd.rows();
    const auto n_d = cov.c_zd.cols();
    if (cov.var_z.size() != n_z || cov.var_d.size() != n_d)
        throw std::invalid_argument("pseudo_optimal_taper: shape mismatch");

    LocalizationMatrix L;
    L.method = "pseudo-optimal";
    L.n_e = n_e;
    L.eta = eta;
    L.entries.resize(n_z, n_d);
    const double ne = static_cast<double>(n_e);
    for (Eigen::Index j = 0; j < n_d; ++j) {
        const double vj = cov.var_d[j];
        for (Eigen::Index i = 0; i < n_z; ++i) {
            const double vi = cov.var_z[i];
            const double c = cov.c_zd(i, j);
            const double c2 = c * c;
            const double prod = vi * vj;
            double entry = 0.0;
            if (c2 > 0.0 && prod > 0.0 && std::abs(c) >= eta * std::sqrt(prod))
                entry = c2 / (c2 + (c2 + prod) / ne);
            L.entries(i, j) = entry;
        }
    }
    L.validate();
    return L;
}

CovariancePair streaming_covariance(std::size_t n_z, std::size_t n_d, const MemberSource& next) {
    const auto nz = static_cast<Eigen::Index>(n_z);
    const auto nd = static_cast<Eigen::Index>(n_d);
    Compensated sum_z(nz), sum_zz(nz), sum_d(nd), sum_dd(nd), sum_zd(nz * nd);

    // Shifted single-pass accumulation: the first member is the pivot, so
    // degenerate directions (constant z or d) cancel exactly.
    Eigen::ArrayXd pivot_z, pivot_d;

    LogPermField z;
    Eigen::VectorXd d;
    Eigen::ArrayXd dz(nz), dd(nd), zd(nz * nd);
    std::size_t n = 0;
    while (next(z, d)) {
        if (static_cast<Eigen::Index>(z.values.size()) != nz || d.size() != nd)
            throw std::invalid_argument("streaming_covariance: member shape mismatch");
        Eigen::Map<const Eigen::ArrayXd> zv(z.values.data(), nz);
        if (n == 0) {
            pivot_z = zv;
            pivot_d = d.array();
        }
        dz = zv - pivot_z;
        dd = d.array() - pivot_d;
        sum_z.add(dz);
        sum_zz.add(dz * dz);
        sum_d.add(dd);
        sum_dd.add(dd * dd);
        for (Eigen::Index j = 0; j < nd; ++j) zd.segment(j * nz, nz) = dz * dd[j];
        sum_zd.add(zd);
        ++n;
    }
    if (n < 2) throw std::invalid_argument("streaming_covariance: need at least 2 members");

    const double dn = static_cast<double>(n);
    const Eigen::ArrayXd mean_z = sum_z.sum / dn;  // mean of z - pivot_z
    const Eigen::ArrayXd mean_d = sum_d.sum / dn;

    CovariancePair cov;
    cov.var_z = ((sum_zz.sum - dn * mean_z * mean_z) / (dn - 1.0)).cwiseMax(0.0).matrix();
    cov.var_d = ((sum_dd.sum - dn * mean_d * mean_d) / (dn - 1.0)).cwiseMax(0.0).matrix();
    cov.c_zd.resize(nz, nd);
    for (Eigen::Index j = 0; j < nd; ++j)
        cov.c_zd.col(j) =
            ((sum_zd.sum.segment(j * nz, nz) - dn * mean_z * mean_d[j]) / (dn - 1.0)).matrix();
    return cov;
}

CovariancePair sample_covariance(const Ensemble& members,
                                 const std::function<Eigen::VectorXd(const LogPermField&)>& predict) {
    std::size_t k = 0;
    std::size_t n_d = 0;
    {
        Eigen::VectorXd probe = predict(members.members.front());
        n_d = static_cast<std::size_t>(probe.size());
    }
    return streaming_covariance(
        members.grid().cell_count(), n_d, [&](LogPermField& z, Eigen::VectorXd& d) {
            if (k >= members.size()) return false;
            z = members.members[k];
            d = predict(z);
            ++k;
            return true;
        });
}

LocalizationMatrix po_localization(const Ensemble& working, const Eigen::MatrixXd& data,
                                   std::size_t n_e, double eta) {
    if (static_cast<std::size_t>(data.rows()) != working.size())
        throw std::invalid_argument("po_localization: data rows must match members");
    std::size_t k = 0;
    CovariancePair cov = streaming_covariance(
        working.grid().cell_count(), static_cast<std::size_t>(data.cols()),
        [&](LogPermField& z, Eigen::VectorXd& d) {
            if (k >= working.size()) return false;
            z = working.members[k];
            d = data.row(static_cast<Eigen::Index>(k)).transpose();
            ++k;
            return true;
        });
    LocalizationMatrix L = pseudo_optimal_taper(cov, n_e, eta);
    L.method = "pseudo-optimal";
    return L;
}

CovariancePair ml_enhanced_covariance(const Ensemble& super,
                                      const std::function<Eigen::VectorXd(const LogPermField&)>& proxy) {
    if (super.size() < 2) throw std::invalid_argument("ml_enhanced_covariance: N_s must be >= 2");
    return sample_covariance(super, proxy);
}

void save_taper_stack(const LocalizationMatrix& L, const GridSpec& grid,
                      const std::filesystem::path& path) {
    Ensemble stack;
    stack.tag = L.method;
    stack.members.reserve(static_cast<std::size_t>(L.entries.cols()));
    for (Eigen::Index j = 0; j < L.entries.cols(); ++j) {
        LogPermField map(grid);
        for (Eigen::Index i = 0; i < L.entries.rows(); ++i)
            map.values[static_cast<std::size_t>(i)] = L.entries(i, j);
        stack.members.push_back(std::move(map));
    }
    save_ensemble(stack, path);
}

}  // namespace chda::local
