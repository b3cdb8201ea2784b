#include "chda/channelgen.hpp"

#include <algorithm>
#include <numbers>

namespace chda::channelgen {
namespace {

double draw(const Gaussian& g, RngStream& rng) { return g.mean + g.stddev * rng.normal(); }

double clamp_floor(double v, double floor) { return std::max(v, floor); }

/// Paint one channel body; returns the number of cells newly converted.
std::size_t rasterize_channel(const ChannelParams& p, const GridSpec& grid, RngStream& rng,
                              std::vector<char>& is_channel) {
    constexpr double two_pi = 2.0 * std::numbers::pi;

    const double cx = 0.5 * grid.extent_x();
    const double cy = 0.5 * grid.extent_y();
    const double half_diag = 0.5 * std::hypot(grid.extent_x(), grid.extent_y());

    const double theta = p.orientation_deg * std::numbers::pi / 180.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);

    // Channel frame: u along the channel axis, v across it.
    const double offset = (2.0 * rng.uniform() - 1.0) * half_diag;
    const double phase = two_pi * rng.uniform();
    const double und_phase = two_pi * rng.uniform();

    const double half_width0 = 0.5 * p.channel_width_m();
    std::size_t added = 0;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double rx = grid.cell_x(i) - cx;
            const double ry = grid.cell_y(j) - cy;
            const double u = ct * rx + st * ry;
            const double v = -st * rx + ct * ry;
            const double centerline =
                offset + p.amplitude_m * std::sin(two_pi * u / p.wavelength_m + phase);
            const double half_width =
                half_width0 *
                (1.0 + p.undulation_depth *
                           std::sin(two_pi * u / p.undulation_wavelength_m + und_phase));
            if (std::abs(v - centerline) <= half_width) {
                const std::size_t c = grid.index(i, j);
                if (!is_channel[c]) {
                    is_channel[c] = 1;
                    ++added;
                }
            }
        }
    }
    return added;
}

}  // namespace

ChannelParams sample_params(const ChannelPriors& priors, RngStream& rng) {
    ChannelParams p;
    p.orientation_deg = draw(priors.orientation_deg, rng);
    p.amplitude_m = clamp_floor(draw(priors.amplitude_m, rng), 1e-6);
    p.wavelength_m = clamp_floor(draw(priors.wavelength_m, rng), 1e-6);
    p.width_thickness_ratio = clamp_floor(draw(priors.width_thickness_ratio, rng), 1e-6);
    p.channel_proportion = std::clamp(draw(priors.channel_proportion, rng), 0.05, 0.95);
    p.undulation_wavelength_m = clamp_floor(draw(priors.undulation_wavelength_m, rng), 1e-6);
    p.channel_logk = priors.channel_logk;
    p.background_logk = priors.background_logk;
    p.channel_thickness_m = priors.channel_thickness_m;
    p.undulation_depth = priors.undulation_depth;
    return p;
}

LogPermField generate_field(const ChannelParams& params, const GridSpec& grid, RngStream& rng) {
    grid.validate();
    const std::size_t total = grid.cell_count();
    const auto target = static_cast<std::size_t>(
        std::ceil(params.channel_proportion * static_cast<double>(total)));

    std::vector<char> is_channel(total, 0);
    std::size_t covered = 0;
    while (covered < target) covered += rasterize_channel(params, grid, rng, is_channel);

    LogPermField f(grid, params.background_logk);
    for (std::size_t c = 0; c < total; ++c)
        if (is_channel[c]) f.values[c] = params.channel_logk;
    return f;
}

Ensemble generate_training_set(std::size_t n, const GridSpec& grid, const ChannelPriors& priors,
                               RngStream& rng) {
    if (n < 1) throw std::invalid_argument("generate_training_set: n must be >= 1");
    Ensemble e;
    e.seed = rng.seed();
    e.tag = "prior";
    e.members.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        RngStream member = rng.fork(k);
        RngStream pstream = member.fork("params");
        RngStream gstream = member.fork("geometry");
        const ChannelParams p = sample_params(priors, pstream);
        e.members.push_back(generate_field(p, grid, gstream));
    }
    return e;
}

}  // namespace chda::channelgen
