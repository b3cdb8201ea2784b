#pragma once

#include <cmath>

#include "chda/ensemble.hpp"
#include "chda/field.hpp"
#include "chda/rng.hpp"

namespace chda::channelgen {

struct Gaussian {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Sampling distributions for the object-based channel model, defaults from
/// the fluvial-reservoir parameter table. channel_thickness_m is the implied
/// channel body thickness used to map the width-to-thickness ratio to a
/// map-view width; undulation_depth is the relative width modulation.
struct ChannelPriors {
    Gaussian orientation_deg{90.0, 30.0};
    Gaussian amplitude_m{250.0, 10.0};
    Gaussian wavelength_m{2000.0, 50.0};
    Gaussian width_thickness_ratio{50.0, 5.0};
    Gaussian channel_proportion{0.40, 0.05};
    Gaussian undulation_wavelength_m{250.0, 10.0};
    double channel_logk = std::log10(2000.0);
    double background_logk = std::log10(50.0);
    double channel_thickness_m = 0.3;
    double undulation_depth = 0.25;
};

/// One realization's channel-system parameters.
struct ChannelParams {
    double orientation_deg = 90.0;
    double amplitude_m = 250.0;
    double wavelength_m = 2000.0;
    double width_thickness_ratio = 50.0;
    double channel_proportion = 0.40;
    double undulation_wavelength_m = 250.0;
    double channel_logk = std::log10(2000.0);
    double background_logk = std::log10(50.0);
    double channel_thickness_m = 0.3;
    double undulation_depth = 0.25;

    double channel_width_m() const { return width_thickness_ratio * channel_thickness_m; }
};

/// Draw each parameter from its prior normal, then clamp to validity:
/// proportion to [0.05, 0.95], strictly-positive lengths to a small floor.
ChannelParams sample_params(const ChannelPriors& priors, RngStream& rng);

/// Rasterize sinusoidal channel bands (later channels overwrite) until the
/// channel fraction first reaches or exceeds channel_proportion. The result
/// is exactly two-valued: {background_logk, channel_logk}.
LogPermField generate_field(const ChannelParams& params, const GridSpec& grid, RngStream& rng);

/// n independent fields, each from independently sampled params; tag "prior".
Ensemble generate_training_set(std::size_t n, const GridSpec& grid, const ChannelPriors& priors,
                               RngStream& rng);

}  // namespace chda::channelgen
