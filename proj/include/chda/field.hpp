#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "chda/grid.hpp"

namespace chda {

/// 2D log10-permeability map. Values are log10(k) with k in millidarcy;
/// linear mD appears only at the flow-simulator boundary.
struct LogPermField {
    GridSpec grid;
    std::vector<double> values;  // row-major, length nx*ny

    LogPermField() = default;
    explicit LogPermField(const GridSpec& g, double fill = 0.0)
        : grid(g), values(g.cell_count(), fill) {
        grid.validate();
    }

    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }

    bool all_finite() const {
        return std::all_of(values.begin(), values.end(),
                           [](double v) { return std::isfinite(v); });
    }

    void clip(double lo, double hi) {
        for (double& v : values) v = std::clamp(v, lo, hi);
    }
};

}  // namespace chda
