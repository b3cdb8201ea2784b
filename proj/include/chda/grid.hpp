#pragma once

#include <cstddef>
#include <stdexcept>

namespace chda {

/// Regular 2D cell-centered grid. Units: meters. i indexes x (0..nx-1),
/// j indexes y (0..ny-1); flat storage is row-major, index = j*nx + i.
struct GridSpec {
    int nx = 64;
    int ny = 64;
    double dx = 5.0;
    double dy = 5.0;
    double thickness = 10.0;

    void validate() const {
        if (nx < 2 || ny < 2) throw std::invalid_argument("GridSpec: nx and ny must be >= 2");
        if (dx <= 0.0 || dy <= 0.0 || thickness <= 0.0)
            throw std::invalid_argument("GridSpec: dx, dy, thickness must be > 0");
    }

    std::size_t cell_count() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    bool contains(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }

    double cell_x(int i) const { return (i + 0.5) * dx; }
    double cell_y(int j) const { return (j + 0.5) * dy; }
    double extent_x() const { return nx * dx; }
    double extent_y() const { return ny * dy; }
    double cell_volume() const { return dx * dy * thickness; }

    bool operator==(const GridSpec&) const = default;
};

}  // namespace chda
