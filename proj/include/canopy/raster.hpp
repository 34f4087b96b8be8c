#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "canopy/errors.hpp"

namespace canopy {

// Row-major 2D grid with a lower-left origin; row 0 is the southernmost row.
// Cells are half-open [lo, hi) with the global max edge folded into the last
// cell, so any coordinate inside the closed extent maps to a valid cell.
template <typename T>
struct Raster {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 1.0;
    int cols = 0;
    int rows = 0;
    std::vector<T> values;
    std::vector<std::uint8_t> filled;

    void resize(int c, int r, T init = T{}) {
        cols = c;
        rows = r;
        values.assign(static_cast<std::size_t>(c) * r, init);
        filled.assign(static_cast<std::size_t>(c) * r, 0);
    }

    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * cols + col;
    }
    bool in_grid(int col, int row) const {
        return col >= 0 && col < cols && row >= 0 && row < rows;
    }
    bool has(int col, int row) const { return in_grid(col, row) && filled[index(col, row)]; }
    T at(int col, int row) const { return values[index(col, row)]; }
    void set(int col, int row, T v) {
        values[index(col, row)] = v;
        filled[index(col, row)] = 1;
    }

    bool in_extent(double x, double y) const {
        return x >= origin_x && x <= origin_x + cols * cell_size &&
               y >= origin_y && y <= origin_y + rows * cell_size;
    }
    int col_of(double x) const {
        int c = static_cast<int>(std::floor((x - origin_x) / cell_size));
        return std::min(std::max(c, 0), cols - 1);
    }
    int row_of(double y) const {
        int r = static_cast<int>(std::floor((y - origin_y) / cell_size));
        return std::min(std::max(r, 0), rows - 1);
    }

    double cell_center_x(int col) const { return origin_x + (col + 0.5) * cell_size; }
    double cell_center_y(int row) const { return origin_y + (row + 0.5) * cell_size; }

    bool all_filled() const {
        for (std::uint8_t f : filled)
            if (!f) return false;
        return true;
    }
    std::size_t filled_count() const {
        std::size_t n = 0;
        for (std::uint8_t f : filled) n += f;
        return n;
    }
};

// Ground elevation surface (m above datum).
using DemRaster = Raster<double>;
// Per-layer top surface (m above ground).
using DsmRaster = Raster<double>;
// Watershed output; value is a marker id, unlabeled cells stay unfilled.
using LabelRaster = Raster<int>;

// Cell count along one axis for an extent of the given span: ceil-based so
// the last cell absorbs a max edge landing exactly on a boundary.
inline int raster_axis_cells(double span, double cell_size) {
    if (!(cell_size > 0.0))
        throw InvalidInputError("raster_axis_cells: cell size must be positive");
    if (span <= 0.0) return 1;
    return std::max(1, static_cast<int>(std::ceil(span / cell_size - 1e-9)));
}

} // namespace canopy
