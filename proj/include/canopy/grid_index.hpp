#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/point_cloud.hpp"

namespace canopy {

// Horizontal binning of a cloud at a fixed cell width (the AFP during
// stratification). Cells are half-open [lo, hi); the grid is sized so the
// cell of a point is always the plain floor mapping, including points on the
// global max edge. Storage is CSR: ids of cell (c, r) live in
// ids[cell_start[r*cols+c] .. cell_start[r*cols+c+1]).
struct GridIndex {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_width = 1.0;
    int cols = 0;
    int rows = 0;
    std::vector<std::uint32_t> cell_start;
    std::vector<std::uint32_t> ids;

    bool empty() const { return cols == 0 || rows == 0; }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows);
    }

    std::pair<int, int> cell_of(double x, double y) const {
        int col = static_cast<int>(std::floor((x - origin_x) / cell_width));
        int row = static_cast<int>(std::floor((y - origin_y) / cell_width));
        return {col, row};
    }

    bool in_grid(int col, int row) const {
        return col >= 0 && col < cols && row >= 0 && row < rows;
    }

    std::span<const std::uint32_t> cell_points(int col, int row) const {
        if (!in_grid(col, row)) return {};
        const std::size_t c = static_cast<std::size_t>(row) * cols + col;
        return {ids.data() + cell_start[c], ids.data() + cell_start[c + 1]};
    }

    double cell_center_x(int col) const { return origin_x + (col + 0.5) * cell_width; }
    double cell_center_y(int row) const { return origin_y + (row + 0.5) * cell_width; }
};

inline GridIndex build_grid(const PointCloud& cloud, double cell_width) {
    if (!(cell_width > 0.0) || !std::isfinite(cell_width))
        throw InvalidInputError("build_grid: cell width must be positive");

    GridIndex grid;
    grid.cell_width = cell_width;
    if (cloud.empty()) return grid;

    const Bounds2D b = compute_bounds(cloud.points);
    grid.origin_x = b.min_x;
    grid.origin_y = b.min_y;
    grid.cols = static_cast<int>(std::floor(b.width() / cell_width)) + 1;
    grid.rows = static_cast<int>(std::floor(b.height() / cell_width)) + 1;

    const std::size_t n_cells = grid.cell_count();
    std::vector<std::uint32_t> counts(n_cells, 0);
    std::vector<std::uint32_t> cell_of_point(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto [c, r] = grid.cell_of(cloud.points[i].x, cloud.points[i].y);
        // Floor on the exact max edge can step just past the last cell.
        c = std::min(std::max(c, 0), grid.cols - 1);
        r = std::min(std::max(r, 0), grid.rows - 1);
        const std::uint32_t cell = static_cast<std::uint32_t>(r) * grid.cols + c;
        cell_of_point[i] = cell;
        ++counts[cell];
    }

    grid.cell_start.assign(n_cells + 1, 0);
    for (std::size_t c = 0; c < n_cells; ++c)
        grid.cell_start[c + 1] = grid.cell_start[c] + counts[c];

    grid.ids.resize(cloud.size());
    std::vector<std::uint32_t> cursor(grid.cell_start.begin(), grid.cell_start.end() - 1);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        grid.ids[cursor[cell_of_point[i]]++] = static_cast<std::uint32_t>(i);
    return grid;
}

} // namespace canopy
