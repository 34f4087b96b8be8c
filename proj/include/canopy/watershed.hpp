#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/raster.hpp"

namespace canopy {

struct Marker {
    int col = 0;
    int row = 0;
    double z = 0.0;
};

// Local maxima of the surface: cells (or equal-height plateaus) higher than
// every 8-neighbor and at least min_height tall. A plateau contributes one
// marker at its lexicographically smallest (col, row) cell. Markers are
// ordered by descending height, ties by (col, row), so marker 0 is the
// tallest apex.
inline std::vector<Marker> detect_maxima(const DsmRaster& dsm, double min_height = 2.0) {
    std::vector<Marker> markers;
    if (dsm.cols == 0 || dsm.rows == 0) return markers;

    std::vector<std::uint8_t> visited(dsm.values.size(), 0);
    std::vector<std::pair<int, int>> plateau, frontier;

    for (int row = 0; row < dsm.rows; ++row) {
        for (int col = 0; col < dsm.cols; ++col) {
            if (!dsm.has(col, row) || visited[dsm.index(col, row)]) continue;
            const double z = dsm.at(col, row);

            // Flood the equal-height plateau; reject it if any border
            // neighbor is higher.
            plateau.clear();
            frontier.clear();
            frontier.push_back({col, row});
            visited[dsm.index(col, row)] = 1;
            bool is_max = true;
            while (!frontier.empty()) {
                auto [c, r] = frontier.back();
                frontier.pop_back();
                plateau.push_back({c, r});
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        const int nc = c + dc, nr = r + dr;
                        if (!dsm.has(nc, nr)) continue;
                        const double nz = dsm.at(nc, nr);
                        if (nz > z) {
                            is_max = false;
                        } else if (nz == z && !visited[dsm.index(nc, nr)]) {
                            visited[dsm.index(nc, nr)] = 1;
                            frontier.push_back({nc, nr});
                        }
                    }
            }
            if (!is_max || z < min_height) continue;
            std::pair<int, int> best = plateau.front();
            for (const auto& cell : plateau)
                if (cell < best) best = cell;
            markers.push_back({best.first, best.second, z});
        }
    }

    std::sort(markers.begin(), markers.end(), [](const Marker& a, const Marker& b) {
        if (a.z != b.z) return a.z > b.z;
        if (a.col != b.col) return a.col < b.col;
        return a.row < b.row;
    });
    return markers;
}

// Marker-controlled priority flood: highest cells are claimed first, ties go
// to the smaller marker id, then to the smaller (col, row) so the labeling
// is reproducible. Every filled cell reachable from a marker gets exactly
// one label; zero markers yield an empty labeling.
inline LabelRaster watershed(const DsmRaster& dsm, const std::vector<Marker>& markers) {
    LabelRaster labels;
    labels.origin_x = dsm.origin_x;
    labels.origin_y = dsm.origin_y;
    labels.cell_size = dsm.cell_size;
    labels.resize(dsm.cols, dsm.rows, -1);
    if (markers.empty()) return labels;

    struct Entry {
        double z;
        int marker;
        int col;
        int row;
        bool operator<(const Entry& other) const {
            if (z != other.z) return z < other.z; // max-heap on height
            if (marker != other.marker) return marker > other.marker;
            if (col != other.col) return col > other.col;
            return row > other.row;
        }
    };

    std::priority_queue<Entry> queue;
    for (std::size_t m = 0; m < markers.size(); ++m)
        queue.push({markers[m].z, static_cast<int>(m), markers[m].col, markers[m].row});

    while (!queue.empty()) {
        const Entry e = queue.top();
        queue.pop();
        if (labels.has(e.col, e.row)) continue;
        labels.set(e.col, e.row, e.marker);
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const int nc = e.col + dc, nr = e.row + dr;
                if (!dsm.has(nc, nr) || labels.has(nc, nr)) continue;
                queue.push({dsm.at(nc, nr), e.marker, nc, nr});
            }
    }
    return labels;
}

} // namespace canopy
