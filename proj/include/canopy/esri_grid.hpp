#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "canopy/errors.hpp"
#include "canopy/raster.hpp"

namespace canopy {

// ESRI ASCII grid I/O. Header order ncols/nrows/xllcorner/yllcorner/cellsize
// [/NODATA_value], then row-major values, north-up (first data row is the
// northernmost). Internally row 0 is the southernmost, so rows are flipped.

inline DemRaster read_esri_grid(std::istream& in) {
    DemRaster grid;
    double nodata = -9999.0;
    bool have_nodata = false;
    int ncols = -1, nrows = -1;
    double xll = 0.0, yll = 0.0, cell = 1.0;

    std::string key;
    for (int i = 0; i < 6; ++i) {
        std::streampos pos = in.tellg();
        if (!(in >> key)) throw ParseError("esri grid: truncated header");
        std::string lower = key;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (lower == "ncols") {
            if (!(in >> ncols)) throw ParseError("esri grid: bad ncols");
        } else if (lower == "nrows") {
            if (!(in >> nrows)) throw ParseError("esri grid: bad nrows");
        } else if (lower == "xllcorner") {
            if (!(in >> xll)) throw ParseError("esri grid: bad xllcorner");
        } else if (lower == "yllcorner") {
            if (!(in >> yll)) throw ParseError("esri grid: bad yllcorner");
        } else if (lower == "cellsize") {
            if (!(in >> cell)) throw ParseError("esri grid: bad cellsize");
        } else if (lower == "nodata_value") {
            if (!(in >> nodata)) throw ParseError("esri grid: bad NODATA_value");
            have_nodata = true;
        } else {
            // Sixth token already belongs to the data block.
            in.seekg(pos);
            break;
        }
    }
    if (ncols <= 0 || nrows <= 0)
        throw ParseError("esri grid: missing or non-positive ncols/nrows");
    if (!(cell > 0.0)) throw ParseError("esri grid: non-positive cellsize");

    grid.origin_x = xll;
    grid.origin_y = yll;
    grid.cell_size = cell;
    grid.resize(ncols, nrows);
    for (int file_row = 0; file_row < nrows; ++file_row) {
        const int r = nrows - 1 - file_row; // north-up to south-origin
        for (int c = 0; c < ncols; ++c) {
            double v;
            if (!(in >> v))
                throw ParseError("esri grid: truncated data at row " +
                                 std::to_string(file_row + 1));
            if (!have_nodata || v != nodata) grid.set(c, r, v);
        }
    }
    return grid;
}

inline DemRaster read_esri_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open raster file: " + path);
    return read_esri_grid(in);
}

inline void write_esri_grid(const DemRaster& grid, std::ostream& out,
                            double nodata = -9999.0) {
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    out << "ncols " << grid.cols << "\n";
    out << "nrows " << grid.rows << "\n";
    out << "xllcorner " << fmt(grid.origin_x) << "\n";
    out << "yllcorner " << fmt(grid.origin_y) << "\n";
    out << "cellsize " << fmt(grid.cell_size) << "\n";
    out << "NODATA_value " << fmt(nodata) << "\n";
    for (int file_row = 0; file_row < grid.rows; ++file_row) {
        const int r = grid.rows - 1 - file_row;
        for (int c = 0; c < grid.cols; ++c) {
            if (c) out << ' ';
            out << fmt(grid.has(c, r) ? grid.at(c, r) : nodata);
        }
        out << "\n";
    }
}

inline void write_esri_grid(const DemRaster& grid, const std::string& path,
                            double nodata = -9999.0) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write raster file: " + path);
    write_esri_grid(grid, out, nodata);
}

} // namespace canopy
