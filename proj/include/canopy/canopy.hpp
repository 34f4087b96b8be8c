#pragma once

#include "canopy/config.hpp"
#include "canopy/crowns.hpp"
#include "canopy/dem.hpp"
#include "canopy/dsm.hpp"
#include "canopy/errors.hpp"
#include "canopy/esri_grid.hpp"
#include "canopy/evaluation.hpp"
#include "canopy/grid_index.hpp"
#include "canopy/histogram.hpp"
#include "canopy/hungarian.hpp"
#include "canopy/io.hpp"
#include "canopy/point_cloud.hpp"
#include "canopy/raster.hpp"
#include "canopy/stratify.hpp"
#include "canopy/synth.hpp"
#include "canopy/watershed.hpp"
