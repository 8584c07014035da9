#pragma once

#include <string>
#include <vector>

#include "layout/sim_world.hpp"

namespace layout {

/// Planar (x, y) absolute-accuracy statistics over marked points.
struct AccuracyReport {
  std::vector<double> errors;  // per-point planar error [m]
  double mae = 0.0;
  double std_dev = 0.0;
  double p90 = 0.0;  // linear interpolation between order statistics
  double fraction_within_10mm = 0.0;
};

AccuracyReport absoluteAccuracy(const std::vector<MarkRecord>& records);

/// Rigid 2D alignment (rotation + translation, no scale) of measured onto
/// nominal points; correspondence by order.
struct PrecisionReport {
  std::vector<double> residuals;  // per-point distance after alignment [m]
  double mean_deviation = 0.0;
  double rotation_angle = 0.0;  // rad, applied to the measured set
  Vec2 translation = Vec2::Zero();
  bool degenerate = false;  // rotation fell back to identity
};

PrecisionReport procrustesAlign(const std::vector<Vec2>& measured,
                                const std::vector<Vec2>& nominal);

void writeAccuracyCsv(const std::string& path, const AccuracyReport& report);
void writePrecisionCsv(const std::string& path, const PrecisionReport& report);

}  // namespace layout
