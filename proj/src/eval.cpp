#include "layout/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "layout/csv.hpp"

namespace layout {

AccuracyReport absoluteAccuracy(const std::vector<MarkRecord>& records) {
  if (records.empty()) throw std::invalid_argument("absoluteAccuracy: no records");
  AccuracyReport r;
  for (const auto& m : records) {
    r.errors.push_back((m.actual.head<2>() - m.commanded.head<2>()).norm());
  }
  const double n = static_cast<double>(r.errors.size());
  r.mae = std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / n;
  double var = 0.0;
  for (double e : r.errors) var += (e - r.mae) * (e - r.mae);
  r.std_dev = std::sqrt(var / n);

  std::vector<double> sorted = r.errors;
  std::sort(sorted.begin(), sorted.end());
  // linear interpolation between closest ranks: h = 0.9*(n-1)
  const double h = 0.9 * (n - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  r.p90 = sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);

  const auto within = std::count_if(r.errors.begin(), r.errors.end(),
                                    [](double e) { return e <= 10e-3; });
  r.fraction_within_10mm = static_cast<double>(within) / n;
  return r;
}

PrecisionReport procrustesAlign(const std::vector<Vec2>& measured,
                                const std::vector<Vec2>& nominal) {
  if (measured.size() != nominal.size() || measured.size() < 2) {
    throw std::invalid_argument("procrustesAlign: need equal point counts >= 2");
  }
  const double n = static_cast<double>(measured.size());
  Vec2 cm = Vec2::Zero(), cn = Vec2::Zero();
  for (size_t i = 0; i < measured.size(); ++i) {
    cm += measured[i];
    cn += nominal[i];
  }
  cm /= n;
  cn /= n;

  // optimal rotation from the centered cross/dot sums:
  // theta = atan2(sum(m x q), sum(m . q)) with m measured, q nominal
  double s_cross = 0.0, s_dot = 0.0;
  for (size_t i = 0; i < measured.size(); ++i) {
    const Vec2 m = measured[i] - cm;
    const Vec2 q = nominal[i] - cn;
    s_cross += m.x() * q.y() - m.y() * q.x();
    s_dot += m.dot(q);
  }

  PrecisionReport r;
  if (std::abs(s_cross) < 1e-15 && std::abs(s_dot) < 1e-15) {
    r.degenerate = true;
    r.rotation_angle = 0.0;
  } else {
    r.rotation_angle = std::atan2(s_cross, s_dot);
  }
  const double c = std::cos(r.rotation_angle), s = std::sin(r.rotation_angle);
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  r.translation = cn - rot * cm;

  for (size_t i = 0; i < measured.size(); ++i) {
    const Vec2 aligned = rot * measured[i] + r.translation;
    r.residuals.push_back((aligned - nominal[i]).norm());
  }
  r.mean_deviation = std::accumulate(r.residuals.begin(), r.residuals.end(), 0.0) / n;
  return r;
}

void writeAccuracyCsv(const std::string& path, const AccuracyReport& report) {
  CsvWriter w(path, {"index", "error", "mae", "std", "p90", "within_10mm"});
  for (size_t i = 0; i < report.errors.size(); ++i) {
    w.field(static_cast<long long>(i)).field(report.errors[i]);
    w.field(report.mae).field(report.std_dev).field(report.p90);
    w.field(report.fraction_within_10mm);
    w.endRow();
  }
}

void writePrecisionCsv(const std::string& path, const PrecisionReport& report) {
  CsvWriter w(path, {"index", "residual", "mean_deviation", "rotation_angle", "tx", "ty"});
  for (size_t i = 0; i < report.residuals.size(); ++i) {
    w.field(static_cast<long long>(i)).field(report.residuals[i]);
    w.field(report.mean_deviation).field(report.rotation_angle);
    w.field(report.translation.x()).field(report.translation.y());
    w.endRow();
  }
}

}  // namespace layout
