#pragma once

#include <string>
#include <vector>

#include "layout/mission.hpp"

namespace layout {

/// Aggregate run configuration: every module config plus seed and output
/// directory. Unknown keys and malformed values are reported with the full
/// field path.
struct RunConfig {
  MissionConfig mission;
  std::string output_dir = "run";

  static RunConfig defaults();
  /// Parses JSON with full defaulting; throws ConfigError listing every
  /// offending field.
  static RunConfig fromJson(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string toJson() const;
  void save(const std::string& path) const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace layout
