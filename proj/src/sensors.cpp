#include "layout/sensors.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "layout/csv.hpp"

namespace layout {

namespace {
const Vec3 kGravity(0.0, 0.0, -9.81);

double toSeconds(int64_t t_ns) { return static_cast<double>(t_ns) * 1e-9; }
}  // namespace

const char* streamName(StreamId id) {
  switch (id) {
    case StreamId::Imu: return "imu";
    case StreamId::Vio: return "vio";
    case StreamId::Prism: return "prism";
    case StreamId::Depth: return "depth";
    case StreamId::Tool: return "tool";
  }
  return "?";
}

SensorSimulator::SensorSimulator(const SensorConfig& config, uint64_t seed)
    : config_(config),
      rng_imu_(seed ^ 0x1111),
      rng_vio_(seed ^ 0x2222),
      rng_prism_(seed ^ 0x3333),
      rng_depth_(seed ^ 0x4444),
      rng_tool_(seed ^ 0x5555) {
  if (config_.imu.noise_enabled) {
    // Turn-on bias drawn once per run, uniform within the spec bound.
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 3; ++i) accel_bias_[i] = u(rng_imu_) * config_.imu.accel_turn_on_bias;
    for (int i = 0; i < 3; ++i) gyro_bias_[i] = u(rng_imu_) * config_.imu.gyro_turn_on_bias;
  }
}

Vec3 SensorSimulator::gaussian3(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  return Vec3(n(rng), n(rng), n(rng));
}

std::optional<ImuMeasurement> SensorSimulator::imu(int64_t t_ns, const Vec3& accel_world,
                                                   const Vec3& omega_body,
                                                   const Rotation& world_to_body_attitude) {
  const double t_s = toSeconds(t_ns);
  if (config_.dropouts.dropped(StreamId::Imu, t_s)) return std::nullopt;
  if (last_imu_t_ns_ >= 0 && t_ns <= last_imu_t_ns_)
    throw std::runtime_error("non-monotonic IMU timestamp");
  const double dt = last_imu_t_ns_ < 0 ? 1.0 / config_.imu.rate_hz
                                       : toSeconds(t_ns - last_imu_t_ns_);
  last_imu_t_ns_ = t_ns;

  // Specific force in the body frame. world_to_body_attitude is R_WI.
  const Rotation r_iw = world_to_body_attitude.inverse();
  ImuMeasurement m;
  m.t_ns = t_ns;
  m.accel = r_iw * (accel_world - kGravity) + accel_bias_;
  m.gyro = omega_body + gyro_bias_;
  if (config_.imu.noise_enabled) {
    const double sqrt_rate = std::sqrt(config_.imu.rate_hz);
    m.accel += gaussian3(rng_imu_, config_.imu.accel_noise_density * sqrt_rate);
    m.gyro += gaussian3(rng_imu_, config_.imu.gyro_noise_density * sqrt_rate);
    if (config_.imu.bias_walk_enabled) {
      const double sdt = std::sqrt(dt);
      accel_bias_ += gaussian3(rng_imu_, config_.imu.accel_bias_rw * sdt);
      gyro_bias_ += gaussian3(rng_imu_, config_.imu.gyro_bias_rw * sdt);
    }
  }
  return m;
}

std::optional<VioPoseMeasurement> SensorSimulator::vio(int64_t t_ns, const Pose& true_odom_to_vio) {
  const double t_s = toSeconds(t_ns);
  if (config_.dropouts.dropped(StreamId::Vio, t_s)) return std::nullopt;
  const double dt = last_vio_t_ns_ < 0 ? 0.0 : toSeconds(t_ns - last_vio_t_ns_);
  last_vio_t_ns_ = t_ns;

  VioPoseMeasurement m;
  m.t_ns = t_ns;
  if (config_.vio.noise_enabled) {
    const double sdt = std::sqrt(std::max(dt, 0.0));
    vio_drift_.translation += gaussian3(rng_vio_, config_.vio.drift_translation_rate * sdt);
    vio_drift_.rotation =
        vio_drift_.rotation * expSo3(gaussian3(rng_vio_, config_.vio.drift_rotation_rate * sdt));
    m.pose = vio_drift_.inverse() * true_odom_to_vio;
    m.pose.translation += gaussian3(rng_vio_, config_.vio.position_noise);
    m.pose.rotation = m.pose.rotation * expSo3(gaussian3(rng_vio_, config_.vio.rotation_noise));
  } else {
    m.pose = true_odom_to_vio;
  }
  return m;
}

std::optional<PrismPositionMeasurement> SensorSimulator::prism(int64_t t_ns,
                                                               const Vec3& true_position,
                                                               const Vec3& base_position,
                                                               const Vec3& station_position,
                                                               const Rotation& base_attitude) {
  const double t_s = toSeconds(t_ns);
  if (config_.dropouts.dropped(StreamId::Prism, t_s)) return std::nullopt;
  if (config_.prism.line_of_sight_enabled) {
    // Horizontal acceptance test: the prism lever arm must point within the
    // acceptance cone of the base-to-station direction.
    const Vec3 lever = true_position - base_position;
    Vec2 lever_xy(lever.x(), lever.y());
    const Vec3 to_station = station_position - base_position;
    Vec2 stat_xy(to_station.x(), to_station.y());
    if (lever_xy.norm() > 1e-6 && stat_xy.norm() > 1e-6) {
      const double c = lever_xy.dot(stat_xy) / (lever_xy.norm() * stat_xy.norm());
      const double angle = std::acos(std::clamp(c, -1.0, 1.0));
      if (angle > config_.prism.acceptance_cone_deg * M_PI / 180.0) return std::nullopt;
    }
    (void)base_attitude;
  }
  PrismPositionMeasurement m;
  m.t_ns = t_ns;
  m.position = true_position;
  if (config_.prism.noise_enabled) m.position += gaussian3(rng_prism_, config_.prism.sigma);
  return m;
}

std::optional<DepthMeasurement> SensorSimulator::depth(int64_t t_ns, double true_distance) {
  const double t_s = toSeconds(t_ns);
  if (config_.dropouts.dropped(StreamId::Depth, t_s)) return std::nullopt;
  DepthMeasurement m;
  m.t_ns = t_ns;
  m.distance = true_distance;
  if (config_.depth.noise_enabled) {
    std::normal_distribution<double> n(0.0, config_.depth.sigma);
    m.distance += n(rng_depth_);
  }
  m.valid = m.distance >= config_.depth.min_range && m.distance <= config_.depth.max_range;
  m.distance = std::clamp(m.distance, config_.depth.min_range, config_.depth.max_range);
  return m;
}

std::optional<ToolOffsetMeasurement> SensorSimulator::toolTracker(int64_t t_ns,
                                                                  const Vec2& true_offset,
                                                                  double true_yaw) {
  const double t_s = toSeconds(t_ns);
  if (config_.dropouts.dropped(StreamId::Tool, t_s)) return std::nullopt;
  ToolOffsetMeasurement m;
  m.t_ns = t_ns;
  m.offset = true_offset;
  m.yaw = true_yaw;
  if (config_.tool.noise_enabled) {
    std::normal_distribution<double> np(0.0, config_.tool.position_sigma);
    std::normal_distribution<double> ny(0.0, config_.tool.yaw_sigma);
    m.offset += Vec2(np(rng_tool_), np(rng_tool_));
    m.yaw += ny(rng_tool_);
  }
  return m;
}

void MeasurementLog::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    CsvWriter w(dir + "/imu.csv", {"t_ns", "ax", "ay", "az", "gx", "gy", "gz"});
    for (const auto& m : imu) {
      w.field(static_cast<long long>(m.t_ns));
      for (int i = 0; i < 3; ++i) w.field(m.accel[i]);
      for (int i = 0; i < 3; ++i) w.field(m.gyro[i]);
      w.endRow();
    }
  }
  {
    CsvWriter w(dir + "/vio.csv", {"t_ns", "qw", "qx", "qy", "qz", "px", "py", "pz"});
    for (const auto& m : vio) {
      w.field(static_cast<long long>(m.t_ns));
      w.field(m.pose.rotation.w()).field(m.pose.rotation.x());
      w.field(m.pose.rotation.y()).field(m.pose.rotation.z());
      for (int i = 0; i < 3; ++i) w.field(m.pose.translation[i]);
      w.endRow();
    }
  }
  {
    CsvWriter w(dir + "/prism.csv", {"t_ns", "x", "y", "z"});
    for (const auto& m : prism) {
      w.field(static_cast<long long>(m.t_ns));
      for (int i = 0; i < 3; ++i) w.field(m.position[i]);
      w.endRow();
    }
  }
  {
    CsvWriter w(dir + "/depth.csv", {"t_ns", "distance", "valid"});
    for (const auto& m : depth) {
      w.field(static_cast<long long>(m.t_ns)).field(m.distance);
      w.field(static_cast<long long>(m.valid ? 1 : 0));
      w.endRow();
    }
  }
  {
    CsvWriter w(dir + "/tool.csv", {"t_ns", "x", "y", "yaw"});
    for (const auto& m : tool) {
      w.field(static_cast<long long>(m.t_ns));
      w.field(m.offset.x()).field(m.offset.y()).field(m.yaw);
      w.endRow();
    }
  }
}

MeasurementLog MeasurementLog::read(const std::string& dir) {
  MeasurementLog log;
  {
    CsvTable t = readCsv(dir + "/imu.csv");
    t.columnIndex("t_ns");
    for (const auto& r : t.rows)
      log.imu.push_back({static_cast<int64_t>(r[0]), Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }
  {
    CsvTable t = readCsv(dir + "/vio.csv");
    t.columnIndex("qw");
    for (const auto& r : t.rows)
      log.vio.push_back({static_cast<int64_t>(r[0]),
                         Pose(Rotation(r[1], r[2], r[3], r[4]), Vec3(r[5], r[6], r[7]))});
  }
  {
    CsvTable t = readCsv(dir + "/prism.csv");
    t.columnIndex("x");
    for (const auto& r : t.rows)
      log.prism.push_back({static_cast<int64_t>(r[0]), Vec3(r[1], r[2], r[3])});
  }
  {
    CsvTable t = readCsv(dir + "/depth.csv");
    t.columnIndex("distance");
    for (const auto& r : t.rows)
      log.depth.push_back({static_cast<int64_t>(r[0]), r[1], r[2] > 0.5});
  }
  {
    CsvTable t = readCsv(dir + "/tool.csv");
    t.columnIndex("yaw");
    for (const auto& r : t.rows)
      log.tool.push_back({static_cast<int64_t>(r[0]), Vec2(r[1], r[2]), r[3]});
  }
  return log;
}

}  // namespace layout
