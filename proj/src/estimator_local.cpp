#include "layout/estimator_local.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace layout {

LocalEstimator::LocalEstimator(const LocalEstimatorConfig& config)
    : cfg_(config), pim_(config.preintegration) {}

void LocalEstimator::addImu(const ImuMeasurement& m) {
  if (last_imu_ && m.t_ns <= last_imu_->t_ns) {
    throw std::invalid_argument("LocalEstimator: out-of-order IMU timestamp");
  }

  if (!initialized_) {
    init_buffer_.push_back(m);
    last_imu_ = m;
    const double span = static_cast<double>(m.t_ns - init_buffer_.front().t_ns) * 1e-9;
    if (span + 1e-12 < cfg_.init_window_s) return;

    Vec3 mean_accel = Vec3::Zero();
    Vec3 mean_gyro = Vec3::Zero();
    for (const auto& s : init_buffer_) {
      mean_accel += s.accel;
      mean_gyro += s.gyro;
    }
    mean_accel /= static_cast<double>(init_buffer_.size());
    mean_gyro /= static_cast<double>(init_buffer_.size());

    LocalState x0;
    x0.t_ns = m.t_ns;
    if (mean_accel.norm() > 1e-6) {
      // static assumption: specific force points along R^T * (-g)
      x0.q_OI = Rotation(Eigen::Quaterniond::FromTwoVectors(mean_accel.normalized(),
                                                            Vec3::UnitZ()));
    }
    x0.b_g = mean_gyro;  // static at start; refined by the graph afterwards

    const VariableKey key = newKey();
    graph_.insert(key, Variable(x0));
    states_.emplace_back(x0.t_ns, key);

    Eigen::VectorXd sigmas(15);
    sigmas.segment<3>(0).setConstant(cfg_.prior_rot_sigma);
    sigmas.segment<3>(3).setConstant(cfg_.prior_pos_sigma);
    sigmas.segment<3>(6).setConstant(cfg_.prior_vel_sigma);
    sigmas.segment<3>(9).setConstant(cfg_.accel_turn_on_bias);
    sigmas.segment<3>(12).setConstant(cfg_.gyro_turn_on_bias);
    graph_.add(std::make_shared<LocalPriorFactor>(key, x0, Factor::sqrtInfoFromSigmas(sigmas)));

    pim_.reset(x0.b_a, x0.b_g);
    init_buffer_.clear();
    initialized_ = true;
    return;
  }

  const double dt = static_cast<double>(m.t_ns - last_imu_->t_ns) * 1e-9;
  pim_.integrate(m, dt);
  tail_.emplace_back(m, dt);
  last_imu_ = m;
  if (++samples_since_state_ >= cfg_.state_decimation) createState(m.t_ns);
}

void LocalEstimator::createState(int64_t t_ns) {
  const VariableKey prev = states_.back().second;
  LocalState x = pim_.propagate(graph_.at(prev).local());
  x.t_ns = t_ns;

  const VariableKey key = newKey();
  graph_.insert(key, Variable(x));
  states_.emplace_back(t_ns, key);

  graph_.add(std::make_shared<ImuFactor>(prev, key, pim_));
  const double sdt = std::sqrt(std::max(pim_.deltaT(), 1e-9));
  Eigen::VectorXd bias_sigmas(6);
  bias_sigmas.segment<3>(0).setConstant(cfg_.accel_bias_rw * sdt);
  bias_sigmas.segment<3>(3).setConstant(cfg_.gyro_bias_rw * sdt);
  graph_.add(std::make_shared<BiasRandomWalkFactor>(prev, key,
                                                    Factor::sqrtInfoFromSigmas(bias_sigmas)));

  pim_.reset(x.b_a, x.b_g);
  samples_since_state_ = 0;
  tail_.clear();
}

std::optional<VariableKey> LocalEstimator::nearestState(int64_t t_ns) const {
  if (states_.empty()) return std::nullopt;
  if (t_ns < states_.front().first) return std::nullopt;
  auto it = std::lower_bound(states_.begin(), states_.end(), t_ns,
                             [](const auto& s, int64_t t) { return s.first < t; });
  if (it == states_.end()) return states_.back().second;
  if (it != states_.begin()) {
    auto prev = std::prev(it);
    if (t_ns - prev->first <= it->first - t_ns) return prev->second;
  }
  return it->second;
}

void LocalEstimator::addVio(const VioPoseMeasurement& m) {
  const auto key = initialized_ ? nearestState(m.t_ns) : std::nullopt;
  if (!key) {
    ++dropped_;
    return;
  }
  // Shift the pose to the attached state's timestamp with the rate from the
  // previous sample; the raw-time pose would alias velocity into the chain.
  const int64_t ts = graph_.at(*key).local().t_ns;
  Pose pose = m.pose;
  if (last_vio_raw_ && m.t_ns > last_vio_raw_->t_ns && ts != m.t_ns) {
    const double s = static_cast<double>(ts - m.t_ns) /
                     static_cast<double>(m.t_ns - last_vio_raw_->t_ns);
    pose.translation += s * (m.pose.translation - last_vio_raw_->pose.translation);
    const Vec3 dtheta = logSo3(Rotation(last_vio_raw_->pose.rotation.inverse() * m.pose.rotation));
    pose.rotation = m.pose.rotation * expSo3(s * dtheta);
  }
  if (vio_anchor_ && graph_.exists(vio_anchor_->key) && !(vio_anchor_->key == *key)) {
    const Pose rel = vio_anchor_->pose.inverse() * pose;
    Eigen::VectorXd sigmas(6);
    sigmas.segment<3>(0).setConstant(cfg_.vio_rot_sigma);
    sigmas.segment<3>(3).setConstant(cfg_.vio_pos_sigma);
    graph_.add(std::make_shared<BetweenPoseFactor>(vio_anchor_->key, *key, rel, cfg_.imu_to_vio,
                                                   Factor::sqrtInfoFromSigmas(sigmas)));
  }
  vio_anchor_ = Anchor{*key, ts, pose, Vec3::Zero()};
  last_vio_raw_ = m;
}

void LocalEstimator::addPrism(const PrismPositionMeasurement& m) {
  const auto key = initialized_ ? nearestState(m.t_ns) : std::nullopt;
  if (!key) {
    ++dropped_;
    return;
  }
  const int64_t ts = graph_.at(*key).local().t_ns;
  Vec3 position = m.position;
  if (last_prism_raw_ && m.t_ns > last_prism_raw_->t_ns && ts != m.t_ns) {
    const double s = static_cast<double>(ts - m.t_ns) /
                     static_cast<double>(m.t_ns - last_prism_raw_->t_ns);
    position += s * (m.position - last_prism_raw_->position);
  }
  if (prism_anchor_ && graph_.exists(prism_anchor_->key) && !(prism_anchor_->key == *key)) {
    const Vec3 rel = position - prism_anchor_->position;
    Eigen::VectorXd sigmas = Eigen::VectorXd::Constant(3, cfg_.prism_pos_sigma);
    graph_.add(std::make_shared<BetweenPositionFactor>(
        prism_anchor_->key, *key, rel, cfg_.imu_to_prism.translation,
        Factor::sqrtInfoFromSigmas(sigmas)));
  }
  prism_anchor_ = Anchor{*key, ts, Pose(), position};
  last_prism_raw_ = m;
}

void LocalEstimator::marginalizeOld() {
  const int64_t head = states_.back().first;
  const int64_t cutoff = head - static_cast<int64_t>(std::llround(cfg_.window_s * 1e9));
  std::vector<VariableKey> old;
  while (states_.size() > 1 && states_.front().first < cutoff) {
    old.push_back(states_.front().second);
    states_.pop_front();
  }
  if (!old.empty()) graph_.marginalizeOut(old);
}

void LocalEstimator::clampBiases() {
  const double ba_max = 10.0 * cfg_.accel_turn_on_bias;
  const double bg_max = 10.0 * cfg_.gyro_turn_on_bias;
  for (auto& [t, key] : states_) {
    LocalState& x = graph_.at(key).local();
    x.b_a = x.b_a.cwiseMax(-ba_max).cwiseMin(ba_max);
    x.b_g = x.b_g.cwiseMax(-bg_max).cwiseMin(bg_max);
  }
}

OptimizeResult LocalEstimator::optimize() {
  if (!initialized_) return {};
  marginalizeOld();
  OptimizeOptions opt;
  opt.max_iterations = cfg_.max_iterations;
  const OptimizeResult res = graph_.optimize(opt);
  clampBiases();
  return res;
}

const LocalState& LocalEstimator::latest() const {
  if (!initialized_) throw std::logic_error("LocalEstimator: not initialized");
  return graph_.at(states_.back().second).local();
}

LocalState LocalEstimator::propagate(int64_t t_ns) const {
  const LocalState& head = latest();
  if (t_ns < head.t_ns) throw std::invalid_argument("LocalEstimator: propagate into the past");
  if (t_ns == head.t_ns) return head;

  PreintegratedImu pim(cfg_.preintegration, head.b_a, head.b_g);
  int64_t t = head.t_ns;
  ImuMeasurement last{};
  bool have_last = false;
  for (const auto& [m, dt] : tail_) {
    if (m.t_ns > t_ns) break;
    pim.integrate(m, dt);
    t = m.t_ns;
    last = m;
    have_last = true;
  }
  if (t < t_ns && have_last) {
    // hold the last sample for the remainder
    ImuMeasurement hold = last;
    hold.t_ns = t_ns;
    pim.integrate(hold, static_cast<double>(t_ns - t) * 1e-9);
  }
  LocalState out = pim.propagate(head);
  out.t_ns = t_ns;
  return out;
}

Eigen::MatrixXd LocalEstimator::latestCovariance() const {
  if (!initialized_) throw std::logic_error("LocalEstimator: not initialized");
  return graph_.marginalCovariance(states_.back().second);
}

}  // namespace layout
