#include "layout/estimator_global.hpp"

#include <cmath>
#include <cstdlib>

namespace layout {

void GlobalEstimator::addReferenceMeasurement(const PrismPositionMeasurement& prism,
                                              const LocalState& local) {
  const int64_t tol_ns = static_cast<int64_t>(std::llround(0.5e9 / cfg_.prism_rate_hz));
  if (std::llabs(prism.t_ns - local.t_ns) > tol_ns) {
    ++dropped_;
    return;
  }
  const Vec3 p_op = local.p_OI + local.q_OI * cfg_.imu_to_prism;

  if (states_.empty()) {
    GlobalState g0;
    g0.t_ns = prism.t_ns;
    g0.q_BO = Rotation::rz(cfg_.initial_yaw_guess);
    g0.p_BO = prism.position - g0.q_BO * p_op;
    const VariableKey key = newKey();
    graph_.insert(key, Variable(g0));
    states_.emplace_back(prism.t_ns, key);

    Eigen::VectorXd sigmas(6);
    sigmas << cfg_.prior_tilt_sigma, cfg_.prior_tilt_sigma, cfg_.prior_yaw_sigma,
        cfg_.prior_pos_sigma, cfg_.prior_pos_sigma, cfg_.prior_pos_sigma;
    graph_.add(std::make_shared<GlobalPriorFactor>(key, g0, Factor::sqrtInfoFromSigmas(sigmas)));
  } else if (measurement_count_ % cfg_.state_decimation == 0) {
    const VariableKey prev = states_.back().second;
    GlobalState g = graph_.at(prev).global();
    g.t_ns = prism.t_ns;
    const VariableKey key = newKey();
    graph_.insert(key, Variable(g));
    states_.emplace_back(prism.t_ns, key);

    Eigen::VectorXd sigmas(6);
    sigmas.segment<3>(0).setConstant(cfg_.drift_rot_sigma);
    sigmas.segment<3>(3).setConstant(cfg_.drift_pos_sigma);
    graph_.add(GlobalBetweenFactor::unity(prev, key, Factor::sqrtInfoFromSigmas(sigmas)));
  }
  ++measurement_count_;

  const Eigen::VectorXd ref_sigmas = Eigen::VectorXd::Constant(3, cfg_.reference_sigma);
  graph_.add(std::make_shared<ReferenceFrameFactor>(states_.back().second, prism.position, p_op,
                                                    Factor::sqrtInfoFromSigmas(ref_sigmas)));
}

OptimizeResult GlobalEstimator::optimize() {
  if (states_.empty()) return {};
  const int64_t head = states_.back().first;
  const int64_t cutoff = head - static_cast<int64_t>(std::llround(cfg_.window_s * 1e9));
  std::vector<VariableKey> old;
  while (states_.size() > 1 && states_.front().first < cutoff) {
    old.push_back(states_.front().second);
    states_.pop_front();
  }
  if (!old.empty()) graph_.marginalizeOut(old);

  OptimizeOptions opt;
  opt.max_iterations = cfg_.max_iterations;
  const OptimizeResult res = graph_.optimize(opt);
  converged_ = true;
  return res;
}

std::optional<GlobalState> GlobalEstimator::current() const {
  if (!converged_ || states_.empty()) return std::nullopt;
  return graph_.at(states_.back().second).global();
}

Eigen::MatrixXd GlobalEstimator::latestCovariance() const {
  if (states_.empty()) throw std::logic_error("GlobalEstimator: no states");
  return graph_.marginalCovariance(states_.back().second);
}

}  // namespace layout
