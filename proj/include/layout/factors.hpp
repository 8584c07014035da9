#pragma once

#include <memory>

#include "layout/preintegration.hpp"
#include "layout/solver.hpp"

namespace layout {

/// Full-state prior on a local state. Residual is x boxminus prior.
class LocalPriorFactor : public Factor {
 public:
  LocalPriorFactor(const VariableKey& key, const LocalState& prior,
                   const Eigen::MatrixXd& sqrt_info)
      : Factor({key}, sqrt_info), prior_(prior) {}

  int dim() const override { return 15; }
  std::string name() const override { return "LocalPrior"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  LocalState prior_;
};

/// Full-state prior on a global state.
class GlobalPriorFactor : public Factor {
 public:
  GlobalPriorFactor(const VariableKey& key, const GlobalState& prior,
                    const Eigen::MatrixXd& sqrt_info)
      : Factor({key}, sqrt_info), prior_(prior) {}

  int dim() const override { return 6; }
  std::string name() const override { return "GlobalPrior"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  GlobalState prior_;
};

/// Preintegrated IMU factor between two consecutive local states.
class ImuFactor : public Factor {
 public:
  ImuFactor(const VariableKey& key_i, const VariableKey& key_j, const PreintegratedImu& pim);

  int dim() const override { return 9; }
  std::string name() const override { return "Imu"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

  const PreintegratedImu& preintegrated() const { return pim_; }

 private:
  PreintegratedImu pim_;
};

/// Random-walk constraint on the IMU biases of two consecutive local states.
class BiasRandomWalkFactor : public Factor {
 public:
  BiasRandomWalkFactor(const VariableKey& key_i, const VariableKey& key_j,
                       const Eigen::MatrixXd& sqrt_info)
      : Factor({key_i, key_j}, sqrt_info) {}

  int dim() const override { return 6; }
  std::string name() const override { return "BiasWalk"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;
};

/// Relative-pose constraint between the sensor poses attached to two local
/// states: measured = (T_i * T_IS)^-1 * (T_j * T_IS).
class BetweenPoseFactor : public Factor {
 public:
  BetweenPoseFactor(const VariableKey& key_i, const VariableKey& key_j, const Pose& measured,
                    const Pose& imu_to_sensor, const Eigen::MatrixXd& sqrt_info)
      : Factor({key_i, key_j}, sqrt_info), measured_(measured), extrinsic_(imu_to_sensor) {}

  int dim() const override { return 6; }
  std::string name() const override { return "BetweenPose"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  Pose measured_;
  Pose extrinsic_;
};

/// Relative-position constraint between the lever-arm points of two local
/// states: measured = (p_j + R_j*l) - (p_i + R_i*l).
class BetweenPositionFactor : public Factor {
 public:
  BetweenPositionFactor(const VariableKey& key_i, const VariableKey& key_j, const Vec3& measured,
                        const Vec3& lever_arm, const Eigen::MatrixXd& sqrt_info)
      : Factor({key_i, key_j}, sqrt_info), measured_(measured), lever_(lever_arm) {}

  int dim() const override { return 3; }
  std::string name() const override { return "BetweenPosition"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  Vec3 measured_;
  Vec3 lever_;
};

/// Links a total-station position fix to a global drift state through a fixed
/// local-estimate snapshot: r = p_BP - (p_BO + q_BO * p_OP).
class ReferenceFrameFactor : public Factor {
 public:
  ReferenceFrameFactor(const VariableKey& key, const Vec3& measured_p_bp,
                       const Vec3& snapshot_p_op, const Eigen::MatrixXd& sqrt_info)
      : Factor({key}, sqrt_info), p_bp_(measured_p_bp), p_op_(snapshot_p_op) {}

  int dim() const override { return 3; }
  std::string name() const override { return "ReferenceFrame"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  Vec3 p_bp_;
  Vec3 p_op_;
};

/// Relative-pose constraint between two global states; with an identity
/// measurement this is the unity between factor acting as a drift prior.
class GlobalBetweenFactor : public Factor {
 public:
  GlobalBetweenFactor(const VariableKey& key_i, const VariableKey& key_j, const Pose& measured,
                      const Eigen::MatrixXd& sqrt_info)
      : Factor({key_i, key_j}, sqrt_info), measured_(measured) {}

  static std::shared_ptr<GlobalBetweenFactor> unity(const VariableKey& key_i,
                                                    const VariableKey& key_j,
                                                    const Eigen::MatrixXd& sqrt_info) {
    return std::make_shared<GlobalBetweenFactor>(key_i, key_j, Pose::identity(), sqrt_info);
  }

  int dim() const override { return 6; }
  std::string name() const override { return "GlobalBetween"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  Pose measured_;
};

/// Gaussian prior produced by marginalization: r = A * (x boxminus x_lin) - b,
/// linearized once at creation and kept fixed.
class LinearFactor : public Factor {
 public:
  LinearFactor(std::vector<VariableKey> keys, std::vector<Variable> linearization,
               const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

  int dim() const override { return static_cast<int>(a_.rows()); }
  std::string name() const override { return "LinearPrior"; }
  Eigen::VectorXd unwhitenedError(const Values& values) const override;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const override;

 private:
  std::vector<Variable> lin_;
  std::vector<int> col_offset_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

}  // namespace layout
