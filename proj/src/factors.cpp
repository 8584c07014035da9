#include "layout/factors.hpp"

namespace layout {

namespace {

// Columns of the local-state tangent: [phi 0, p 3, v 6, ba 9, bg 12].
constexpr int kPhi = 0, kP = 3, kV = 6, kBa = 9, kBg = 12;

// Pose boxminus residual [log(R), t] of measured^-1 * predicted.
Eigen::Matrix<double, 6, 1> poseError(const Pose& measured, const Pose& predicted) {
  const Pose e = measured.inverse() * predicted;
  Eigen::Matrix<double, 6, 1> r;
  r.segment<3>(0) = logSo3(e.rotation);
  r.segment<3>(3) = e.translation;
  return r;
}

}  // namespace

Eigen::VectorXd LocalPriorFactor::unwhitenedError(const Values& values) const {
  const LocalState& x = values.at(keys_[0]).local();
  Vec15 r;
  r.segment<3>(kPhi) = logSo3(prior_.q_OI.inverse() * x.q_OI);
  r.segment<3>(kP) = x.p_OI - prior_.p_OI;
  r.segment<3>(kV) = x.v_OI - prior_.v_OI;
  r.segment<3>(kBa) = x.b_a - prior_.b_a;
  r.segment<3>(kBg) = x.b_g - prior_.b_g;
  return r;
}

std::vector<Eigen::MatrixXd> LocalPriorFactor::jacobians(const Values& values) const {
  const LocalState& x = values.at(keys_[0]).local();
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(15, 15);
  j.block<3, 3>(kPhi, kPhi) = rightJacobianInvSo3(logSo3(prior_.q_OI.inverse() * x.q_OI));
  return {j};
}

Eigen::VectorXd GlobalPriorFactor::unwhitenedError(const Values& values) const {
  const GlobalState& x = values.at(keys_[0]).global();
  Eigen::Matrix<double, 6, 1> r;
  r.segment<3>(0) = logSo3(prior_.q_BO.inverse() * x.q_BO);
  r.segment<3>(3) = x.p_BO - prior_.p_BO;
  return r;
}

std::vector<Eigen::MatrixXd> GlobalPriorFactor::jacobians(const Values& values) const {
  const GlobalState& x = values.at(keys_[0]).global();
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(6, 6);
  j.block<3, 3>(0, 0) = rightJacobianInvSo3(logSo3(prior_.q_BO.inverse() * x.q_BO));
  return {j};
}

ImuFactor::ImuFactor(const VariableKey& key_i, const VariableKey& key_j,
                     const PreintegratedImu& pim)
    : Factor({key_i, key_j}, sqrtInfoFromCovariance(
                                 pim.covariance() + 1e-16 * Mat9::Identity())),
      pim_(pim) {}

Eigen::VectorXd ImuFactor::unwhitenedError(const Values& values) const {
  return pim_.residual(values.at(keys_[0]).local(), values.at(keys_[1]).local());
}

std::vector<Eigen::MatrixXd> ImuFactor::jacobians(const Values& values) const {
  const LocalState& xi = values.at(keys_[0]).local();
  const LocalState& xj = values.at(keys_[1]).local();
  const double dt = pim_.deltaT();
  const Vec3& g = pim_.gravity();
  const Mat3 ri_t = xi.q_OI.matrix().transpose();
  const Mat3 rj = xj.q_OI.matrix();

  const Rotation delta_r_b = pim_.correctedDeltaR(xi.b_g);
  const Mat3 c = ri_t * rj;  // R_i^T R_j
  const Vec3 r_rot = logSo3(Rotation(delta_r_b.matrix().transpose() * c));
  const Mat3 jr_inv = rightJacobianInvSo3(r_rot);
  const Vec3 u = pim_.dRdbg() * (xi.b_g - pim_.gyroBiasLin());

  const Vec3 dv = xj.v_OI - xi.v_OI - g * dt;
  const Vec3 dp = xj.p_OI - xi.p_OI - xi.v_OI * dt - 0.5 * g * dt * dt;

  Eigen::MatrixXd ji = Eigen::MatrixXd::Zero(9, 15);
  Eigen::MatrixXd jj = Eigen::MatrixXd::Zero(9, 15);

  // Orientation residual rows (0-2).
  ji.block<3, 3>(0, kPhi) = -jr_inv * c.transpose();
  ji.block<3, 3>(0, kBg) =
      -jr_inv * (c.transpose() * delta_r_b.matrix()) * rightJacobianSo3(u) * pim_.dRdbg();
  jj.block<3, 3>(0, kPhi) = jr_inv;

  // Velocity residual rows (3-5).
  ji.block<3, 3>(3, kPhi) = skew(ri_t * dv);
  ji.block<3, 3>(3, kV) = -ri_t;
  ji.block<3, 3>(3, kBa) = -pim_.dVdba();
  ji.block<3, 3>(3, kBg) = -pim_.dVdbg();
  jj.block<3, 3>(3, kV) = ri_t;

  // Position residual rows (6-8).
  ji.block<3, 3>(6, kPhi) = skew(ri_t * dp);
  ji.block<3, 3>(6, kP) = -ri_t;
  ji.block<3, 3>(6, kV) = -ri_t * dt;
  ji.block<3, 3>(6, kBa) = -pim_.dPdba();
  ji.block<3, 3>(6, kBg) = -pim_.dPdbg();
  jj.block<3, 3>(6, kP) = ri_t;

  return {ji, jj};
}

Eigen::VectorXd BiasRandomWalkFactor::unwhitenedError(const Values& values) const {
  const LocalState& xi = values.at(keys_[0]).local();
  const LocalState& xj = values.at(keys_[1]).local();
  Eigen::Matrix<double, 6, 1> r;
  r.segment<3>(0) = xj.b_a - xi.b_a;
  r.segment<3>(3) = xj.b_g - xi.b_g;
  return r;
}

std::vector<Eigen::MatrixXd> BiasRandomWalkFactor::jacobians(const Values&) const {
  Eigen::MatrixXd ji = Eigen::MatrixXd::Zero(6, 15);
  Eigen::MatrixXd jj = Eigen::MatrixXd::Zero(6, 15);
  ji.block<3, 3>(0, kBa) = -Mat3::Identity();
  ji.block<3, 3>(3, kBg) = -Mat3::Identity();
  jj.block<3, 3>(0, kBa) = Mat3::Identity();
  jj.block<3, 3>(3, kBg) = Mat3::Identity();
  return {ji, jj};
}

Eigen::VectorXd BetweenPoseFactor::unwhitenedError(const Values& values) const {
  const Pose si = values.at(keys_[0]).local().pose() * extrinsic_;
  const Pose sj = values.at(keys_[1]).local().pose() * extrinsic_;
  return poseError(measured_, si.inverse() * sj);
}

std::vector<Eigen::MatrixXd> BetweenPoseFactor::jacobians(const Values& values) const {
  const LocalState& xi = values.at(keys_[0]).local();
  const LocalState& xj = values.at(keys_[1]).local();
  const Pose si = xi.pose() * extrinsic_;
  const Pose sj = xj.pose() * extrinsic_;
  const Pose pred = si.inverse() * sj;
  const Mat3 r_es_t = extrinsic_.rotation.matrix().transpose();
  const Mat3 m_rot_t = measured_.rotation.matrix().transpose();
  const Vec3 r_rot = logSo3(measured_.rotation.inverse() * pred.rotation);
  const Mat3 jr_inv = rightJacobianInvSo3(r_rot);
  const Mat3 si_rt = si.rotation.matrix().transpose();

  Eigen::MatrixXd ji = Eigen::MatrixXd::Zero(6, 15);
  Eigen::MatrixXd jj = Eigen::MatrixXd::Zero(6, 15);

  // Rotation rows.
  ji.block<3, 3>(0, kPhi) = -jr_inv * pred.rotation.matrix().transpose() * r_es_t;
  jj.block<3, 3>(0, kPhi) = jr_inv * r_es_t;

  // Translation rows: r_p = M_R^T * (pred.p - M.p).
  ji.block<3, 3>(3, kPhi) =
      m_rot_t * (skew(pred.translation) * r_es_t + r_es_t * skew(extrinsic_.translation));
  ji.block<3, 3>(3, kP) = -m_rot_t * si_rt;
  jj.block<3, 3>(3, kPhi) = -m_rot_t * si_rt * xj.q_OI.matrix() * skew(extrinsic_.translation);
  jj.block<3, 3>(3, kP) = m_rot_t * si_rt;

  return {ji, jj};
}

Eigen::VectorXd BetweenPositionFactor::unwhitenedError(const Values& values) const {
  const LocalState& xi = values.at(keys_[0]).local();
  const LocalState& xj = values.at(keys_[1]).local();
  const Vec3 pi = xi.p_OI + xi.q_OI * lever_;
  const Vec3 pj = xj.p_OI + xj.q_OI * lever_;
  return (pj - pi) - measured_;
}

std::vector<Eigen::MatrixXd> BetweenPositionFactor::jacobians(const Values& values) const {
  const LocalState& xi = values.at(keys_[0]).local();
  const LocalState& xj = values.at(keys_[1]).local();
  Eigen::MatrixXd ji = Eigen::MatrixXd::Zero(3, 15);
  Eigen::MatrixXd jj = Eigen::MatrixXd::Zero(3, 15);
  ji.block<3, 3>(0, kPhi) = xi.q_OI.matrix() * skew(lever_);
  ji.block<3, 3>(0, kP) = -Mat3::Identity();
  jj.block<3, 3>(0, kPhi) = -xj.q_OI.matrix() * skew(lever_);
  jj.block<3, 3>(0, kP) = Mat3::Identity();
  return {ji, jj};
}

Eigen::VectorXd ReferenceFrameFactor::unwhitenedError(const Values& values) const {
  const GlobalState& x = values.at(keys_[0]).global();
  return p_bp_ - (x.p_BO + x.q_BO * p_op_);
}

std::vector<Eigen::MatrixXd> ReferenceFrameFactor::jacobians(const Values& values) const {
  const GlobalState& x = values.at(keys_[0]).global();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 6);
  j.block<3, 3>(0, 0) = x.q_BO.matrix() * skew(p_op_);
  j.block<3, 3>(0, 3) = -Mat3::Identity();
  return {j};
}

Eigen::VectorXd GlobalBetweenFactor::unwhitenedError(const Values& values) const {
  const Pose ti = values.at(keys_[0]).global().pose();
  const Pose tj = values.at(keys_[1]).global().pose();
  return poseError(measured_, ti.inverse() * tj);
}

std::vector<Eigen::MatrixXd> GlobalBetweenFactor::jacobians(const Values& values) const {
  const Pose ti = values.at(keys_[0]).global().pose();
  const Pose tj = values.at(keys_[1]).global().pose();
  const Pose pred = ti.inverse() * tj;
  const Mat3 m_rot_t = measured_.rotation.matrix().transpose();
  const Vec3 r_rot = logSo3(measured_.rotation.inverse() * pred.rotation);
  const Mat3 jr_inv = rightJacobianInvSo3(r_rot);
  const Mat3 ti_rt = ti.rotation.matrix().transpose();

  Eigen::MatrixXd ji = Eigen::MatrixXd::Zero(6, 6);
  Eigen::MatrixXd jj = Eigen::MatrixXd::Zero(6, 6);
  ji.block<3, 3>(0, 0) = -jr_inv * pred.rotation.matrix().transpose();
  jj.block<3, 3>(0, 0) = jr_inv;
  ji.block<3, 3>(3, 0) = m_rot_t * skew(pred.translation);
  ji.block<3, 3>(3, 3) = -m_rot_t * ti_rt;
  jj.block<3, 3>(3, 3) = m_rot_t * ti_rt;
  return {ji, jj};
}

LinearFactor::LinearFactor(std::vector<VariableKey> keys, std::vector<Variable> linearization,
                           const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
    : Factor(std::move(keys), Eigen::MatrixXd::Identity(a.rows(), a.rows())),
      lin_(std::move(linearization)),
      a_(a),
      b_(b) {
  int off = 0;
  for (const auto& v : lin_) {
    col_offset_.push_back(off);
    off += v.dim();
  }
  if (off != a_.cols()) throw std::logic_error("LinearFactor dimension mismatch");
}

Eigen::VectorXd LinearFactor::unwhitenedError(const Values& values) const {
  Eigen::VectorXd delta(a_.cols());
  for (size_t i = 0; i < lin_.size(); ++i)
    delta.segment(col_offset_[i], lin_[i].dim()) =
        lin_[i].localCoordinates(values.at(keys_[i]));
  return a_ * delta - b_;
}

std::vector<Eigen::MatrixXd> LinearFactor::jacobians(const Values&) const {
  // First-estimate Jacobians: the chart derivative is approximated by the
  // identity, exact for the vector blocks and first order in rotation.
  std::vector<Eigen::MatrixXd> jacs;
  for (size_t i = 0; i < lin_.size(); ++i)
    jacs.push_back(a_.middleCols(col_offset_[i], lin_[i].dim()));
  return jacs;
}

std::shared_ptr<Factor> makeLinearFactor(std::vector<VariableKey> keys,
                                         std::vector<Variable> linearization,
                                         const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return std::make_shared<LinearFactor>(std::move(keys), std::move(linearization), a, b);
}

}  // namespace layout
