#include "layout/rmp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace layout {

Eigen::MatrixXd pseudoInverse(const Eigen::MatrixXd& m, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  Eigen::VectorXd inv = eig.eigenvalues();
  const double scale = std::max(inv.cwiseAbs().maxCoeff(), 1.0);
  for (int i = 0; i < inv.size(); ++i) {
    inv[i] = std::abs(inv[i]) > cutoff * scale ? 1.0 / inv[i] : 0.0;
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Rmp pull(const Rmp& policy, const Eigen::MatrixXd& jacobian) {
  if (jacobian.rows() != policy.dim()) {
    throw std::invalid_argument("rmp pull: jacobian rows must match policy dimension");
  }
  Rmp out;
  out.metric = jacobian.transpose() * policy.metric * jacobian;
  out.f = pseudoInverse(out.metric) * (jacobian.transpose() * policy.metric * policy.f);
  return out;
}

Rmp combine(const std::vector<Rmp>& policies, int dim) {
  Rmp out = Rmp::zero(dim);
  if (policies.empty()) return out;
  Eigen::VectorXd af = Eigen::VectorXd::Zero(dim);
  for (const Rmp& p : policies) {
    if (p.dim() != dim) throw std::invalid_argument("rmp combine: dimension mismatch");
    out.metric += p.metric;
    af += p.metric * p.f;
  }
  out.f = pseudoInverse(out.metric) * af;
  return out;
}

Eigen::VectorXd softNormalize(const Eigen::VectorXd& z, double gamma, SoftNormVariant variant) {
  const double n = z.norm();
  double softplus = 0.0;
  switch (variant) {
    case SoftNormVariant::Printed: {
      const double a = gamma * n;
      softplus = a > 30.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
      break;
    }
    case SoftNormVariant::Standard:
      softplus = std::log1p(std::exp(-gamma * n));
      break;
  }
  const double denom = n + gamma * softplus;
  if (denom <= 0.0) return Eigen::VectorXd::Zero(z.size());
  return z / denom;
}

Eigen::VectorXd attractor(const Eigen::VectorXd& x, const Eigen::VectorXd& target,
                          const Eigen::VectorXd& velocity, double alpha, double beta, double gamma,
                          SoftNormVariant variant) {
  return alpha * softNormalize(target - x, gamma, variant) - beta * velocity;
}

}  // namespace layout
