#pragma once

#include <Eigen/Core>

#include <vector>

namespace layout {

/// Riemannian motion policy: desired acceleration f with metric A on a task
/// manifold. A is symmetric positive semidefinite.
struct Rmp {
  Eigen::VectorXd f;
  Eigen::MatrixXd metric;

  static Rmp zero(int dim) {
    Rmp r;
    r.f = Eigen::VectorXd::Zero(dim);
    r.metric = Eigen::MatrixXd::Zero(dim, dim);
    return r;
  }
  int dim() const { return static_cast<int>(f.size()); }
};

/// Moore-Penrose pseudo-inverse via eigendecomposition (symmetric input),
/// singular values below the cutoff treated as zero.
Eigen::MatrixXd pseudoInverse(const Eigen::MatrixXd& m, double cutoff = 1e-10);

/// Pull-back of a policy through the map with Jacobian J (d_task x d_config):
/// ((J^T A J)^+ J^T A f, J^T A J).
Rmp pull(const Rmp& policy, const Eigen::MatrixXd& jacobian);

/// Metric-weighted combination: ((sum A_i)^+ sum A_i f_i, sum A_i).
/// An empty list yields the zero policy with zero metric (dimension required).
Rmp combine(const std::vector<Rmp>& policies, int dim);

enum class SoftNormVariant {
  Printed,   // S(z) = z / (|z| + gamma*log(1 + exp(gamma*|z|)))
  Standard,  // S(z) = z / (|z| + gamma*log(1 + exp(-gamma*|z|)))
};

Eigen::VectorXd softNormalize(const Eigen::VectorXd& z, double gamma,
                              SoftNormVariant variant = SoftNormVariant::Printed);

/// Damped attractor: alpha * S(target - x) - beta * velocity.
Eigen::VectorXd attractor(const Eigen::VectorXd& x, const Eigen::VectorXd& target,
                          const Eigen::VectorXd& velocity, double alpha, double beta, double gamma,
                          SoftNormVariant variant = SoftNormVariant::Printed);

}  // namespace layout
