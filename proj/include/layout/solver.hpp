#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "layout/state.hpp"

namespace layout {

enum class VariableKind : uint8_t { Local, Global };

struct VariableKey {
  VariableKind kind = VariableKind::Local;
  uint64_t index = 0;

  bool operator<(const VariableKey& o) const {
    return kind != o.kind ? kind < o.kind : index < o.index;
  }
  bool operator==(const VariableKey& o) const { return kind == o.kind && index == o.index; }
  std::string str() const;
};

/// A manifold-valued optimization variable (local 15-dof or global 6-dof state).
class Variable {
 public:
  explicit Variable(const LocalState& s) : kind_(VariableKind::Local), local_(s) {}
  explicit Variable(const GlobalState& s) : kind_(VariableKind::Global), global_(s) {}

  VariableKind kind() const { return kind_; }
  int dim() const { return kind_ == VariableKind::Local ? 15 : 6; }
  int64_t t_ns() const { return kind_ == VariableKind::Local ? local_.t_ns : global_.t_ns; }

  const LocalState& local() const { return local_; }
  const GlobalState& global() const { return global_; }
  LocalState& local() { return local_; }
  GlobalState& global() { return global_; }

  Variable retracted(const Eigen::VectorXd& delta) const;
  /// Tangent coordinates of `other` relative to this (boxminus).
  Eigen::VectorXd localCoordinates(const Variable& other) const;

 private:
  VariableKind kind_;
  LocalState local_;
  GlobalState global_;
};

using Values = std::map<VariableKey, Variable>;

/// Base factor: whitening via a square-root information matrix.
class Factor {
 public:
  Factor(std::vector<VariableKey> keys, const Eigen::MatrixXd& sqrt_info)
      : keys_(std::move(keys)), sqrt_info_(sqrt_info) {}
  virtual ~Factor() = default;

  const std::vector<VariableKey>& keys() const { return keys_; }
  const Eigen::MatrixXd& sqrtInfo() const { return sqrt_info_; }
  virtual int dim() const = 0;
  virtual std::string name() const = 0;

  virtual Eigen::VectorXd unwhitenedError(const Values& values) const = 0;
  /// Unwhitened Jacobians, one block per key, in key order.
  virtual std::vector<Eigen::MatrixXd> jacobians(const Values& values) const = 0;

  Eigen::VectorXd whitenedError(const Values& values) const {
    return sqrt_info_ * unwhitenedError(values);
  }

  static Eigen::MatrixXd sqrtInfoFromCovariance(const Eigen::MatrixXd& cov);
  static Eigen::MatrixXd sqrtInfoFromSigmas(const Eigen::VectorXd& sigmas);

 protected:
  std::vector<VariableKey> keys_;
  Eigen::MatrixXd sqrt_info_;
};

struct OptimizeOptions {
  int max_iterations = 25;
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e10;
  double relative_error_tol = 1e-12;
  double delta_tol = 1e-12;
};

struct OptimizeResult {
  int iterations = 0;
  double initial_error = 0.0;
  double final_error = 0.0;
  bool converged = false;
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Factor graph over manifold variables with Levenberg-Marquardt optimization
/// and Schur-complement marginalization for fixed-lag smoothing.
class Graph {
 public:
  void insert(const VariableKey& key, const Variable& v);
  void erase(const VariableKey& key);
  bool exists(const VariableKey& key) const { return values_.count(key) > 0; }
  const Variable& at(const VariableKey& key) const;
  Variable& at(const VariableKey& key);
  const Values& values() const { return values_; }
  size_t numVariables() const { return values_.size(); }

  void add(std::shared_ptr<Factor> factor);
  const std::vector<std::shared_ptr<Factor>>& factors() const { return factors_; }
  size_t numFactors() const { return factors_.size(); }

  /// Total squared Mahalanobis error (0.5 * sum of whitened residual norms^2).
  double totalError() const;
  double totalError(const Values& values) const;

  OptimizeResult optimize(const OptimizeOptions& options = {});

  /// Removes the given variables, summarizing their factors by a Gaussian
  /// prior on the Markov blanket (Schur complement at current estimates).
  void marginalizeOut(const std::vector<VariableKey>& keys);

  /// Marginal covariance block of a single variable at the current estimate.
  Eigen::MatrixXd marginalCovariance(const VariableKey& key) const;

  /// Text listing of variables and factors.
  std::string dump() const;

 private:
  struct Ordering {
    std::map<VariableKey, int> offset;
    int total_dim = 0;
  };
  Ordering buildOrdering() const;
  void buildNormalEquations(const Values& values, const Ordering& ordering,
                            Eigen::SparseMatrix<double>& h, Eigen::VectorXd& b) const;
  void checkConstrained(const Ordering& ordering, const Eigen::SparseMatrix<double>& h) const;

  Values values_;
  std::vector<std::shared_ptr<Factor>> factors_;
};

}  // namespace layout
