#include "layout/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <sstream>

namespace layout {

std::string VariableKey::str() const {
  std::ostringstream os;
  os << (kind == VariableKind::Local ? "x" : "g") << index;
  return os.str();
}

Variable Variable::retracted(const Eigen::VectorXd& delta) const {
  if (kind_ == VariableKind::Local) {
    return Variable(local_.retract(Vec15(delta)));
  }
  return Variable(global_.retract(Eigen::Matrix<double, 6, 1>(delta)));
}

Eigen::VectorXd Variable::localCoordinates(const Variable& other) const {
  if (kind_ != other.kind_) throw std::logic_error("variable kind mismatch");
  if (kind_ == VariableKind::Local) {
    Vec15 d;
    d.segment<3>(0) = logSo3(local_.q_OI.inverse() * other.local_.q_OI);
    d.segment<3>(3) = other.local_.p_OI - local_.p_OI;
    d.segment<3>(6) = other.local_.v_OI - local_.v_OI;
    d.segment<3>(9) = other.local_.b_a - local_.b_a;
    d.segment<3>(12) = other.local_.b_g - local_.b_g;
    return d;
  }
  Eigen::Matrix<double, 6, 1> d;
  d.segment<3>(0) = logSo3(global_.q_BO.inverse() * other.global_.q_BO);
  d.segment<3>(3) = other.global_.p_BO - global_.p_BO;
  return d;
}

Eigen::MatrixXd Factor::sqrtInfoFromCovariance(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov.inverse());
  if (llt.info() == Eigen::Success) return llt.matrixU();
  // Fall back to a symmetric eigendecomposition for semidefinite inputs.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-18).cwiseInverse().cwiseSqrt();
  return inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd Factor::sqrtInfoFromSigmas(const Eigen::VectorXd& sigmas) {
  return sigmas.cwiseInverse().asDiagonal();
}

void Graph::insert(const VariableKey& key, const Variable& v) {
  if (values_.count(key)) throw std::logic_error("duplicate variable " + key.str());
  values_.emplace(key, v);
}

void Graph::erase(const VariableKey& key) { values_.erase(key); }

const Variable& Graph::at(const VariableKey& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("unknown variable " + key.str());
  return it->second;
}

Variable& Graph::at(const VariableKey& key) {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("unknown variable " + key.str());
  return it->second;
}

void Graph::add(std::shared_ptr<Factor> factor) {
  for (const auto& k : factor->keys())
    if (!values_.count(k))
      throw std::logic_error("factor " + factor->name() + " references unknown key " + k.str());
  factors_.push_back(std::move(factor));
}

double Graph::totalError() const { return totalError(values_); }

double Graph::totalError(const Values& values) const {
  double err = 0.0;
  for (const auto& f : factors_) err += 0.5 * f->whitenedError(values).squaredNorm();
  return err;
}

Graph::Ordering Graph::buildOrdering() const {
  Ordering ordering;
  int offset = 0;
  for (const auto& [key, var] : values_) {
    ordering.offset[key] = offset;
    offset += var.dim();
  }
  ordering.total_dim = offset;
  return ordering;
}

void Graph::buildNormalEquations(const Values& values, const Ordering& ordering,
                                 Eigen::SparseMatrix<double>& h, Eigen::VectorXd& b) const {
  std::vector<Eigen::Triplet<double>> triplets;
  b = Eigen::VectorXd::Zero(ordering.total_dim);
  for (const auto& f : factors_) {
    const Eigen::VectorXd r = f->sqrtInfo() * f->unwhitenedError(values);
    std::vector<Eigen::MatrixXd> jacs = f->jacobians(values);
    for (auto& j : jacs) j = f->sqrtInfo() * j;
    const auto& keys = f->keys();
    for (size_t a = 0; a < keys.size(); ++a) {
      const int oa = ordering.offset.at(keys[a]);
      b.segment(oa, jacs[a].cols()) -= jacs[a].transpose() * r;
      for (size_t c = 0; c < keys.size(); ++c) {
        const int oc = ordering.offset.at(keys[c]);
        const Eigen::MatrixXd block = jacs[a].transpose() * jacs[c];
        for (int row = 0; row < block.rows(); ++row)
          for (int col = 0; col < block.cols(); ++col)
            if (block(row, col) != 0.0) triplets.emplace_back(oa + row, oc + col, block(row, col));
      }
    }
  }
  h.resize(ordering.total_dim, ordering.total_dim);
  h.setFromTriplets(triplets.begin(), triplets.end());
}

void Graph::checkConstrained(const Ordering& ordering, const Eigen::SparseMatrix<double>& h) const {
  const Eigen::VectorXd diag = h.diagonal();
  std::vector<std::string> bad;
  for (const auto& [key, off] : ordering.offset) {
    const int dim = values_.at(key).dim();
    if (diag.segment(off, dim).maxCoeff() <= 0.0) bad.push_back(key.str());
  }
  if (!bad.empty()) {
    std::string msg = "singular system; underconstrained keys:";
    for (const auto& s : bad) msg += " " + s;
    throw SolverError(msg);
  }
}

OptimizeResult Graph::optimize(const OptimizeOptions& options) {
  OptimizeResult result;
  if (values_.empty() || factors_.empty()) {
    result.converged = true;
    return result;
  }
  const Ordering ordering = buildOrdering();
  double lambda = options.lambda_init;
  double error = totalError();
  result.initial_error = error;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::SparseMatrix<double> h;
    Eigen::VectorXd b;
    buildNormalEquations(values_, ordering, h, b);
    checkConstrained(ordering, h);

    bool accepted = false;
    while (lambda <= options.lambda_max) {
      Eigen::SparseMatrix<double> damped = h;
      // Marquardt damping on the diagonal.
      Eigen::VectorXd diag = h.diagonal();
      for (int i = 0; i < damped.rows(); ++i)
        damped.coeffRef(i, i) = diag[i] + lambda * std::max(diag[i], 1e-10);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(damped);
      if (chol.info() != Eigen::Success) {
        lambda *= options.lambda_factor;
        continue;
      }
      const Eigen::VectorXd delta = chol.solve(b);
      if (!delta.allFinite()) {
        lambda *= options.lambda_factor;
        continue;
      }
      Values trial = values_;
      for (auto& [key, var] : trial)
        var = var.retracted(delta.segment(ordering.offset.at(key), var.dim()));
      const double trial_error = totalError(trial);
      if (trial_error <= error) {
        values_ = std::move(trial);
        const double decrease = error - trial_error;
        error = trial_error;
        lambda = std::max(lambda / options.lambda_factor, 1e-12);
        accepted = true;
        result.iterations = iter + 1;
        if (decrease < options.relative_error_tol * std::max(error, 1.0) ||
            delta.lpNorm<Eigen::Infinity>() < options.delta_tol) {
          result.converged = true;
        }
        break;
      }
      lambda *= options.lambda_factor;
    }
    if (!accepted || result.converged) {
      result.converged = result.converged || !accepted;
      break;
    }
  }
  result.final_error = error;
  return result;
}

void Graph::marginalizeOut(const std::vector<VariableKey>& keys) {
  if (keys.empty()) return;
  std::vector<VariableKey> marg(keys.begin(), keys.end());
  std::sort(marg.begin(), marg.end());
  auto isMarg = [&](const VariableKey& k) {
    return std::binary_search(marg.begin(), marg.end(), k);
  };

  // Factors touching the marginalized variables, and the separator.
  std::vector<std::shared_ptr<Factor>> touched;
  std::vector<std::shared_ptr<Factor>> kept;
  std::map<VariableKey, int> sep;  // key -> column offset (filled below)
  for (const auto& f : factors_) {
    bool touches = false;
    for (const auto& k : f->keys())
      if (isMarg(k)) touches = true;
    (touches ? touched : kept).push_back(f);
    if (touches)
      for (const auto& k : f->keys())
        if (!isMarg(k)) sep[k] = 0;
  }

  if (sep.empty()) {
    // No remaining neighbors: drop the variables and their factors silently.
    factors_ = std::move(kept);
    for (const auto& k : marg) values_.erase(k);
    return;
  }

  // Dense ordering: marginalized block first, separator after.
  int m_dim = 0;
  std::map<VariableKey, int> m_off;
  for (const auto& k : marg) {
    m_off[k] = m_dim;
    m_dim += values_.at(k).dim();
  }
  int s_dim = 0;
  for (auto& [k, off] : sep) {
    off = s_dim;
    s_dim += values_.at(k).dim();
  }
  const int n = m_dim + s_dim;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  auto colOf = [&](const VariableKey& k) {
    return isMarg(k) ? m_off.at(k) : m_dim + sep.at(k);
  };
  for (const auto& f : touched) {
    const Eigen::VectorXd r = f->sqrtInfo() * f->unwhitenedError(values_);
    std::vector<Eigen::MatrixXd> jacs = f->jacobians(values_);
    for (auto& j : jacs) j = f->sqrtInfo() * j;
    const auto& fkeys = f->keys();
    for (size_t a = 0; a < fkeys.size(); ++a) {
      const int oa = colOf(fkeys[a]);
      b.segment(oa, jacs[a].cols()) -= jacs[a].transpose() * r;
      for (size_t c = 0; c < fkeys.size(); ++c)
        h.block(oa, colOf(fkeys[c]), jacs[a].cols(), jacs[c].cols()) +=
            jacs[a].transpose() * jacs[c];
    }
  }

  // Schur complement onto the separator.
  const Eigen::MatrixXd h_mm = h.topLeftCorner(m_dim, m_dim);
  const Eigen::MatrixXd h_sm = h.bottomLeftCorner(s_dim, m_dim);
  const Eigen::MatrixXd h_ss = h.bottomRightCorner(s_dim, s_dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_m(h_mm);
  Eigen::VectorXd inv = es_m.eigenvalues();
  for (int i = 0; i < inv.size(); ++i) inv[i] = inv[i] > 1e-10 ? 1.0 / inv[i] : 0.0;
  const Eigen::MatrixXd h_mm_inv =
      es_m.eigenvectors() * inv.asDiagonal() * es_m.eigenvectors().transpose();
  const Eigen::MatrixXd h_marg = h_ss - h_sm * h_mm_inv * h_sm.transpose();
  const Eigen::VectorXd b_marg = b.tail(s_dim) - h_sm * h_mm_inv * b.head(m_dim);

  // Square root of the marginal information; rank-deficient rows dropped.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h_marg + h_marg.transpose()));
  std::vector<int> keep_rows;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > 1e-12) keep_rows.push_back(i);
  Eigen::MatrixXd a_mat(static_cast<int>(keep_rows.size()), s_dim);
  Eigen::VectorXd c_vec(static_cast<int>(keep_rows.size()));
  for (size_t r_i = 0; r_i < keep_rows.size(); ++r_i) {
    const int i = keep_rows[r_i];
    const double s = std::sqrt(es.eigenvalues()[i]);
    a_mat.row(static_cast<int>(r_i)) = s * es.eigenvectors().col(i).transpose();
    c_vec[static_cast<int>(r_i)] = es.eigenvectors().col(i).dot(b_marg) / s;
  }

  std::vector<VariableKey> sep_keys;
  std::vector<Variable> lin;
  for (const auto& [k, off] : sep) {
    sep_keys.push_back(k);
    lin.push_back(values_.at(k));
  }

  factors_ = std::move(kept);
  if (a_mat.rows() > 0) {
    // Defined here to avoid a header cycle; see factors.hpp for LinearFactor.
    extern std::shared_ptr<Factor> makeLinearFactor(std::vector<VariableKey>, std::vector<Variable>,
                                                    const Eigen::MatrixXd&,
                                                    const Eigen::VectorXd&);
    factors_.push_back(makeLinearFactor(sep_keys, lin, a_mat, c_vec));
  }
  for (const auto& k : marg) values_.erase(k);
}

Eigen::MatrixXd Graph::marginalCovariance(const VariableKey& key) const {
  const Ordering ordering = buildOrdering();
  Eigen::SparseMatrix<double> h;
  Eigen::VectorXd b;
  buildNormalEquations(values_, ordering, h, b);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(h);
  if (chol.info() != Eigen::Success)
    throw SolverError("information matrix not positive definite in marginalCovariance");
  const int off = ordering.offset.at(key);
  const int dim = values_.at(key).dim();
  Eigen::MatrixXd cov(dim, dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(ordering.total_dim);
    e[off + i] = 1.0;
    cov.col(i) = chol.solve(e).segment(off, dim);
  }
  return 0.5 * (cov + cov.transpose());
}

std::string Graph::dump() const {
  std::ostringstream os;
  os << "variables (" << values_.size() << "):\n";
  for (const auto& [key, var] : values_)
    os << "  " << key.str() << " dim=" << var.dim() << " t_ns=" << var.t_ns() << "\n";
  os << "factors (" << factors_.size() << "):\n";
  for (const auto& f : factors_) {
    os << "  " << f->name() << "(";
    for (size_t i = 0; i < f->keys().size(); ++i) os << (i ? "," : "") << f->keys()[i].str();
    os << ")\n";
  }
  return os.str();
}

}  // namespace layout
