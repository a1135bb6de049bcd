#include "uura/mig.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace uura::mig {

namespace {

using EMat = Eigen::MatrixXcd;
using EMap = Eigen::Map<const EMat>;

EMap map_of(const HermMatrix& m) { return EMap(m.entries.data(), m.dim, m.dim); }

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw std::domain_error(os.str());
  }
}

void require_hermitian(const HermMatrix& a, const char* what) {
  const EMap m = map_of(a);
  const double asym = (m - m.adjoint()).norm();
  const double scale = m.norm();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << what << ": input is not Hermitian (relative asymmetry "
       << asym / std::max(scale, 1e-300) << ")";
    throw std::domain_error(os.str());
  }
}

// Eigendecomposition with the positive-definiteness gate: smallest
// eigenvalue must exceed dim * 1e-12 * largest. Below that we reject;
// callers decide how to regularize.
Eigen::SelfAdjointEigenSolver<EMat> decompose_hpd(const HpdMatrix& a,
                                                  const char* what) {
  require_hermitian(a, what);
  Eigen::SelfAdjointEigenSolver<EMat> es(map_of(a));
  if (es.info() != Eigen::Success)
    throw std::domain_error(std::string(what) +
                            ": eigendecomposition failed");
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > a.dim * 1e-12 * lmax) || !(lmax > 0.0)) {
    std::ostringstream os;
    os << what << ": eigenvalue " << lmin
       << " is not strictly positive (largest " << lmax << ")";
    throw std::domain_error(os.str());
  }
  return es;
}

HermMatrix from_eigen(const EMat& m) {
  HermMatrix out(int(m.rows()));
  EMat::Map(out.entries.data(), m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

HermMatrix HermMatrix::identity(int d, double scale) {
  HermMatrix m(d);
  for (int i = 0; i < d; ++i) m.at(i, i) = scale;
  return m;
}

HpdMatrix ScaledIdentity::dense() const {
  return HermMatrix::identity(dim, gain);
}

HermMatrix matrix_log(const HpdMatrix& a) {
  auto es = decompose_hpd(a, "matrix_log");
  const Eigen::VectorXd lam = es.eigenvalues().array().log();
  return from_eigen(es.eigenvectors() * lam.asDiagonal() *
                    es.eigenvectors().adjoint());
}

HpdMatrix matrix_exp(const HermMatrix& h) {
  require_hermitian(h, "matrix_exp");
  Eigen::SelfAdjointEigenSolver<EMat> es(map_of(h));
  if (es.info() != Eigen::Success)
    throw std::domain_error("matrix_exp: eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues().array().exp();
  return from_eigen(es.eigenvectors() * lam.asDiagonal() *
                    es.eigenvectors().adjoint());
}

double log_euclidean_distance(const HpdMatrix& a, const HpdMatrix& b) {
  require_same_dim(a.dim, b.dim, "log_euclidean_distance");
  const HermMatrix la = matrix_log(a);
  const HermMatrix lb = matrix_log(b);
  return (map_of(la) - map_of(lb)).norm();
}

double log_euclidean_distance(const ScaledIdentity& a,
                              const ScaledIdentity& b) {
  require_same_dim(a.dim, b.dim, "log_euclidean_distance");
  return std::sqrt(double(a.dim)) * std::abs(std::log(a.gain) -
                                             std::log(b.gain));
}

double log_euclidean_distance(const ScaledIdentity& a, const HpdMatrix& b) {
  require_same_dim(a.dim, b.dim, "log_euclidean_distance");
  HermMatrix lb = matrix_log(b);
  const double lg = std::log(a.gain);
  for (int i = 0; i < b.dim; ++i) lb.at(i, i) -= lg;
  return map_of(lb).norm();
}

double log_euclidean_distance(const HpdMatrix& a, const ScaledIdentity& b) {
  return log_euclidean_distance(b, a);
}

ScaledIdentity geometric_center(std::span<const ScaledIdentity> set) {
  if (set.empty())
    throw std::domain_error("geometric_center: empty set");
  const int dim = set.front().dim;
  double acc = 0.0;
  for (const auto& r : set) {
    require_same_dim(dim, r.dim, "geometric_center");
    acc += std::log(r.gain);
  }
  return {dim, std::exp(acc / double(set.size()))};
}

HpdMatrix geometric_center_dense(std::span<const HpdMatrix> set) {
  if (set.empty())
    throw std::domain_error("geometric_center_dense: empty set");
  const int dim = set.front().dim;
  HermMatrix acc(dim);
  for (const auto& a : set) {
    require_same_dim(dim, a.dim, "geometric_center_dense");
    const HermMatrix la = matrix_log(a);
    for (std::size_t i = 0; i < acc.entries.size(); ++i)
      acc.entries[i] += la.entries[i];
  }
  for (auto& e : acc.entries) e /= double(set.size());
  return matrix_exp(acc);
}

LogCenter make_center(const ScaledIdentity& first) {
  if (!(first.gain > 0.0))
    throw std::domain_error("make_center: gain must be positive");
  return {first.dim, std::log(first.gain), 1};
}

LogCenter update_center(const LogCenter& center, const ScaledIdentity& added) {
  require_same_dim(center.dim, added.dim, "update_center");
  const double lg = std::log(added.gain);
  const double n = double(center.member_count);
  return {center.dim, (n * center.log_gain + lg) / (n + 1.0),
          center.member_count + 1};
}

double center_distance(const LogCenter& center, const ScaledIdentity& r) {
  require_same_dim(center.dim, r.dim, "center_distance");
  return std::sqrt(double(center.dim)) *
         std::abs(center.log_gain - std::log(r.gain));
}

}  // namespace uura::mig
