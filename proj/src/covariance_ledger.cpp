#include "uura/covariance_ledger.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "uura/kernels/kernels.hpp"

namespace uura {

CovarianceLedger::CovarianceLedger(int dim, double sigma2)
    : dim_(dim),
      sigma2_(sigma2),
      cov_(std::size_t(dim) * dim),
      inv_(std::size_t(dim) * dim) {
  if (!(sigma2 > 0.0))
    throw std::domain_error("CovarianceLedger: sigma2 must be positive");
  reset_to_noise();
}

void CovarianceLedger::reset_to_noise() {
  std::fill(cov_.begin(), cov_.end(), Cplx{});
  std::fill(inv_.begin(), inv_.end(), Cplx{});
  for (int i = 0; i < dim_; ++i) {
    cov_[std::size_t(i) * dim_ + i] = sigma2_;
    inv_[std::size_t(i) * dim_ + i] = 1.0 / sigma2_;
  }
  log_det_ = dim_ * std::log(sigma2_);
}

void CovarianceLedger::refactor(const Codebook& codebook,
                                std::span<const double> gamma) {
  const auto& ops = kernels::active();
  std::fill(cov_.begin(), cov_.end(), Cplx{});
  for (int i = 0; i < dim_; ++i) cov_[std::size_t(i) * dim_ + i] = sigma2_;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    if (gamma[j] > 0.0)
      ops.zher(cov_.data(), std::size_t(dim_), gamma[j],
               codebook.column(int(j) + 1));
  }

  using EMat = Eigen::MatrixXcd;
  Eigen::Map<const EMat> psi(cov_.data(), dim_, dim_);
  Eigen::LLT<EMat> llt(psi);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("CovarianceLedger: Cholesky factorization failed");
  EMat::Map(inv_.data(), dim_, dim_) =
      llt.solve(EMat::Identity(dim_, dim_));
  log_det_ = 0.0;
  for (int i = 0; i < dim_; ++i)
    log_det_ += 2.0 * std::log(llt.matrixLLT()(i, i).real());
}

bool CovarianceLedger::try_rank1_update(const Cplx* c, double delta,
                                        const Cplx* w, double s_tilde) {
  const double denom = 1.0 + delta * s_tilde;
  if (!(denom > 1e-12)) return false;
  const auto& ops = kernels::active();
  ops.zher(inv_.data(), std::size_t(dim_), -delta / denom, w);
  ops.zher(cov_.data(), std::size_t(dim_), delta, c);
  log_det_ += std::log(denom);
  return true;
}

void CovarianceLedger::inv_matvec(const Cplx* x, Cplx* out) const {
  kernels::active().zgemv(inv_.data(), std::size_t(dim_), std::size_t(dim_),
                          x, out);
}

double CovarianceLedger::trace_inv_times(const mig::HermMatrix& sample) const {
  // tr(A B) = sum_i conj(A col_i) . (B col_i) for Hermitian A.
  const auto& ops = kernels::active();
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i) {
    acc += ops.zdotc(inv_.data() + std::size_t(i) * dim_,
                     sample.entries.data() + std::size_t(i) * dim_,
                     std::size_t(dim_))
               .real();
  }
  return acc;
}

}  // namespace uura
