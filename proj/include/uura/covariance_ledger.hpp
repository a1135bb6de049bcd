#pragma once

#include <span>
#include <vector>

#include "uura/mig.hpp"
#include "uura/system_model.hpp"

namespace uura {

// Model covariance bookkeeping for the likelihood solvers: maintains
// Psi = sigma^2 I + sum_j gamma_j c_j c_j^H together with its inverse and
// log-determinant under rank-1 gain changes. The incremental path uses
// Sherman-Morrison updates; refactor() rebuilds everything from scratch via
// a Cholesky factorization and is the recovery path when an update
// denominator degenerates.
class CovarianceLedger {
 public:
  CovarianceLedger(int dim, double sigma2);

  // Psi = sigma^2 I (the all-zero gain state).
  void reset_to_noise();

  // Exact rebuild from the given gains.
  void refactor(const Codebook& codebook, std::span<const double> gamma);

  // Psi += delta c c^H with matching inverse and log-det updates.
  // w must hold inv()*c and s_tilde = Re(c^H inv() c); both are what callers
  // already computed for the gradient. Returns false (state untouched) when
  // 1 + delta*s_tilde <= 1e-12.
  bool try_rank1_update(const Cplx* c, double delta, const Cplx* w,
                        double s_tilde);

  // out = inv() * x
  void inv_matvec(const Cplx* x, Cplx* out) const;

  int dim() const { return dim_; }
  double sigma2() const { return sigma2_; }
  const Cplx* cov() const { return cov_.data(); }
  const Cplx* inv() const { return inv_.data(); }
  double log_det() const { return log_det_; }

  // tr(inv() * sample), recomputed on demand.
  double trace_inv_times(const mig::HermMatrix& sample) const;

  // Negative log-likelihood value log|Psi| + tr(Psi^{-1} sample).
  double objective(const mig::HermMatrix& sample) const {
    return log_det_ + trace_inv_times(sample);
  }

 private:
  int dim_;
  double sigma2_;
  std::vector<Cplx> cov_;
  std::vector<Cplx> inv_;
  double log_det_ = 0.0;
};

}  // namespace uura
