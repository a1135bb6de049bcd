#pragma once

#include <complex>
#include <span>
#include <vector>

// Geometry of Hermitian positive definite matrices under the log-Euclidean
// metric: matrix log/exp, geodesic distance, geometric centers. The decoder
// only ever touches scaled identities gamma*I, which have exact closed forms;
// the dense path exists for general matrices and for cross-validating the
// fast path.

namespace uura::mig {

using Cplx = std::complex<double>;

// Column-major square complex matrix, Hermitian by contract of the functions
// that produce it. Also used for HPD inputs; positive definiteness is
// validated where an operation requires it.
struct HermMatrix {
  int dim = 0;
  std::vector<Cplx> entries;  // dim*dim, column-major

  HermMatrix() = default;
  explicit HermMatrix(int d) : dim(d), entries(std::size_t(d) * d) {}

  Cplx& at(int i, int j) { return entries[std::size_t(j) * dim + i]; }
  const Cplx& at(int i, int j) const {
    return entries[std::size_t(j) * dim + i];
  }

  static HermMatrix identity(int d, double scale = 1.0);
};

using HpdMatrix = HermMatrix;

// gamma * I_dim, represented exactly.
struct ScaledIdentity {
  int dim = 0;
  double gain = 0.0;

  HpdMatrix dense() const;
};

// Running log-domain geometric center of a class: the mean of the log-gains
// of the scaled identities absorbed so far.
struct LogCenter {
  int dim = 0;
  double log_gain = 0.0;
  int member_count = 0;
};

// Throws std::domain_error if a is not Hermitian (relative asymmetry above
// 1e-12) or not positive definite (smallest eigenvalue named in the message).
HermMatrix matrix_log(const HpdMatrix& a);

// Matrix exponential of a Hermitian matrix; result is HPD.
HpdMatrix matrix_exp(const HermMatrix& h);

// ||Log(a) - Log(b)||_F
double log_euclidean_distance(const HpdMatrix& a, const HpdMatrix& b);
// Fast path: sqrt(dim) * |ln ga - ln gb| without forming matrices.
double log_euclidean_distance(const ScaledIdentity& a,
                              const ScaledIdentity& b);
double log_euclidean_distance(const ScaledIdentity& a, const HpdMatrix& b);
double log_euclidean_distance(const HpdMatrix& a, const ScaledIdentity& b);

// Geometric mean of the gains (the log-Euclidean Frechet mean of scaled
// identities). Throws std::domain_error on an empty set or mixed dims.
ScaledIdentity geometric_center(std::span<const ScaledIdentity> set);

// Dense Frechet mean exp[(1/N) sum Log(A_i)]; cross-validation path.
HpdMatrix geometric_center_dense(std::span<const HpdMatrix> set);

LogCenter make_center(const ScaledIdentity& first);

// Streaming absorption of one more member; exactly equals recomputing the
// batch geometric center over all members.
LogCenter update_center(const LogCenter& center, const ScaledIdentity& added);

// Geodesic distance between a center and gamma*I.
double center_distance(const LogCenter& center, const ScaledIdentity& r);

}  // namespace uura::mig
