#include "uura/ml_detector.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uura/covariance_ledger.hpp"
#include "uura/kernels/kernels.hpp"

namespace uura {

namespace {

constexpr int kRefactorSweepCadence = 50;

void require_psd(const mig::HermMatrix& sample) {
  using EMat = Eigen::MatrixXcd;
  Eigen::Map<const EMat> m(sample.entries.data(), sample.dim, sample.dim);
  const double asym = (m - m.adjoint()).norm();
  if (asym > 1e-10 * std::max(m.norm(), 1e-300))
    throw std::domain_error("solve_p0: sample covariance is not Hermitian");
  Eigen::SelfAdjointEigenSolver<EMat> es(m, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin < -1e-10 * std::max(lmax, 1e-300))
    throw std::domain_error(
        "solve_p0: sample covariance is not positive semidefinite");
}

}  // namespace

MlEstimate solve_p0(const mig::HermMatrix& sample_cov,
                    const Codebook& codebook, double sigma2,
                    const DetectionConfig& config, Rng* sweep_rng,
                    const CoordinateObserver& on_update) {
  require_psd(sample_cov);
  const int n0 = codebook.rows;
  const int size = codebook.cols;
  const auto& ops = kernels::active();

  CovarianceLedger ledger(n0, sigma2);
  MlEstimate est;
  est.gamma.assign(size, 0.0);
  double objective = ledger.objective(sample_cov);

  std::vector<Cplx> w(n0), v(n0);
  std::vector<int> order(size);
  std::iota(order.begin(), order.end(), 0);

  int sweep = 0;
  for (; sweep < config.max_sweeps; ++sweep) {
    if (sweep > 0 && sweep % kRefactorSweepCadence == 0) {
      ledger.refactor(codebook, est.gamma);
      objective = ledger.objective(sample_cov);
    }
    if (config.randomize_sweep_order && sweep_rng) {
      for (int i = size - 1; i > 0; --i) {
        const int j = int(sweep_rng->next_below(std::uint64_t(i) + 1));
        std::swap(order[i], order[j]);
      }
    }

    double max_change = 0.0;
    for (const int j : order) {
      const Cplx* c = codebook.column(j + 1);
      for (int attempt = 0;; ++attempt) {
        ledger.inv_matvec(c, w.data());
        const double s = ops.zdotc(c, w.data(), std::size_t(n0)).real();
        ops.zgemv(sample_cov.entries.data(), std::size_t(n0),
                  std::size_t(n0), w.data(), v.data());
        const double q = ops.zdotc(w.data(), v.data(), std::size_t(n0)).real();

        // Closed-form coordinate minimizer, clipped to the feasible set.
        const double proposal = est.gamma[j] + (q - s) / (s * s);
        const double next = std::max(0.0, proposal);
        const double delta = next - est.gamma[j];
        if (delta == 0.0) break;

        if (ledger.try_rank1_update(c, delta, w.data(), s)) {
          const double denom = 1.0 + delta * s;
          objective += std::log(denom) - delta * q / denom;
          est.gamma[j] = next;
          max_change = std::max(max_change, std::abs(delta));
          if (on_update) on_update(j + 1, next, objective);
          break;
        }
        if (attempt > 0)
          throw std::runtime_error(
              "solve_p0: rank-1 inverse update degenerate after refactor");
        ledger.refactor(codebook, est.gamma);
      }
    }
    est.objective_trace.push_back(objective);
    if (max_change < config.sweep_tolerance) {
      ++sweep;
      break;
    }
  }
  est.iterations = sweep;
  est.objective = objective;
  return est;
}

std::pair<std::vector<int>, int> estimate_active_count(
    std::span<const double> gamma, double threshold) {
  std::vector<int> active;
  for (std::size_t j = 0; j < gamma.size(); ++j)
    if (gamma[j] > threshold) active.push_back(int(j) + 1);
  const int count = int(active.size());
  return {std::move(active), count};
}

std::vector<int> top_k_indices(std::span<const double> values, int k) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min<int>(k, int(values.size()));
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(),
                    [&](int a, int b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  idx.resize(take);
  for (auto& i : idx) ++i;  // 1-based codeword indices
  return idx;
}

ClassRegistry init_classes(std::span<const int> active_list,
                           std::span<const double> gamma, int antennas) {
  ClassRegistry registry;
  registry.antennas = antennas;
  registry.classes.reserve(active_list.size());
  for (const int j : active_list) {
    StitchClass cls;
    cls.center = mig::make_center({antennas, gamma[std::size_t(j) - 1]});
    cls.members.push_back(j);
    registry.classes.push_back(std::move(cls));
  }
  return registry;
}

}  // namespace uura
