#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "uura/class_registry.hpp"
#include "uura/mig.hpp"
#include "uura/system_model.hpp"

// Maximum-likelihood codeword activity detection from the sample covariance:
// cyclic coordinate descent on the negative log-likelihood
// log|Psi| + tr(Psi^{-1} sample) with Psi = sigma^2 I + C diag(gamma) C^H.
// Used stand-alone for the first sub-slot (activity thresholding and class
// initialization) and as the warm start for every later sub-slot.

namespace uura {

struct DetectionConfig {
  double threshold = 1.0;         // activity gate on estimated gains
  int max_sweeps = 30;
  double sweep_tolerance = 1e-4;  // stop when max per-sweep gain change drops below
  bool randomize_sweep_order = false;  // fixed ascending order by default
};

struct MlEstimate {
  std::vector<double> gamma;
  double objective = 0.0;
  int iterations = 0;                   // full sweeps performed
  std::vector<double> objective_trace;  // value after each sweep
};

// Called after every accepted coordinate move with the running objective.
using CoordinateObserver =
    std::function<void(int coordinate, double gamma_value, double objective)>;

// Throws std::domain_error when sample_cov is not Hermitian PSD.
MlEstimate solve_p0(const mig::HermMatrix& sample_cov,
                    const Codebook& codebook, double sigma2,
                    const DetectionConfig& config, Rng* sweep_rng = nullptr,
                    const CoordinateObserver& on_update = {});

// Indices with gamma above the threshold, ascending; second element is the
// estimated active-UE count.
std::pair<std::vector<int>, int> estimate_active_count(
    std::span<const double> gamma, double threshold);

// 1-based indices of the k largest entries, ties broken toward lower index.
std::vector<int> top_k_indices(std::span<const double> values, int k);

// One class per detected codeword, centered at its estimated log-gain.
// An empty active list yields an empty registry (no detection, not an error).
ClassRegistry init_classes(std::span<const int> active_list,
                           std::span<const double> gamma, int antennas);

// Default activity gate: a fraction of the mean folded gain the target SNR
// implies.
inline double default_threshold(double noise_variance, double target_snr_db) {
  return 0.1 * noise_variance * std::pow(10.0, target_snr_db / 10.0);
}

}  // namespace uura
