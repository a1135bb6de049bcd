#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "uura/class_registry.hpp"
#include "uura/covariance_ledger.hpp"
#include "uura/ml_detector.hpp"
#include "uura/system_model.hpp"

// Integrated per-sub-slot decoding: proximal gradient descent on the
// covariance likelihood with an l1 sparsity penalty and a geodesic stitching
// penalty, the two non-smooth terms handled by operator splitting. Detected
// codewords are assigned to stitching classes by minimum log-Euclidean
// distance and class centers absorb them immediately, so message fragments
// are final the moment a sub-slot is decoded.

namespace uura {

struct PenaltyConfig {
  double alpha = 0.1;             // sparsity weight
  double beta = 0.5;              // stitching weight, grid-tuned default
  double step_size = 0.03;
  double step_decay = 1.0;        // 1.0 = fixed step
  int max_iterations = 100;
  double convergence_tol = 1e-5;  // mean-square iterate change gate
  double gamma_floor = 1e-12;     // guards log/divide in the stitch term
  // Coordinate-descent passes for the per-sub-slot initial estimate; 0
  // starts the proximal loop from zero gains and leaves it the whole solve.
  int warm_start_sweeps = 2;
};

struct DecoderState {
  std::vector<double> gamma;
  CovarianceLedger ledger;
  std::vector<double> split_z;
  std::vector<double> error_u;
  int iteration = 0;
  double step = 0.0;

  DecoderState(int codebook_size, int dim, double sigma2)
      : gamma(codebook_size, 0.0),
        ledger(dim, sigma2),
        split_z(codebook_size, 0.0),
        error_u(codebook_size, 0.0) {}

  // scratch reused across iterations
  std::vector<double> grad_buf, a_buf, b_buf, sub_buf, next_buf;
  std::vector<Cplx> w_buf, v_buf;
};

// Likelihood gradient entry-wise via the rank-1 downdate of the maintained
// inverse. A non-positive downdate denominator triggers one refactorization
// and a retry; a second failure throws std::runtime_error.
void grad_f(DecoderState& state, const Codebook& codebook,
            const mig::HermMatrix& sample_cov, std::span<double> out);

// Gradient at an arbitrary gain vector through a freshly factorized state.
std::vector<double> gradient_at(const Codebook& codebook,
                                const mig::HermMatrix& sample_cov,
                                double sigma2, std::span<const double> gamma);

std::vector<double> soft_threshold(std::span<const double> a, double lambda);

struct StitchGradient {
  std::vector<double> subgradient;               // dense, zero off temp_list
  std::vector<std::pair<int, int>> assignments;  // (codeword, class index)
};

// For each listed codeword, the nearest class in log-gain and the
// (log gamma - center) / gamma correction pulling the gain toward it.
// Entries below the floor are treated as inactive. Throws std::domain_error
// on an empty registry.
StitchGradient stitch_subgradient(std::span<const double> gamma,
                                  std::span<const int> temp_list,
                                  const ClassRegistry& registry,
                                  double gamma_floor);

struct IterationInfo {
  int changed_coordinates = 0;
  int refactorizations = 0;
};

// One full splitting pass; mutates state in place.
IterationInfo proximal_iteration(DecoderState& state, const Codebook& codebook,
                                 const mig::HermMatrix& sample_cov,
                                 const ClassRegistry& registry,
                                 const PenaltyConfig& penalties);

// Composite objective the iteration descends: likelihood value from the
// ledger, l1 term, and the quadratic log-gain stitching term over the
// current top-K list.
double decoder_objective(const DecoderState& state,
                         const mig::HermMatrix& sample_cov,
                         const ClassRegistry& registry,
                         const PenaltyConfig& penalties);

struct SubSlotDecodeResult {
  std::vector<double> gamma_hat;
  std::vector<int> active_list;                  // ascending, 1-based
  std::vector<std::pair<int, int>> assignments;  // codeword -> class index
  std::vector<std::vector<std::uint8_t>> fragments;  // per class, J bits
  std::vector<double> mse_trace;        // per-iteration mean-square change
  std::vector<double> objective_trace;
  int iterations_used = 0;
  int stitch_conflicts = 0;
};

using IterationObserver =
    std::function<void(int iteration, std::span<const double> gamma)>;

// Decode one sub-slot (l >= 2): warm-started proximal loop, top-K detection,
// distance assignment with greedy conflict resolution, streaming center
// updates, fragment emission. Mutates the registry.
SubSlotDecodeResult decode_subslot(const mig::HermMatrix& sample_cov,
                                   const Codebook& codebook,
                                   ClassRegistry& registry,
                                   const PenaltyConfig& penalties,
                                   const MlEstimate& warm_start,
                                   double sigma2, int subblock_bits,
                                   const IterationObserver& observer = {});

struct SlotDiagnostics {
  int sub_slot = 0;
  int iterations = 0;
  int stitch_conflicts = 0;
  double final_objective = 0.0;
  std::vector<double> mse_trace;
  std::vector<double> objective_trace;
};

// Incremental session decoder: feed sub-slot signals in order; fragments for
// a sub-slot are final when consume() returns, before the next signal is
// touched.
class SessionDecoder {
 public:
  // first_slot_gain_scale is the known linear power factor the first
  // sub-slot was transmitted with; detection thresholds scale with it and
  // stitching features divide it out so class centers line up with the
  // unboosted gains of later sub-slots.
  SessionDecoder(const Codebook& codebook, double sigma2,
                 PenaltyConfig penalties, DetectionConfig detection,
                 double first_slot_gain_scale = 1.0);

  const SlotDiagnostics& consume(const SignalMatrix& signal,
                                 const IterationObserver& observer = {});

  int sub_slots_consumed() const { return slot_; }
  int estimated_active_count() const { return registry_.size(); }
  bool no_activity() const { return slot_ > 0 && registry_.empty(); }
  const ClassRegistry& registry() const { return registry_; }
  const std::vector<SlotDiagnostics>& diagnostics() const { return diags_; }

  // Fragments stitched so far, one message per class, chronological order.
  std::vector<Message> messages() const;

 private:
  const Codebook& codebook_;
  double sigma2_;
  PenaltyConfig penalties_;
  DetectionConfig detection_;
  double first_slot_gain_scale_;
  ClassRegistry registry_;
  int slot_ = 0;
  std::vector<SlotDiagnostics> diags_;
};

struct SessionResult {
  std::vector<Message> messages;
  std::vector<SlotDiagnostics> diagnostics;
  bool no_activity = false;
};

SessionResult decode_session(std::span<const SignalMatrix> signals,
                             const Codebook& codebook, double sigma2,
                             const PenaltyConfig& penalties,
                             const DetectionConfig& detection,
                             double first_slot_gain_scale = 1.0);

// Empirical Lipschitz constant of the likelihood gradient over random
// nonnegative pairs at the given scale; feeds the step-size rule
// step <= 1 / estimate.
double estimate_gradient_lipschitz(const Codebook& codebook,
                                   const mig::HermMatrix& sample_cov,
                                   double sigma2, double gamma_scale,
                                   int pairs, Rng& rng);

}  // namespace uura
