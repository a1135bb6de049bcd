#include "uura/integrated_decoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uura/kernels/kernels.hpp"

namespace uura {

namespace {

constexpr int kRefactorIterationCadence = 50;
constexpr double kCoordinateChangeFloor = 1e-14;

int subblock_bits_of(const Codebook& cb) {
  return std::bit_width(unsigned(cb.cols)) - 1;
}

}  // namespace

void grad_f(DecoderState& state, const Codebook& codebook,
            const mig::HermMatrix& sample_cov, std::span<double> out) {
  const int n0 = codebook.rows;
  const int size = codebook.cols;
  const auto& ops = kernels::active();
  state.w_buf.resize(n0);
  state.v_buf.resize(n0);
  Cplx* w = state.w_buf.data();
  Cplx* v = state.v_buf.data();

  bool refactored = false;
  for (int j = 0; j < size;) {
    const Cplx* c = codebook.column(j + 1);
    state.ledger.inv_matvec(c, w);
    const double s_full = ops.zdotc(c, w, std::size_t(n0)).real();
    // Denominator of the rank-1 downdate removing this coordinate's own
    // contribution from the maintained covariance.
    const double d = 1.0 - state.gamma[j] * s_full;
    if (!(d > 1e-12)) {
      if (refactored)
        throw std::runtime_error(
            "grad_f: downdate denominator degenerate after refactorization");
      state.ledger.refactor(codebook, state.gamma);
      refactored = true;
      j = 0;  // earlier entries were computed against the stale inverse
      continue;
    }
    ops.zgemv(sample_cov.entries.data(), std::size_t(n0), std::size_t(n0), w,
              v);
    const double q_full = ops.zdotc(w, v, std::size_t(n0)).real();
    const double s = s_full / d;
    const double q = q_full / (d * d);
    const double e = 1.0 + state.gamma[j] * s;
    out[j] = s / e - q / (e * e);
    ++j;
  }
}

std::vector<double> gradient_at(const Codebook& codebook,
                                const mig::HermMatrix& sample_cov,
                                double sigma2, std::span<const double> gamma) {
  DecoderState state(codebook.cols, codebook.rows, sigma2);
  state.gamma.assign(gamma.begin(), gamma.end());
  state.ledger.refactor(codebook, state.gamma);
  std::vector<double> out(codebook.cols);
  grad_f(state, codebook, sample_cov, out);
  return out;
}

std::vector<double> soft_threshold(std::span<const double> a, double lambda) {
  if (lambda < 0.0)
    throw std::domain_error("soft_threshold: lambda must be nonnegative");
  std::vector<double> out(a.size());
  kernels::active().soft_threshold(out.data(), a.data(), a.size(), lambda);
  return out;
}

StitchGradient stitch_subgradient(std::span<const double> gamma,
                                  std::span<const int> temp_list,
                                  const ClassRegistry& registry,
                                  double gamma_floor) {
  if (registry.empty())
    throw std::domain_error("stitch_subgradient: empty class registry");
  StitchGradient out;
  out.subgradient.assign(gamma.size(), 0.0);
  out.assignments.reserve(temp_list.size());
  for (const int j1 : temp_list) {
    const double g = gamma[std::size_t(j1) - 1];
    if (g < gamma_floor) continue;  // inactive, no pull toward any class
    const double x = std::log(g);
    int best = 0;
    double best_dist = std::abs(registry.classes[0].center.log_gain - x);
    for (int k = 1; k < registry.size(); ++k) {
      const double d = std::abs(registry.classes[k].center.log_gain - x);
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    out.subgradient[std::size_t(j1) - 1] =
        (x - registry.classes[best].center.log_gain) / g;
    out.assignments.emplace_back(j1, best);
  }
  return out;
}

IterationInfo proximal_iteration(DecoderState& state, const Codebook& codebook,
                                 const mig::HermMatrix& sample_cov,
                                 const ClassRegistry& registry,
                                 const PenaltyConfig& penalties) {
  const int size = codebook.cols;
  const auto& ops = kernels::active();
  IterationInfo info;

  if (state.step == 0.0) state.step = penalties.step_size;
  const double eta = state.step;
  const double beta = penalties.beta;

  if (state.iteration > 0 &&
      state.iteration % kRefactorIterationCadence == 0) {
    state.ledger.refactor(codebook, state.gamma);
    ++info.refactorizations;
  }

  state.grad_buf.resize(size);
  state.a_buf.resize(size);
  state.b_buf.resize(size);
  state.next_buf.resize(size);

  const std::vector<int> temp_list =
      top_k_indices(state.gamma, registry.size());

  grad_f(state, codebook, sample_cov, state.grad_buf);

  for (int i = 0; i < size; ++i) {
    state.a_buf[i] = state.gamma[i] - eta * state.grad_buf[i] -
                     eta * beta * state.error_u[i];
  }
  ops.soft_threshold(state.split_z.data(), state.a_buf.data(),
                     std::size_t(size), penalties.alpha * eta);
  for (int i = 0; i < size; ++i)
    state.b_buf[i] = state.split_z[i] + eta * beta * state.error_u[i];

  if (beta > 0.0 && !registry.empty()) {
    const StitchGradient sg = stitch_subgradient(
        state.gamma, temp_list, registry, penalties.gamma_floor);
    for (int i = 0; i < size; ++i)
      state.next_buf[i] =
          std::max(0.0, state.b_buf[i] - beta * eta * sg.subgradient[i]);
  } else {
    // Degenerate sparse-only mode: no stitching pull, no error signal.
    for (int i = 0; i < size; ++i)
      state.next_buf[i] = std::max(0.0, state.b_buf[i]);
  }

  // Fold the gain changes into the covariance pair, one rank-1 per moved
  // coordinate; a degenerate inverse update falls back to a full rebuild.
  state.w_buf.resize(codebook.rows);
  for (int j = 0; j < size; ++j) {
    const double delta = state.next_buf[j] - state.gamma[j];
    state.gamma[j] = state.next_buf[j];
    if (std::abs(delta) <= kCoordinateChangeFloor) continue;
    ++info.changed_coordinates;
    const Cplx* c = codebook.column(j + 1);
    state.ledger.inv_matvec(c, state.w_buf.data());
    const double s =
        ops.zdotc(c, state.w_buf.data(), std::size_t(codebook.rows)).real();
    if (!state.ledger.try_rank1_update(c, delta, state.w_buf.data(), s)) {
      state.ledger.refactor(codebook, state.gamma);
      ++info.refactorizations;
    }
  }

  if (beta > 0.0) {
    const double inv = 1.0 / (eta * beta);
    for (int i = 0; i < size; ++i)
      state.error_u[i] += inv * (state.split_z[i] - state.gamma[i]);
  }

  state.step = eta * penalties.step_decay;
  ++state.iteration;
  return info;
}

double decoder_objective(const DecoderState& state,
                         const mig::HermMatrix& sample_cov,
                         const ClassRegistry& registry,
                         const PenaltyConfig& penalties) {
  double value = state.ledger.objective(sample_cov);
  double l1 = 0.0;
  for (const double g : state.gamma) l1 += std::abs(g);
  value += penalties.alpha * l1;
  if (penalties.beta > 0.0 && !registry.empty()) {
    const std::vector<int> temp_list =
        top_k_indices(state.gamma, registry.size());
    double acc = 0.0;
    for (const int j1 : temp_list) {
      const double g = state.gamma[std::size_t(j1) - 1];
      if (g < penalties.gamma_floor) continue;
      const double x = std::log(g);
      double best = std::abs(registry.classes[0].center.log_gain - x);
      for (int k = 1; k < registry.size(); ++k)
        best = std::min(best,
                        std::abs(registry.classes[k].center.log_gain - x));
      acc += best * best;
    }
    value += penalties.beta * 0.5 * acc;
  }
  return value;
}

SubSlotDecodeResult decode_subslot(const mig::HermMatrix& sample_cov,
                                   const Codebook& codebook,
                                   ClassRegistry& registry,
                                   const PenaltyConfig& penalties,
                                   const MlEstimate& warm_start,
                                   double sigma2, int subblock_bits,
                                   const IterationObserver& observer) {
  if (registry.empty())
    throw std::runtime_error("decode_subslot: no stitching classes");
  const int size = codebook.cols;
  const int klasses = registry.size();
  const auto& ops = kernels::active();

  DecoderState state(size, codebook.rows, sigma2);
  state.gamma = warm_start.gamma;
  state.step = penalties.step_size;

  SubSlotDecodeResult res;
  std::vector<double> prev(size);
  for (int t = 1; t <= penalties.max_iterations; ++t) {
    prev = state.gamma;
    proximal_iteration(state, codebook, sample_cov, registry, penalties);
    const double delta =
        ops.sum_sq_diff(state.gamma.data(), prev.data(), std::size_t(size)) /
        double(size);
    res.mse_trace.push_back(delta);
    res.objective_trace.push_back(
        decoder_objective(state, sample_cov, registry, penalties));
    if (observer) observer(t, state.gamma);
    res.iterations_used = t;
    if (delta < penalties.convergence_tol) break;
  }
  // Rebuild the covariance pair exactly from the final gains; the streamed
  // state started from the noise-only matrix, not from the warm start.
  state.ledger.refactor(codebook, state.gamma);
  res.gamma_hat = state.gamma;

  // Detection: the K largest gains are this sub-slot's active codewords.
  const std::vector<int> top = top_k_indices(res.gamma_hat, klasses);
  res.active_list = top;
  std::sort(res.active_list.begin(), res.active_list.end());

  // Assignment by geodesic distance. Raw per-codeword argmin first (for the
  // conflict diagnostic), then greedy one-codeword-per-class completion in
  // ascending distance order.
  struct Cand {
    double dist;
    int j;
    int k;
  };
  std::vector<Cand> cands;
  cands.reserve(std::size_t(klasses) * top.size());
  std::vector<int> raw_argmin(size + 1, -1);
  for (const int j1 : top) {
    const double g =
        std::max(res.gamma_hat[std::size_t(j1) - 1], penalties.gamma_floor);
    const double x = std::log(g);
    double best = 0.0;
    for (int k = 0; k < klasses; ++k) {
      const double d = std::abs(registry.classes[k].center.log_gain - x);
      cands.push_back({d, j1, k});
      if (k == 0 || d < best) {
        best = d;
        raw_argmin[j1] = k;
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });
  std::vector<bool> class_taken(klasses, false);
  std::vector<int> codeword_class(size + 1, -1);
  int assigned = 0;
  for (const Cand& c : cands) {
    if (assigned == int(top.size())) break;
    if (class_taken[c.k] || codeword_class[c.j] >= 0) continue;
    class_taken[c.k] = true;
    codeword_class[c.j] = c.k;
    ++assigned;
  }

  res.fragments.assign(klasses, {});
  for (const int j1 : res.active_list) {
    const int k = codeword_class[j1];
    res.assignments.emplace_back(j1, k);
    if (k != raw_argmin[j1]) ++res.stitch_conflicts;
    const double g =
        std::max(res.gamma_hat[std::size_t(j1) - 1], penalties.gamma_floor);
    registry.classes[k].center = mig::update_center(
        registry.classes[k].center, {registry.antennas, g});
    registry.classes[k].members.push_back(j1);
    res.fragments[k] = unmap_index(j1, subblock_bits);
  }
  return res;
}

SessionDecoder::SessionDecoder(const Codebook& codebook, double sigma2,
                               PenaltyConfig penalties,
                               DetectionConfig detection,
                               double first_slot_gain_scale)
    : codebook_(codebook),
      sigma2_(sigma2),
      penalties_(penalties),
      detection_(detection),
      first_slot_gain_scale_(first_slot_gain_scale) {}

const SlotDiagnostics& SessionDecoder::consume(
    const SignalMatrix& signal, const IterationObserver& observer) {
  ++slot_;
  SlotDiagnostics diag;
  diag.sub_slot = slot_;
  const mig::HermMatrix sample = sample_covariance(signal);

  if (slot_ == 1) {
    const MlEstimate est =
        solve_p0(sample, codebook_, sigma2_, detection_);
    const double scale = first_slot_gain_scale_;
    const auto [active, count] =
        estimate_active_count(est.gamma, detection_.threshold * scale);
    (void)count;
    // Divide the known first-slot power factor out of the center gains so
    // they are comparable with the later, unboosted sub-slots.
    std::vector<double> centered = est.gamma;
    if (scale != 1.0)
      for (auto& g : centered) g /= scale;
    registry_ = init_classes(active, centered, signal.cols);
    diag.iterations = est.iterations;
    diag.objective_trace = est.objective_trace;
    diag.final_objective = est.objective;
  } else if (!registry_.empty()) {
    DetectionConfig warm_cfg = detection_;
    warm_cfg.max_sweeps = penalties_.warm_start_sweeps;
    const MlEstimate warm =
        solve_p0(sample, codebook_, sigma2_, warm_cfg);
    SubSlotDecodeResult res =
        decode_subslot(sample, codebook_, registry_, penalties_, warm,
                       sigma2_, subblock_bits_of(codebook_), observer);
    diag.iterations = res.iterations_used;
    diag.stitch_conflicts = res.stitch_conflicts;
    diag.final_objective =
        res.objective_trace.empty() ? 0.0 : res.objective_trace.back();
    diag.mse_trace = std::move(res.mse_trace);
    diag.objective_trace = std::move(res.objective_trace);
  }
  diags_.push_back(std::move(diag));
  return diags_.back();
}

std::vector<Message> SessionDecoder::messages() const {
  const int bits = subblock_bits_of(codebook_);
  std::vector<Message> out;
  out.reserve(registry_.classes.size());
  for (const auto& cls : registry_.classes) {
    Message m;
    m.sub_blocks = cls.members;
    for (const int j1 : cls.members) {
      const auto fragment = unmap_index(j1, bits);
      m.bits.insert(m.bits.end(), fragment.begin(), fragment.end());
    }
    out.push_back(std::move(m));
  }
  return out;
}

SessionResult decode_session(std::span<const SignalMatrix> signals,
                             const Codebook& codebook, double sigma2,
                             const PenaltyConfig& penalties,
                             const DetectionConfig& detection,
                             double first_slot_gain_scale) {
  SessionDecoder decoder(codebook, sigma2, penalties, detection,
                         first_slot_gain_scale);
  for (const auto& signal : signals) decoder.consume(signal);
  SessionResult result;
  result.no_activity = decoder.no_activity();
  result.messages = decoder.messages();
  result.diagnostics = decoder.diagnostics();
  return result;
}

double estimate_gradient_lipschitz(const Codebook& codebook,
                                   const mig::HermMatrix& sample_cov,
                                   double sigma2, double gamma_scale,
                                   int pairs, Rng& rng) {
  const int size = codebook.cols;
  double worst = 0.0;
  std::vector<double> x(size), y(size);
  for (int p = 0; p < pairs; ++p) {
    for (int i = 0; i < size; ++i) x[i] = gamma_scale * rng.next_double();
    for (int i = 0; i < size; ++i) y[i] = gamma_scale * rng.next_double();
    const auto gx = gradient_at(codebook, sample_cov, sigma2, x);
    const auto gy = gradient_at(codebook, sample_cov, sigma2, y);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < size; ++i) {
      num += (gx[i] - gy[i]) * (gx[i] - gy[i]);
      den += (x[i] - y[i]) * (x[i] - y[i]);
    }
    if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

}  // namespace uura
