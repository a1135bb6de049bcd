#include "doctest.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "uura/integrated_decoder.hpp"
#include "uura/ml_detector.hpp"
#include "uura/system_model.hpp"

using namespace uura;

namespace {

using EMat = Eigen::MatrixXcd;

// Independent objective evaluation: direct Cholesky log-det plus trace,
// no incremental bookkeeping involved.
double dense_objective(const Codebook& cb, std::span<const double> gamma,
                       double sigma2, const mig::HermMatrix& sample) {
  const int n0 = cb.rows;
  EMat psi = sigma2 * EMat::Identity(n0, n0);
  for (int j = 0; j < cb.cols; ++j) {
    if (gamma[j] <= 0.0) continue;
    const Eigen::Map<const Eigen::VectorXcd> c(cb.column(j + 1), n0);
    psi += gamma[j] * c * c.adjoint();
  }
  const Eigen::LLT<EMat> llt(psi);
  double logdet = 0.0;
  for (int i = 0; i < n0; ++i)
    logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  const EMat sm = Eigen::Map<const EMat>(sample.entries.data(), n0, n0);
  return logdet + llt.solve(sm).trace().real();
}

struct Instance {
  SystemConfig config;
  Codebook codebook;
  GroundTruth truth;
  mig::HermMatrix sample;
};

Instance make_instance(int subblock_bits, int n0, int antennas, int active,
                       double snr_db, std::uint64_t seed,
                       double spread_db = 0.0) {
  Instance inst;
  auto& c = inst.config;
  c.total_users = 10 * active;
  c.active_users = active;
  c.antennas = antennas;
  c.subblock_bits = subblock_bits;
  c.sub_slots = 2;
  c.codeword_length = n0;
  c.noise_variance = 1.0;
  c.target_snr_db = snr_db;
  c.gain_spread_db = spread_db;
  c.seed = seed;
  Rng cb_rng(seed);
  inst.codebook = generate_codebook(c, cb_rng);
  Rng msg_rng = make_stream(seed, "messages", 0);
  Rng gain_rng = make_stream(seed, "gains", 0);
  Rng chan_rng = make_stream(seed, "channel", 0);
  Rng noise_rng = make_stream(seed, "noise", 0);
  const auto msgs = draw_messages(c, msg_rng);
  const auto fading = draw_large_scale_fading(c, gain_rng);
  const auto chan = make_channel(c, fading, chan_rng);
  inst.truth = build_ground_truth(c, msgs, chan);
  inst.sample = sample_covariance(
      synthesize_received_signal(c, inst.codebook, inst.truth, chan, 1,
                                 noise_rng));
  return inst;
}

}  // namespace

TEST_CASE("noise-only sample keeps the estimate at zero") {
  SystemConfig c;
  c.total_users = 10;
  c.active_users = 1;
  c.subblock_bits = 4;
  c.sub_slots = 2;
  c.codeword_length = 8;
  c.noise_variance = 2.0;
  Rng cb_rng(1);
  const Codebook cb = generate_codebook(c, cb_rng);
  const mig::HermMatrix sample = [&] {
    mig::HermMatrix m(8);
    for (int i = 0; i < 8; ++i) m.at(i, i) = 2.0;
    return m;
  }();
  DetectionConfig det;
  const MlEstimate est = solve_p0(sample, cb, 2.0, det);
  for (const double g : est.gamma) CHECK(g == 0.0);
  CHECK(est.objective == doctest::Approx(8.0 * std::log(2.0) + 8.0));
}

TEST_CASE("rejects non-PSD sample covariance") {
  SystemConfig c;
  c.total_users = 10;
  c.active_users = 1;
  c.subblock_bits = 4;
  c.sub_slots = 2;
  c.codeword_length = 8;
  Rng cb_rng(1);
  const Codebook cb = generate_codebook(c, cb_rng);
  mig::HermMatrix bad(8);
  for (int i = 0; i < 8; ++i) bad.at(i, i) = -1.0;
  DetectionConfig det;
  CHECK_THROWS_AS(solve_p0(bad, cb, 1.0, det), std::domain_error);

  mig::HermMatrix asym(8);
  for (int i = 0; i < 8; ++i) asym.at(i, i) = 1.0;
  asym.at(0, 1) = Cplx{0.2, 0.0};
  asym.at(1, 0) = Cplx{0.9, 0.0};
  CHECK_THROWS_AS(solve_p0(asym, cb, 1.0, det), std::domain_error);
}

TEST_CASE("single active codeword recovered near its gain") {
  const Instance inst = make_instance(5, 32, 64, 1, 10.0, 7);
  DetectionConfig det;
  det.max_sweeps = 60;
  det.sweep_tolerance = 1e-8;
  const MlEstimate est =
      solve_p0(inst.sample, inst.codebook, 1.0, det);
  const int j = inst.truth.active_lists[0][0];
  const double truth = inst.truth.slot_gains[0][j - 1];
  CHECK(est.gamma[j - 1] == doctest::Approx(truth).epsilon(0.10));

  // 1-D grid search over the single active gain as an oracle
  std::vector<double> gamma(inst.codebook.cols, 0.0);
  double best_g = 0.0, best = 1e300;
  for (double g = truth * 0.5; g < truth * 1.5; g += truth * 0.002) {
    gamma[j - 1] = g;
    const double v = dense_objective(inst.codebook, gamma, 1.0, inst.sample);
    if (v < best) {
      best = v;
      best_g = g;
    }
  }
  CHECK(est.gamma[j - 1] == doctest::Approx(best_g).epsilon(0.01));
  // spurious coordinates stay below the activity gate
  const double gate = default_threshold(1.0, 10.0);
  for (int i = 0; i < inst.codebook.cols; ++i)
    if (i != j - 1) CHECK(est.gamma[i] < gate);
}

TEST_CASE("tiny instance matches exhaustive support search") {
  // 2^J = 8, n0 = 8, two active codewords: enumerate every support pair and
  // grid the two gains; the coordinate solver must land on the same optimum.
  const Instance inst = make_instance(3, 8, 256, 2, 10.0, 19);
  DetectionConfig det;
  det.max_sweeps = 200;
  det.sweep_tolerance = 1e-10;
  const MlEstimate est = solve_p0(inst.sample, inst.codebook, 1.0, det);

  double best = 1e300;
  int best_a = -1, best_b = -1;
  double best_ga = 0.0, best_gb = 0.0;
  std::vector<double> gamma(8, 0.0);
  for (int a = 0; a < 8; ++a) {
    for (int b = a; b < 8; ++b) {
      for (double ga = 0.5; ga <= 30.0; ga *= 1.07) {
        for (double gb = 0.5; gb <= 30.0; gb *= 1.07) {
          std::fill(gamma.begin(), gamma.end(), 0.0);
          gamma[a] += ga;
          gamma[b] += gb;
          const double v =
              dense_objective(inst.codebook, gamma, 1.0, inst.sample);
          if (v < best) {
            best = v;
            best_a = a;
            best_b = b;
            best_ga = ga;
            best_gb = gb;
          }
        }
      }
    }
  }
  (void)best_ga;
  (void)best_gb;
  // the solver's objective value must match the oracle optimum closely
  CHECK(est.objective <= best + 1e-3);
  // and its two largest coordinates are the oracle support
  const auto top = top_k_indices(est.gamma, 2);
  const std::set<int> got(top.begin(), top.end());
  const std::set<int> want{best_a + 1, best_b + 1};
  CHECK(got == want);
}

TEST_CASE("objective is monotone over coordinate updates") {
  const Instance inst = make_instance(5, 24, 32, 3, 10.0, 23, 6.0);
  DetectionConfig det;
  det.max_sweeps = 10;
  double last = 1e300;
  bool first = true;
  int checks = 0;
  std::vector<double> snapshot(inst.codebook.cols, 0.0);
  const MlEstimate est = solve_p0(
      inst.sample, inst.codebook, 1.0, det, nullptr,
      [&](int coord, double value, double objective) {
        if (!first) CHECK(objective <= last + 1e-9);
        first = false;
        last = objective;
        snapshot[coord - 1] = value;
        // spot-check the running objective against the dense route
        if (++checks % 50 == 0) {
          CHECK(dense_objective(inst.codebook, snapshot, 1.0, inst.sample) ==
                doctest::Approx(objective).epsilon(1e-8));
        }
      });
  CHECK(est.objective <= est.objective_trace.front() + 1e-9);
}

TEST_CASE("incremental inverse and log-det match direct factorization") {
  const Instance inst = make_instance(5, 24, 32, 3, 10.0, 29, 6.0);
  DetectionConfig det;
  det.max_sweeps = 5;
  det.sweep_tolerance = 0.0;
  const MlEstimate est = solve_p0(inst.sample, inst.codebook, 1.0, det);

  CovarianceLedger direct(inst.codebook.rows, 1.0);
  direct.refactor(inst.codebook, est.gamma);
  CHECK(dense_objective(inst.codebook, est.gamma, 1.0, inst.sample) ==
        doctest::Approx(est.objective).epsilon(1e-8));
  CHECK(direct.objective(inst.sample) ==
        doctest::Approx(est.objective).epsilon(1e-8));
}

TEST_CASE("stationarity at the coordinate optimum") {
  const Instance inst = make_instance(5, 32, 64, 1, 10.0, 31);
  DetectionConfig det;
  det.max_sweeps = 80;
  det.sweep_tolerance = 1e-12;
  const MlEstimate est = solve_p0(inst.sample, inst.codebook, 1.0, det);
  const auto grad =
      gradient_at(inst.codebook, inst.sample, 1.0, est.gamma);
  for (int j = 0; j < inst.codebook.cols; ++j) {
    if (est.gamma[j] > 1e-8) {
      CHECK(std::abs(grad[j]) < 1e-10);
    } else {
      CHECK(grad[j] > -1e-10);  // boundary coordinates push outward
    }
  }
}

TEST_CASE("activity thresholding") {
  const std::vector<double> gamma{5.0, 0.01, 3.0, 0.0};
  const auto [list, count] = estimate_active_count(gamma, 0.1);
  CHECK(list == std::vector<int>{1, 3});
  CHECK(count == 2);

  const std::vector<double> zero(6, 0.0);
  const auto [empty, none] = estimate_active_count(zero, 0.1);
  CHECK(empty.empty());
  CHECK(none == 0);
}

TEST_CASE("top-k selection breaks ties toward lower index") {
  const std::vector<double> v{1.0, 3.0, 3.0, 0.5};
  CHECK(top_k_indices(v, 2) == std::vector<int>{2, 3});
  CHECK(top_k_indices(v, 3) == std::vector<int>{2, 3, 1});
}

TEST_CASE("class initialization") {
  const std::vector<double> gamma{3.0, 7.0, 0.0, std::exp(2.0)};
  const std::vector<int> active{1, 2};
  const ClassRegistry reg = init_classes(active, gamma, 16);
  REQUIRE(reg.size() == 2);
  CHECK(reg.classes[0].center.log_gain == doctest::Approx(std::log(3.0)));
  CHECK(reg.classes[1].center.log_gain == doctest::Approx(std::log(7.0)));
  CHECK(reg.classes[0].members == std::vector<int>{1});
  CHECK(reg.classes[1].members == std::vector<int>{2});
  CHECK(reg.classes[0].center.member_count == 1);

  const std::vector<int> single{4};
  const ClassRegistry one = init_classes(single, gamma, 8);
  REQUIRE(one.size() == 1);
  CHECK(one.classes[0].center.log_gain == doctest::Approx(2.0));

  CHECK(init_classes({}, gamma, 8).empty());
}

TEST_CASE("detection error is quasi-convex in the threshold") {
  // sweep the activity gate on a seeded instance; the combined miss+false
  // count should fall then rise (used to justify the default gate)
  const Instance inst = make_instance(6, 48, 32, 4, 10.0, 41, 6.0);
  DetectionConfig det;
  det.max_sweeps = 40;
  const MlEstimate est = solve_p0(inst.sample, inst.codebook, 1.0, det);
  const std::set<int> truth(inst.truth.active_lists[0].begin(),
                            inst.truth.active_lists[0].end());
  std::vector<int> errors;
  for (double t = 0.01; t <= 10.0; t *= 1.6) {
    const auto [list, count] = estimate_active_count(est.gamma, t);
    (void)count;
    int e = 0;
    for (const int j : list)
      if (!truth.count(j)) ++e;
    for (const int j : truth)
      if (std::find(list.begin(), list.end(), j) == list.end()) ++e;
    errors.push_back(e);
  }
  const auto minpos =
      std::min_element(errors.begin(), errors.end()) - errors.begin();
  // non-increasing before the minimum, non-decreasing after (quasi-convex)
  for (std::size_t i = 0; i + 1 < std::size_t(minpos); ++i)
    CHECK(errors[i] >= errors[i + 1]);
  for (std::size_t i = minpos; i + 1 < errors.size(); ++i)
    CHECK(errors[i] <= errors[i + 1]);
  CHECK(errors[minpos] == 0);
}
