#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <set>

#include "uura/system_model.hpp"

using namespace uura;

namespace {

SystemConfig tiny_config() {
  SystemConfig c;
  c.total_users = 20;
  c.active_users = 2;
  c.antennas = 8;
  c.subblock_bits = 5;
  c.sub_slots = 3;
  c.codeword_length = 16;
  c.noise_variance = 1.0;
  c.target_snr_db = 10.0;
  c.seed = 11;
  return c;
}

using EMat = Eigen::MatrixXcd;

EMat signal_to_eigen(const SignalMatrix& y) {
  return Eigen::Map<const EMat>(y.data.data(), y.rows, y.cols);
}

}  // namespace

TEST_CASE("config invariants") {
  SystemConfig c = tiny_config();
  CHECK(c.message_bits() == 15);
  CHECK_NOTHROW(c.validate());

  c.active_users = 40;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.codeword_length = 64;  // exceeds 2^5
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.active_users = 32;  // not below codebook size (also > total)
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.noise_variance = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("subblock mapping conventions") {
  CHECK(map_subblock(std::vector<std::uint8_t>{0, 0, 0, 0}) == 1);
  CHECK(map_subblock(std::vector<std::uint8_t>{1, 1, 1, 1}) == 16);
  CHECK(unmap_index(1, 4) == std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK(unmap_index(16, 4) == std::vector<std::uint8_t>{1, 1, 1, 1});
  CHECK_THROWS_AS(unmap_index(0, 4), std::domain_error);
  CHECK_THROWS_AS(unmap_index(17, 4), std::domain_error);
}

TEST_CASE("mapping round trips exhaustively") {
  for (const int bits : {1, 4, 8, 12}) {
    for (int idx = 1; idx <= (1 << bits); ++idx) {
      CHECK(map_subblock(unmap_index(idx, bits)) == idx);
    }
  }
}

TEST_CASE("segmentation reassembles message bits") {
  Rng rng(3);
  for (const auto [slots, bits] : {std::pair{2, 3}, {4, 4}, {8, 6}}) {
    std::vector<std::uint8_t> raw(std::size_t(slots) * bits);
    for (auto& b : raw) b = rng.next_bit() ? 1 : 0;
    const Message m = make_message(raw, slots, bits);
    std::vector<std::uint8_t> rebuilt;
    for (const int idx : m.sub_blocks) {
      const auto frag = unmap_index(idx, bits);
      rebuilt.insert(rebuilt.end(), frag.begin(), frag.end());
    }
    CHECK(rebuilt == raw);
  }
}

TEST_CASE("codebook columns are unit norm and deterministic") {
  SystemConfig c = tiny_config();
  Rng rng1(c.seed), rng2(c.seed);
  const Codebook a = generate_codebook(c, rng1);
  const Codebook b = generate_codebook(c, rng2);
  CHECK(a.columns == b.columns);
  CHECK(a.row_selection == b.row_selection);
  for (int j = 1; j <= a.cols; ++j) {
    double norm2 = 0.0;
    for (int i = 0; i < a.rows; ++i) norm2 += std::norm(a.column(j)[i]);
    CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-12);
  }
  std::set<int> rows(a.row_selection.begin(), a.row_selection.end());
  CHECK(int(rows.size()) == a.rows);
}

TEST_CASE("full-row codebook is orthonormal") {
  SystemConfig c = tiny_config();
  c.codeword_length = 32;  // n0 = 2^J
  c.active_users = 2;
  Rng rng(5);
  const Codebook cb = generate_codebook(c, rng);
  Eigen::Map<const EMat> m(cb.columns.data(), cb.rows, cb.cols);
  const EMat gram = m.adjoint() * m;
  CHECK((gram - EMat::Identity(cb.cols, cb.cols)).norm() < 1e-10);
}

TEST_CASE("noiseless single-user signal has rank one") {
  SystemConfig c = tiny_config();
  c.active_users = 1;
  c.total_users = 10;
  c.noise_variance = 1e-12;  // validation requires > 0
  c.target_snr_db = 130.0;   // folded gain 10, far above the residual noise
  Rng cb_rng(c.seed);
  const Codebook cb = generate_codebook(c, cb_rng);
  Rng msg_rng(2), gain_rng(3), chan_rng(4), noise_rng(5);
  const auto msgs = draw_messages(c, msg_rng);
  const auto fading = draw_large_scale_fading(c, gain_rng);
  const auto chan = make_channel(c, fading, chan_rng);
  const auto truth = build_ground_truth(c, msgs, chan);
  const SignalMatrix y =
      synthesize_received_signal(c, cb, truth, chan, 1, noise_rng);
  const Eigen::JacobiSVD<EMat> svd(signal_to_eigen(y));
  CHECK(svd.singularValues()(0) > 1e-3);
  CHECK(svd.singularValues()(1) < 1e-5 * svd.singularValues()(0));
}

TEST_CASE("noise-only variance matches configuration") {
  SystemConfig c = tiny_config();
  c.active_users = 1;
  c.noise_variance = 2.0;
  Rng cb_rng(c.seed);
  const Codebook cb = generate_codebook(c, cb_rng);
  // zero-gain channel: only noise remains
  ChannelRealization chan;
  chan.large_scale_gains = {0.0};
  chan.slot_gain_scale = {1.0, 1.0, 1.0};
  chan.small_scale.assign(3, std::vector<Cplx>(std::size_t(1) * c.antennas));
  Message m = make_message(std::vector<std::uint8_t>(15, 0), 3, 5);
  const auto truth = build_ground_truth(c, {m}, chan);
  Rng noise_rng(77);
  double acc = 0.0;
  std::size_t n = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const SignalMatrix y =
        synthesize_received_signal(c, cb, truth, chan, 1, noise_rng);
    for (const auto& v : y.data) acc += std::norm(v);
    n += y.data.size();
  }
  CHECK(acc / double(n) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("sample covariance equals column-sum oracle") {
  Rng rng(9);
  SignalMatrix y;
  y.rows = 6;
  y.cols = 4;
  y.data.resize(24);
  for (auto& v : y.data) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const mig::HermMatrix cov = sample_covariance(y);

  EMat oracle = EMat::Zero(6, 6);
  const EMat ym = signal_to_eigen(y);
  for (int m = 0; m < 4; ++m)
    oracle += ym.col(m) * ym.col(m).adjoint() / 4.0;
  CHECK((Eigen::Map<const EMat>(cov.entries.data(), 6, 6) - oracle).norm() <
        1e-12);

  SignalMatrix single;
  single.rows = 3;
  single.cols = 1;
  single.data = {Cplx{1, 0}, Cplx{0, 1}, Cplx{2, -1}};
  const mig::HermMatrix c1 = sample_covariance(single);
  CHECK(c1.at(0, 0) == Cplx{1, 0});
  CHECK(std::abs(c1.at(2, 0) - Cplx{2, -1}) < 1e-15);  // y2 * conj(y0)

  SignalMatrix zero;
  zero.rows = 2;
  zero.cols = 3;
  zero.data.assign(6, Cplx{});
  for (const auto& v : sample_covariance(zero).entries)
    CHECK(v == Cplx{});
}

TEST_CASE("empirical covariance approaches the model covariance in M") {
  SystemConfig c = tiny_config();
  c.active_users = 2;
  c.noise_variance = 0.5;
  Rng cb_rng(c.seed);
  const Codebook cb = generate_codebook(c, cb_rng);
  Rng msg_rng(13), gain_rng(14);
  const auto msgs = draw_messages(c, msg_rng);
  const auto fading = draw_large_scale_fading(c, gain_rng);

  double prev_gap = 1e300;
  for (const int m : {16, 256}) {
    SystemConfig cm = c;
    cm.antennas = m;
    double gap = 0.0;
    const int reps = 20;
    Rng chan_rng(15), noise_rng(16);
    for (int rep = 0; rep < reps; ++rep) {
      const auto chan = make_channel(cm, fading, chan_rng);
      const auto truth = build_ground_truth(cm, msgs, chan);
      const SignalMatrix y =
          synthesize_received_signal(cm, cb, truth, chan, 1, noise_rng);
      const mig::HermMatrix cov = sample_covariance(y);

      EMat model = EMat::Identity(cm.codeword_length, cm.codeword_length) *
                   cm.noise_variance;
      for (int j = 0; j < cm.codebook_size(); ++j) {
        const double g = truth.slot_gains[0][j];
        if (g <= 0.0) continue;
        const Eigen::Map<const Eigen::VectorXcd> col(cb.column(j + 1),
                                                     cb.rows);
        model += g * col * col.adjoint();
      }
      gap += (Eigen::Map<const EMat>(cov.entries.data(), cb.rows, cb.rows) -
              model)
                 .norm() /
             model.norm();
    }
    gap /= reps;
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("per-user synthesis matches activity-vector synthesis in moments") {
  // Second synthesis route through the dense activity vector as an oracle:
  // first and second moments agree across many draws.
  SystemConfig c = tiny_config();
  c.active_users = 2;
  c.antennas = 2;
  c.noise_variance = 1e-12;
  c.target_snr_db = 130.0;  // noiseless comparison of the two routes
  Rng cb_rng(c.seed);
  const Codebook cb = generate_codebook(c, cb_rng);
  Rng msg_rng(31), gain_rng(32);
  const auto msgs = draw_messages(c, msg_rng);
  const auto fading = draw_large_scale_fading(c, gain_rng);

  const int reps = 4000;
  double m2_a = 0.0, m2_b = 0.0, m1_a = 0.0, m1_b = 0.0;
  Rng chan_rng(33), noise_rng(34), oracle_rng(35);
  std::vector<double> gains;
  {
    const auto chan0 = make_channel(c, fading, chan_rng);
    const auto truth0 = build_ground_truth(c, msgs, chan0);
    gains = truth0.slot_gains[0];
  }
  for (int rep = 0; rep < reps; ++rep) {
    const auto chan = make_channel(c, fading, chan_rng);
    const auto truth = build_ground_truth(c, msgs, chan);
    const SignalMatrix y =
        synthesize_received_signal(c, cb, truth, chan, 1, noise_rng);
    for (const auto& v : y.data) {
      m1_a += v.real();
      m2_a += std::norm(v);
    }
    // oracle route: C * diag(gamma)^(1/2) * iid Gaussians
    EMat x = EMat::Zero(c.codebook_size(), c.antennas);
    for (int j = 0; j < c.codebook_size(); ++j) {
      if (gains[j] <= 0.0) continue;
      for (int a = 0; a < c.antennas; ++a)
        x(j, a) = std::sqrt(gains[j]) * oracle_rng.next_cgaussian(1.0);
    }
    const EMat yb =
        Eigen::Map<const EMat>(cb.columns.data(), cb.rows, cb.cols) * x;
    for (int i = 0; i < yb.size(); ++i) {
      m1_b += yb(i).real();
      m2_b += std::norm(yb(i));
    }
  }
  const double n = double(reps) * c.codeword_length * c.antennas;
  // mean ~ 0 within 3 sigma, power within 3 sigma of each other
  CHECK(std::abs(m1_a / n) < 3.0 * std::sqrt(m2_a / n / n));
  CHECK(std::abs(m2_a - m2_b) / m2_a < 0.1);
}

TEST_CASE("collisions sum gains") {
  SystemConfig c = tiny_config();
  ChannelRealization chan;
  chan.large_scale_gains = {2.0, 3.0};
  chan.slot_gain_scale = {1.0, 1.0, 1.0};
  chan.small_scale.assign(3, std::vector<Cplx>(2 * c.antennas));
  // same index in slot 1, distinct in slot 2
  std::vector<std::uint8_t> bits_a{0, 0, 0, 1, 1,  0, 0, 0, 0, 1,  0, 0, 0, 0, 0};
  std::vector<std::uint8_t> bits_b{0, 0, 0, 1, 1,  0, 0, 1, 0, 0,  0, 0, 0, 0, 1};
  const auto truth = build_ground_truth(
      c, {make_message(bits_a, 3, 5), make_message(bits_b, 3, 5)}, chan);
  CHECK(truth.active_lists[0] == std::vector<int>{4});
  CHECK(truth.slot_gains[0][3] == doctest::Approx(5.0));
  CHECK(truth.active_lists[1].size() == 2);
}

TEST_CASE("path loss and folded gains") {
  SystemConfig c = tiny_config();
  c.active_users = 4;
  c.target_snr_db = 10.0;
  c.noise_variance = 1.0;
  Rng rng(41);
  const auto fading = draw_large_scale_fading(c, rng);
  for (const double g : fading.folded_gain) CHECK(g == doctest::Approx(10.0));

  c.target_snr_db = 0.0;
  Rng rng2(41);
  const auto fading2 = draw_large_scale_fading(c, rng2);
  for (const double g : fading2.folded_gain) CHECK(g == doctest::Approx(1.0));

  // raw path loss at 0.1 km
  const double pl = -128.1 - 37.6 * std::log10(0.1);
  CHECK(pl == doctest::Approx(-90.5));
  for (std::size_t k = 0; k < fading.distance_km.size(); ++k) {
    CHECK(fading.path_loss_db[k] ==
          doctest::Approx(-128.1 - 37.6 * std::log10(fading.distance_km[k])));
  }
}

TEST_CASE("gain spread keeps the dB mean and spreads within bounds") {
  SystemConfig c = tiny_config();
  c.active_users = 16;
  c.gain_spread_db = 12.0;
  Rng rng(42);
  const auto fading = draw_large_scale_fading(c, rng);
  const double base = 10.0;
  for (const double g : fading.folded_gain) {
    const double off = 10.0 * std::log10(g / base);
    CHECK(off >= -6.0);
    CHECK(off <= 6.0);
  }
}

TEST_CASE("first-slot boost scales only the first sub-slot") {
  SystemConfig c = tiny_config();
  Rng g(1), ch(2);
  const auto fading = draw_large_scale_fading(c, g);
  const auto chan = make_channel(c, fading, ch, 10.0);
  CHECK(chan.slot_gain_scale[0] == doctest::Approx(10.0));
  CHECK(chan.slot_gain_scale[1] == 1.0);
  CHECK(chan.slot_gain_scale[2] == 1.0);
}

TEST_CASE("draws are deterministic per stream and independent across streams") {
  Rng a = make_stream(123, "noise", 7);
  Rng b = make_stream(123, "noise", 7);
  Rng c = make_stream(123, "channel", 7);
  Rng d = make_stream(123, "noise", 8);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
  CHECK(b.next_u64() != d.next_u64());
}

TEST_CASE("messages are unique and resampled on duplicates") {
  SystemConfig c = tiny_config();
  c.subblock_bits = 2;
  c.sub_slots = 2;  // 16 possible messages
  c.codeword_length = 4;
  c.active_users = 3;
  c.total_users = 30;
  Rng rng(55);
  const auto msgs = draw_messages(c, rng);
  std::set<std::vector<std::uint8_t>> unique;
  for (const auto& m : msgs) unique.insert(m.bits);
  CHECK(unique.size() == msgs.size());
}

TEST_CASE("session record round trips through JSON") {
  SystemConfig c = tiny_config();
  Rng cb_rng(c.seed);
  const Codebook cb = generate_codebook(c, cb_rng);
  Rng msg_rng(61), gain_rng(62), chan_rng(63), noise_rng(64);
  const auto msgs = draw_messages(c, msg_rng);
  const auto fading = draw_large_scale_fading(c, gain_rng);
  const auto chan = make_channel(c, fading, chan_rng);
  SessionRecord rec;
  rec.config = c;
  rec.truth = build_ground_truth(c, msgs, chan);
  for (int l = 1; l <= c.sub_slots; ++l)
    rec.signals.push_back(
        synthesize_received_signal(c, cb, rec.truth, chan, l, noise_rng));

  const SessionRecord back = session_from_json(session_to_json(rec));
  CHECK(back.config.seed == c.seed);
  CHECK(back.truth.active_lists == rec.truth.active_lists);
  for (std::size_t l = 0; l < rec.truth.slot_gains.size(); ++l)
    for (std::size_t j = 0; j < rec.truth.slot_gains[l].size(); ++j)
      CHECK(back.truth.slot_gains[l][j] ==
            doctest::Approx(rec.truth.slot_gains[l][j]));
  CHECK(back.truth.messages.size() == rec.truth.messages.size());
  for (std::size_t k = 0; k < rec.truth.messages.size(); ++k)
    CHECK(back.truth.messages[k].bits == rec.truth.messages[k].bits);
  CHECK(back.signals.size() == rec.signals.size());
  for (std::size_t l = 0; l < rec.signals.size(); ++l) {
    CHECK(back.signals[l].rows == rec.signals[l].rows);
    for (std::size_t i = 0; i < rec.signals[l].data.size(); ++i)
      CHECK(std::abs(back.signals[l].data[i] - rec.signals[l].data[i]) <
            1e-15);
  }
}
