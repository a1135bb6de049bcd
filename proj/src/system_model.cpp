#include "uura/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uura/kernels/kernels.hpp"

namespace uura {

namespace {

constexpr double kMinDistanceKm = 0.001;  // 1 m guard against the path-loss pole

std::uint64_t checked_pow2(int bits) { return std::uint64_t(1) << bits; }

}  // namespace

void SystemConfig::validate() const {
  std::ostringstream os;
  if (total_users < 1 || active_users < 1 || antennas < 1 ||
      subblock_bits < 1 || sub_slots < 1 || codeword_length < 1) {
    throw ConfigError("config: all size parameters must be positive");
  }
  if (subblock_bits > 24) throw ConfigError("config: subblock_bits too large");
  if (active_users > total_users) {
    os << "config: active_users " << active_users << " exceeds total_users "
       << total_users;
    throw ConfigError(os.str());
  }
  const std::uint64_t cb = checked_pow2(subblock_bits);
  if (std::uint64_t(codeword_length) > cb) {
    os << "config: codeword_length " << codeword_length
       << " exceeds codebook size " << cb;
    throw ConfigError(os.str());
  }
  if (std::uint64_t(active_users) >= cb) {
    os << "config: active_users " << active_users
       << " must be below codebook size " << cb;
    throw ConfigError(os.str());
  }
  if (!(noise_variance > 0.0))
    throw ConfigError("config: noise_variance must be positive");
  if (!(cell_radius_km > 0.0))
    throw ConfigError("config: cell_radius_km must be positive");
  if (gain_spread_db < 0.0)
    throw ConfigError("config: gain_spread_db must be nonnegative");
}

int map_subblock(std::span<const std::uint8_t> bits) {
  int value = 0;
  for (const std::uint8_t b : bits) value = (value << 1) | (b & 1);
  return value + 1;
}

std::vector<std::uint8_t> unmap_index(int index1, int subblock_bits) {
  const int size = 1 << subblock_bits;
  if (index1 < 1 || index1 > size) {
    std::ostringstream os;
    os << "unmap_index: index " << index1 << " outside [1, " << size << "]";
    throw std::domain_error(os.str());
  }
  std::vector<std::uint8_t> bits(subblock_bits);
  int value = index1 - 1;
  for (int i = subblock_bits - 1; i >= 0; --i) {
    bits[i] = std::uint8_t(value & 1);
    value >>= 1;
  }
  return bits;
}

Message make_message(std::vector<std::uint8_t> bits, int sub_slots,
                     int subblock_bits) {
  if (int(bits.size()) != sub_slots * subblock_bits)
    throw std::domain_error("make_message: bit count must equal L*J");
  Message m;
  m.sub_blocks.reserve(sub_slots);
  for (int l = 0; l < sub_slots; ++l) {
    m.sub_blocks.push_back(map_subblock(
        std::span(bits).subspan(std::size_t(l) * subblock_bits,
                                subblock_bits)));
  }
  m.bits = std::move(bits);
  return m;
}

std::vector<Message> draw_messages(const SystemConfig& config, Rng& rng) {
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<Message> out;
  out.reserve(config.active_users);
  while (int(out.size()) < config.active_users) {
    std::vector<std::uint8_t> bits(config.message_bits());
    for (auto& b : bits) b = rng.next_bit() ? 1 : 0;
    if (!seen.insert(bits).second) continue;  // duplicate: resample
    out.push_back(
        make_message(std::move(bits), config.sub_slots, config.subblock_bits));
  }
  return out;
}

Codebook generate_codebook(const SystemConfig& config, Rng& rng) {
  config.validate();
  const int n0 = config.codeword_length;
  const int size = config.codebook_size();

  // Partial Fisher-Yates: first n0 entries are a uniform sample without
  // replacement of the DFT rows.
  std::vector<int> rows(size);
  for (int i = 0; i < size; ++i) rows[i] = i;
  for (int i = 0; i < n0; ++i) {
    const int j = i + int(rng.next_below(std::uint64_t(size - i)));
    std::swap(rows[i], rows[j]);
  }
  rows.resize(n0);
  std::sort(rows.begin(), rows.end());

  Codebook cb;
  cb.rows = n0;
  cb.cols = size;
  cb.row_selection = rows;
  cb.columns.resize(std::size_t(n0) * size);
  const double scale = 1.0 / std::sqrt(double(n0));
  const double step = -2.0 * std::numbers::pi / double(size);
  for (int j = 0; j < size; ++j) {
    Cplx* col = cb.columns.data() + std::size_t(j) * n0;
    for (int i = 0; i < n0; ++i) {
      const double phase = step * double(std::int64_t(rows[i]) * j % size);
      col[i] = scale * Cplx{std::cos(phase), std::sin(phase)};
    }
  }
  return cb;
}

LargeScaleFading draw_large_scale_fading(const SystemConfig& config,
                                         Rng& rng) {
  LargeScaleFading f;
  const int k = config.active_users;
  f.distance_km.resize(k);
  f.path_loss_db.resize(k);
  f.folded_gain.resize(k);
  const double base = config.noise_variance *
                      std::pow(10.0, config.target_snr_db / 10.0);
  for (int i = 0; i < k; ++i) {
    f.distance_km[i] = rng.uniform(kMinDistanceKm, config.cell_radius_km);
    f.path_loss_db[i] = -128.1 - 37.6 * std::log10(f.distance_km[i]);
    double gain = base;
    if (config.gain_spread_db > 0.0) {
      const double half = 0.5 * config.gain_spread_db;
      gain *= std::pow(10.0, rng.uniform(-half, half) / 10.0);
    }
    f.folded_gain[i] = gain;
  }
  return f;
}

ChannelRealization make_channel(const SystemConfig& config,
                                const LargeScaleFading& fading, Rng& rng,
                                double first_slot_boost_db) {
  ChannelRealization ch;
  ch.large_scale_gains = fading.folded_gain;
  ch.slot_gain_scale.assign(config.sub_slots, 1.0);
  if (first_slot_boost_db != 0.0)
    ch.slot_gain_scale[0] = std::pow(10.0, first_slot_boost_db / 10.0);
  ch.small_scale.resize(config.sub_slots);
  for (int l = 0; l < config.sub_slots; ++l) {
    auto& h = ch.small_scale[l];
    h.resize(std::size_t(config.active_users) * config.antennas);
    for (auto& v : h) v = rng.next_cgaussian(1.0);
  }
  return ch;
}

GroundTruth build_ground_truth(const SystemConfig& config,
                               std::vector<Message> messages,
                               const ChannelRealization& channel) {
  const int size = config.codebook_size();
  GroundTruth truth;
  truth.active_lists.resize(config.sub_slots);
  truth.slot_gains.assign(config.sub_slots,
                          std::vector<double>(size, 0.0));
  for (int l = 0; l < config.sub_slots; ++l) {
    auto& gains = truth.slot_gains[l];
    for (std::size_t k = 0; k < messages.size(); ++k) {
      const int j = messages[k].sub_blocks[l];
      gains[j - 1] +=
          channel.large_scale_gains[k] * channel.slot_gain_scale[l];
    }
    for (int j = 0; j < size; ++j)
      if (gains[j] > 0.0) truth.active_lists[l].push_back(j + 1);
  }
  truth.messages = std::move(messages);
  return truth;
}

SignalMatrix synthesize_received_signal(const SystemConfig& config,
                                        const Codebook& codebook,
                                        const GroundTruth& truth,
                                        const ChannelRealization& channel,
                                        int sub_slot1, Rng& noise_rng) {
  const int n0 = config.codeword_length;
  const int m = config.antennas;
  const int l = sub_slot1 - 1;
  SignalMatrix y;
  y.rows = n0;
  y.cols = m;
  y.data.assign(std::size_t(n0) * m, Cplx{});
  const auto& ops = kernels::active();
  const auto& h = channel.small_scale[l];
  for (std::size_t k = 0; k < truth.messages.size(); ++k) {
    const double amp = std::sqrt(channel.large_scale_gains[k] *
                                 channel.slot_gain_scale[l]);
    const Cplx* col = codebook.column(truth.messages[k].sub_blocks[l]);
    for (int a = 0; a < m; ++a) {
      ops.zaxpy(y.data.data() + std::size_t(a) * n0,
                amp * h[k * std::size_t(m) + a], col, std::size_t(n0));
    }
  }
  if (config.noise_variance > 0.0) {
    for (auto& v : y.data) v += noise_rng.next_cgaussian(config.noise_variance);
  }
  return y;
}

mig::HermMatrix sample_covariance(const SignalMatrix& y) {
  mig::HermMatrix cov(y.rows);
  const auto& ops = kernels::active();
  const double w = 1.0 / double(y.cols);
  for (int m = 0; m < y.cols; ++m) {
    ops.zher(cov.entries.data(), std::size_t(y.rows), w,
             y.data.data() + std::size_t(m) * y.rows);
  }
  return cov;
}

namespace {

nlohmann::json config_to_json(const SystemConfig& c) {
  return nlohmann::json{
      {"totalUsers", c.total_users},
      {"activeUsers", c.active_users},
      {"antennas", c.antennas},
      {"subBlockBits", c.subblock_bits},
      {"subSlots", c.sub_slots},
      {"codewordLength", c.codeword_length},
      {"noiseVariance", c.noise_variance},
      {"targetSnrDb", c.target_snr_db},
      {"cellRadiusKm", c.cell_radius_km},
      {"gainSpreadDb", c.gain_spread_db},
      {"seed", c.seed},
  };
}

SystemConfig config_from_json(const nlohmann::json& j) {
  SystemConfig c;
  c.total_users = j.at("totalUsers").get<int>();
  c.active_users = j.at("activeUsers").get<int>();
  c.antennas = j.at("antennas").get<int>();
  c.subblock_bits = j.at("subBlockBits").get<int>();
  c.sub_slots = j.at("subSlots").get<int>();
  c.codeword_length = j.at("codewordLength").get<int>();
  c.noise_variance = j.at("noiseVariance").get<double>();
  c.target_snr_db = j.at("targetSnrDb").get<double>();
  c.cell_radius_km = j.at("cellRadiusKm").get<double>();
  c.gain_spread_db = j.value("gainSpreadDb", 0.0);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
  std::string s;
  s.reserve(bits.size());
  for (const auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<std::uint8_t> bits_from_string(const std::string& s) {
  std::vector<std::uint8_t> bits;
  bits.reserve(s.size());
  for (const char c : s) bits.push_back(c == '1' ? 1 : 0);
  return bits;
}

}  // namespace

std::string session_to_json(const SessionRecord& record) {
  nlohmann::json j;
  j["config"] = config_to_json(record.config);
  nlohmann::json slots = nlohmann::json::array();
  for (std::size_t l = 0; l < record.truth.active_lists.size(); ++l) {
    nlohmann::json slot;
    slot["active"] = record.truth.active_lists[l];
    nlohmann::json gains = nlohmann::json::array();
    for (const int idx : record.truth.active_lists[l])
      gains.push_back(record.truth.slot_gains[l][idx - 1]);
    slot["gains"] = gains;
    slots.push_back(std::move(slot));
  }
  j["subSlots"] = std::move(slots);
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : record.truth.messages)
    msgs.push_back(bits_to_string(m.bits));
  j["messages"] = std::move(msgs);
  nlohmann::json sigs = nlohmann::json::array();
  for (const auto& s : record.signals) {
    nlohmann::json sig;
    sig["rows"] = s.rows;
    sig["cols"] = s.cols;
    nlohmann::json data = nlohmann::json::array();
    for (const auto& v : s.data)
      data.push_back(nlohmann::json::array({v.real(), v.imag()}));
    sig["data"] = std::move(data);
    sigs.push_back(std::move(sig));
  }
  j["signals"] = std::move(sigs);
  return j.dump();
}

SessionRecord session_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SessionRecord record;
  record.config = config_from_json(j.at("config"));
  const int size = record.config.codebook_size();
  const auto& slots = j.at("subSlots");
  record.truth.active_lists.resize(slots.size());
  record.truth.slot_gains.assign(slots.size(),
                                 std::vector<double>(size, 0.0));
  for (std::size_t l = 0; l < slots.size(); ++l) {
    const auto& slot = slots[l];
    record.truth.active_lists[l] = slot.at("active").get<std::vector<int>>();
    const auto gains = slot.at("gains").get<std::vector<double>>();
    for (std::size_t i = 0; i < gains.size(); ++i)
      record.truth.slot_gains[l][record.truth.active_lists[l][i] - 1] =
          gains[i];
  }
  for (const auto& m : j.at("messages")) {
    record.truth.messages.push_back(
        make_message(bits_from_string(m.get<std::string>()),
                     record.config.sub_slots, record.config.subblock_bits));
  }
  for (const auto& sig : j.at("signals")) {
    SignalMatrix s;
    s.rows = sig.at("rows").get<int>();
    s.cols = sig.at("cols").get<int>();
    for (const auto& v : sig.at("data"))
      s.data.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    record.signals.push_back(std::move(s));
  }
  return record;
}

}  // namespace uura
