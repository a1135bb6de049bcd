#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uura/mig.hpp"
#include "uura/rng.hpp"

// Transmit side and channel of the uncoupled unsourced random access link:
// shared partial-DFT codebook, message segmentation and mapping, block
// fading, received-signal synthesis, and the sample covariance fed to the
// decoders. Everything is deterministic given (config, seed, trial).

namespace uura {

using Cplx = std::complex<double>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  int total_users = 200;      // K_tot
  int active_users = 20;      // K_a
  int antennas = 32;          // M
  int subblock_bits = 10;     // J
  int sub_slots = 8;          // L
  int codeword_length = 100;  // n0
  double noise_variance = 1.0;
  double target_snr_db = 10.0;
  double cell_radius_km = 0.5;
  // Uniform per-UE spread (dB) applied around the target receive SNR, so
  // class gains are separable; 0 keeps every folded gain identical.
  double gain_spread_db = 0.0;
  std::uint64_t seed = 1;

  int message_bits() const { return sub_slots * subblock_bits; }  // b = L*J
  int codebook_size() const { return 1 << subblock_bits; }        // 2^J

  void validate() const;  // throws ConfigError
};

// n0 rows of the 2^J-point DFT, columns scaled to unit norm.
struct Codebook {
  int rows = 0;                    // n0
  int cols = 0;                    // 2^J
  std::vector<Cplx> columns;       // column-major rows*cols
  std::vector<int> row_selection;  // n0 distinct DFT row indices, ascending

  const Cplx* column(int index1) const {
    return columns.data() + std::size_t(index1 - 1) * rows;
  }
};

struct Message {
  std::vector<std::uint8_t> bits;  // b binary values
  std::vector<int> sub_blocks;     // L codeword indices in [1, 2^J]

  bool operator==(const Message& o) const { return bits == o.bits; }
};

struct LargeScaleFading {
  std::vector<double> distance_km;    // diagnostic
  std::vector<double> path_loss_db;   // diagnostic, -128.1 - 37.6 log10(d)
  std::vector<double> folded_gain;    // transmit power folded in; sets SNR
};

struct ChannelRealization {
  std::vector<double> large_scale_gains;       // K_a folded gains
  std::vector<double> slot_gain_scale;         // L linear scales (slot-1 SNR boost)
  std::vector<std::vector<Cplx>> small_scale;  // per slot, K_a*M (UE-major)
};

struct GroundTruth {
  std::vector<std::vector<int>> active_lists;     // per slot, ascending, 1-based
  std::vector<std::vector<double>> slot_gains;    // per slot, dense length 2^J
  std::vector<Message> messages;                  // K_a transmitted messages
};

struct SignalMatrix {
  int rows = 0;  // n0
  int cols = 0;  // M
  std::vector<Cplx> data;  // column-major
};

// Big-endian bit-to-index mapping, 1-based. Mutually inverse.
int map_subblock(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unmap_index(int index1, int subblock_bits);

// Segments b bits into L sub-blocks and maps each.
Message make_message(std::vector<std::uint8_t> bits, int sub_slots,
                     int subblock_bits);

// K_a uniform random messages, duplicates resampled.
std::vector<Message> draw_messages(const SystemConfig& config, Rng& rng);

Codebook generate_codebook(const SystemConfig& config, Rng& rng);

LargeScaleFading draw_large_scale_fading(const SystemConfig& config, Rng& rng);

// Small-scale fading redrawn independently per sub-slot; slot_gain_scale
// carries an optional first-sub-slot SNR override (dB above target).
ChannelRealization make_channel(const SystemConfig& config,
                                const LargeScaleFading& fading, Rng& rng,
                                double first_slot_boost_db = 0.0);

// Collision-aware per-slot activity: gains of UEs sharing a codeword sum.
GroundTruth build_ground_truth(const SystemConfig& config,
                               std::vector<Message> messages,
                               const ChannelRealization& channel);

// Y_l = sum_k sqrt(g_k) c_{i_k,l} h_{k,l}^T + W_l, noise drawn from rng.
SignalMatrix synthesize_received_signal(const SystemConfig& config,
                                        const Codebook& codebook,
                                        const GroundTruth& truth,
                                        const ChannelRealization& channel,
                                        int sub_slot1, Rng& noise_rng);

// (1/M) Y Y^H, Hermitian PSD.
mig::HermMatrix sample_covariance(const SignalMatrix& y);

// Self-describing JSON container for decoder-only replay.
struct SessionRecord {
  SystemConfig config;
  GroundTruth truth;
  std::vector<SignalMatrix> signals;
};

std::string session_to_json(const SessionRecord& record);
SessionRecord session_from_json(const std::string& text);

}  // namespace uura
