#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uura/ml_detector.hpp"
#include "uura/system_model.hpp"

// Comparison schemes: separate detect-then-cluster decoding (per-sub-slot ML
// detection followed by K-means stitching over the whole block) and
// parity-coupled decoding (tree-encoded sub-blocks, energy detection, and
// depth-first parity-consistent path search), plus the analytic operation
// counters used for complexity comparisons.

namespace uura {

enum class Scheme { integrated, separate, coupled };

struct TreeCodeProfile {
  int sub_slots = 0;                // L
  int bits_per_slot = 0;            // J
  std::vector<int> parity_lengths;  // a_l per sub-block, a_1 = 0
  std::uint64_t parity_seed = 1;

  int data_bits() const;  // sum of (J - a_l)
  void validate() const;  // throws ConfigError

  // Front-loaded profile carrying `message_bits` data bits: early sub-blocks
  // get full data, later ones increasing parity, trailing ones all parity.
  static TreeCodeProfile balanced(int message_bits, int bits_per_slot,
                                  int sub_slots, std::uint64_t seed);
};

// Sub-block l = [fresh data bits | parity bits]; each parity bit is a seeded
// random XOR of all data bits in earlier sub-blocks.
std::vector<int> tree_encode(std::span<const std::uint8_t> message_bits,
                             const TreeCodeProfile& profile);

struct TreeDecodeResult {
  std::vector<std::vector<std::uint8_t>> messages;  // recovered data bits
  std::vector<std::vector<int>> paths;              // codeword index per slot
  std::uint64_t nodes_visited = 0;
};

// Depth-first search over per-slot candidate lists keeping parity-consistent
// paths; every surviving full path is returned.
TreeDecodeResult tree_decode(
    std::span<const std::vector<int>> per_slot_candidates,
    const TreeCodeProfile& profile);

// Indices of the `count` codewords with the largest matched-filter energy
// ||c_j^H Y||^2, descending, ties toward lower index.
std::vector<int> energy_detect(const SignalMatrix& signal,
                               const Codebook& codebook, int count);

struct CoupledDecodeResult {
  std::vector<Message> messages;
  std::uint64_t tree_nodes_visited = 0;
};

CoupledDecodeResult cura_decode(std::span<const SignalMatrix> signals,
                                const Codebook& codebook,
                                const TreeCodeProfile& profile,
                                int candidate_list_size);

// 1-D K-means with D^2 seeding and restarts; returns per-point cluster ids.
struct KMeansResult {
  std::vector<double> centroids;
  std::vector<int> assignment;
  double objective = 0.0;
  int iterations = 0;
};

KMeansResult kmeans_1d(std::span<const double> points, int k, Rng& rng,
                       int restarts = 10, int max_iterations = 300,
                       double tolerance = 1e-9);

struct SeparateDecodeResult {
  std::vector<Message> messages;
  std::vector<int> slot1_detected;  // thresholded first-sub-slot codewords
  int estimated_active = 0;
  double mean_p0_sweeps = 0.0;
  bool no_activity = false;
};

// Per-sub-slot ML detection over the full block, then K-means clustering of
// the detections on log estimated gain, one codeword per cluster per slot.
// first_slot_gain_scale is the known first-sub-slot power factor, divided
// out of that slot's features (and folded into its detection threshold).
SeparateDecodeResult uura_sd_decode(std::span<const SignalMatrix> signals,
                                    const Codebook& codebook, double sigma2,
                                    const DetectionConfig& detection,
                                    double gamma_floor, Rng& cluster_rng,
                                    double first_slot_gain_scale = 1.0);

// Analytic multiplication counts for the three schemes.
struct ComplexityConfig {
  int codeword_length = 0;   // n0
  int antennas = 0;          // M
  int sub_slots = 0;         // L of the uncoupled schemes
  int active_users = 0;      // K_a
  int max_iterations = 0;    // T_iter
  int codebook_size = 0;     // 2^J
  TreeCodeProfile tree;      // coupled-scheme profile
};

double tree_search_complexity(int active_users,
                              const TreeCodeProfile& profile);
double complexity_report(Scheme scheme, const ComplexityConfig& config);

}  // namespace uura
