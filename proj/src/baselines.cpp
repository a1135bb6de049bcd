#include "uura/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "uura/kernels/kernels.hpp"

namespace uura {

int TreeCodeProfile::data_bits() const {
  int total = 0;
  for (const int a : parity_lengths) total += bits_per_slot - a;
  return total;
}

void TreeCodeProfile::validate() const {
  if (sub_slots < 1 || bits_per_slot < 1)
    throw ConfigError("tree profile: sub_slots and bits_per_slot must be positive");
  if (int(parity_lengths.size()) != sub_slots)
    throw ConfigError("tree profile: parity_lengths must have one entry per sub-block");
  if (parity_lengths.front() != 0)
    throw ConfigError("tree profile: first sub-block carries no parity");
  for (const int a : parity_lengths) {
    if (a < 0 || a > bits_per_slot) {
      std::ostringstream os;
      os << "tree profile: parity length " << a << " outside [0, "
         << bits_per_slot << "]";
      throw ConfigError(os.str());
    }
  }
  if (data_bits() < 1)
    throw ConfigError("tree profile: no data bits");
}

TreeCodeProfile TreeCodeProfile::balanced(int message_bits, int bits_per_slot,
                                          int sub_slots, std::uint64_t seed) {
  if (sub_slots < 2)
    throw ConfigError("tree profile: need at least two sub-blocks");
  if (message_bits < bits_per_slot)
    throw ConfigError("tree profile: message shorter than one sub-block");
  const int rest = message_bits - bits_per_slot;
  if (rest > bits_per_slot * (sub_slots - 1))
    throw ConfigError("tree profile: message does not fit");
  TreeCodeProfile p;
  p.sub_slots = sub_slots;
  p.bits_per_slot = bits_per_slot;
  p.parity_seed = seed;
  p.parity_lengths.assign(sub_slots, bits_per_slot);
  p.parity_lengths[0] = 0;
  const int base = rest / (sub_slots - 1);
  const int extra = rest % (sub_slots - 1);
  for (int l = 1; l < sub_slots; ++l) {
    const int data = base + (l - 1 < extra ? 1 : 0);
    p.parity_lengths[l] = bits_per_slot - data;
  }
  p.validate();
  return p;
}

namespace {

// Per parity bit, a seeded XOR mask over the data bits of earlier sub-blocks.
struct ParityMaps {
  std::vector<int> data_offset;  // global index of each slot's first data bit
  std::vector<int> data_len;
  std::vector<std::vector<std::vector<std::uint8_t>>> masks;  // [slot][bit]
};

ParityMaps build_parity_maps(const TreeCodeProfile& profile) {
  profile.validate();
  ParityMaps maps;
  maps.data_offset.resize(profile.sub_slots);
  maps.data_len.resize(profile.sub_slots);
  int offset = 0;
  for (int l = 0; l < profile.sub_slots; ++l) {
    maps.data_offset[l] = offset;
    maps.data_len[l] = profile.bits_per_slot - profile.parity_lengths[l];
    offset += maps.data_len[l];
  }
  Rng rng = make_stream(profile.parity_seed, "tree-parity");
  maps.masks.resize(profile.sub_slots);
  for (int l = 0; l < profile.sub_slots; ++l) {
    maps.masks[l].resize(profile.parity_lengths[l]);
    for (int i = 0; i < profile.parity_lengths[l]; ++i) {
      auto& mask = maps.masks[l][i];
      mask.resize(maps.data_offset[l]);
      for (auto& bit : mask) bit = rng.next_bit() ? 1 : 0;
    }
  }
  return maps;
}

std::uint8_t parity_of(const std::vector<std::uint8_t>& mask,
                       std::span<const std::uint8_t> data) {
  std::uint8_t acc = 0;
  for (std::size_t t = 0; t < mask.size(); ++t) acc ^= mask[t] & data[t];
  return acc;
}

}  // namespace

std::vector<int> tree_encode(std::span<const std::uint8_t> message_bits,
                             const TreeCodeProfile& profile) {
  const ParityMaps maps = build_parity_maps(profile);
  if (int(message_bits.size()) != profile.data_bits())
    throw ConfigError("tree_encode: message length must match profile data bits");
  std::vector<int> indices;
  indices.reserve(profile.sub_slots);
  std::vector<std::uint8_t> block(profile.bits_per_slot);
  for (int l = 0; l < profile.sub_slots; ++l) {
    const auto data =
        message_bits.subspan(maps.data_offset[l], maps.data_len[l]);
    std::copy(data.begin(), data.end(), block.begin());
    const auto preceding = message_bits.first(maps.data_offset[l]);
    for (int i = 0; i < profile.parity_lengths[l]; ++i)
      block[maps.data_len[l] + i] = parity_of(maps.masks[l][i], preceding);
    indices.push_back(map_subblock(block));
  }
  return indices;
}

TreeDecodeResult tree_decode(
    std::span<const std::vector<int>> per_slot_candidates,
    const TreeCodeProfile& profile) {
  const ParityMaps maps = build_parity_maps(profile);
  if (int(per_slot_candidates.size()) != profile.sub_slots)
    throw ConfigError("tree_decode: need one candidate list per sub-block");

  TreeDecodeResult result;
  std::vector<std::uint8_t> data;
  data.reserve(profile.data_bits());
  std::vector<int> path;
  path.reserve(profile.sub_slots);

  auto dfs = [&](auto&& self, int slot) -> void {
    if (slot == profile.sub_slots) {
      result.messages.push_back(data);
      result.paths.push_back(path);
      return;
    }
    for (const int index : per_slot_candidates[slot]) {
      const auto bits = unmap_index(index, profile.bits_per_slot);
      bool consistent = true;
      for (int i = 0; i < profile.parity_lengths[slot] && consistent; ++i) {
        if (bits[maps.data_len[slot] + i] !=
            parity_of(maps.masks[slot][i], data))
          consistent = false;
      }
      if (!consistent) continue;
      // nodes that enter the search tree; pruned candidates cost only the
      // parity evaluation
      ++result.nodes_visited;
      data.insert(data.end(), bits.begin(), bits.begin() + maps.data_len[slot]);
      path.push_back(index);
      self(self, slot + 1);
      path.pop_back();
      data.resize(data.size() - maps.data_len[slot]);
    }
  };
  dfs(dfs, 0);
  return result;
}

std::vector<int> energy_detect(const SignalMatrix& signal,
                               const Codebook& codebook, int count) {
  if (count < 1) throw std::domain_error("energy_detect: count must be >= 1");
  const auto& ops = kernels::active();
  const int n0 = codebook.rows;
  std::vector<double> score(codebook.cols, 0.0);
  for (int j = 0; j < codebook.cols; ++j) {
    const Cplx* c = codebook.column(j + 1);
    double acc = 0.0;
    for (int m = 0; m < signal.cols; ++m) {
      const Cplx z =
          ops.zdotc(c, signal.data.data() + std::size_t(m) * n0,
                    std::size_t(n0));
      acc += std::norm(z);
    }
    score[j] = acc;
  }
  std::vector<int> idx(codebook.cols);
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min<int>(count, codebook.cols);
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(),
                    [&](int a, int b) {
                      if (score[a] != score[b]) return score[a] > score[b];
                      return a < b;
                    });
  idx.resize(take);
  for (auto& j : idx) ++j;
  return idx;
}

CoupledDecodeResult cura_decode(std::span<const SignalMatrix> signals,
                                const Codebook& codebook,
                                const TreeCodeProfile& profile,
                                int candidate_list_size) {
  std::vector<std::vector<int>> candidates;
  candidates.reserve(signals.size());
  for (const auto& y : signals)
    candidates.push_back(energy_detect(y, codebook, candidate_list_size));
  TreeDecodeResult tree = tree_decode(candidates, profile);

  CoupledDecodeResult out;
  out.tree_nodes_visited = tree.nodes_visited;
  for (std::size_t p = 0; p < tree.messages.size(); ++p) {
    Message m;
    m.bits = std::move(tree.messages[p]);
    m.sub_blocks = std::move(tree.paths[p]);
    out.messages.push_back(std::move(m));
  }
  return out;
}

KMeansResult kmeans_1d(std::span<const double> points, int k, Rng& rng,
                       int restarts, int max_iterations, double tolerance) {
  const int n = int(points.size());
  if (k < 1 || n < k)
    throw std::domain_error("kmeans_1d: need at least k points");

  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();

  std::vector<double> centroids(k);
  std::vector<int> assign(n);
  std::vector<double> dist2(n);

  for (int restart = 0; restart < restarts; ++restart) {
    // D^2 seeding.
    centroids[0] = points[rng.next_below(std::uint64_t(n))];
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (int cc = 0; cc < c; ++cc)
          d = std::min(d, (points[i] - centroids[cc]) *
                              (points[i] - centroids[cc]));
        dist2[i] = d;
        total += d;
      }
      if (total <= 0.0) {
        centroids[c] = points[rng.next_below(std::uint64_t(n))];
        continue;
      }
      double u = rng.next_double() * total;
      int pick = n - 1;
      for (int i = 0; i < n; ++i) {
        u -= dist2[i];
        if (u <= 0.0) {
          pick = i;
          break;
        }
      }
      centroids[c] = points[pick];
    }

    int iters = 0;
    for (; iters < max_iterations; ++iters) {
      for (int i = 0; i < n; ++i) {
        int bestc = 0;
        double bestd = std::abs(points[i] - centroids[0]);
        for (int c = 1; c < k; ++c) {
          const double d = std::abs(points[i] - centroids[c]);
          if (d < bestd) {
            bestd = d;
            bestc = c;
          }
        }
        assign[i] = bestc;
      }
      std::vector<double> sum(k, 0.0);
      std::vector<int> cnt(k, 0);
      for (int i = 0; i < n; ++i) {
        sum[assign[i]] += points[i];
        ++cnt[assign[i]];
      }
      double movement = 0.0;
      for (int c = 0; c < k; ++c) {
        double next = centroids[c];
        if (cnt[c] > 0) {
          next = sum[c] / cnt[c];
        } else {
          // Re-seed an empty cluster with the worst-served point.
          int far_i = 0;
          double far_d = -1.0;
          for (int i = 0; i < n; ++i) {
            const double d = std::abs(points[i] - centroids[assign[i]]);
            if (d > far_d) {
              far_d = d;
              far_i = i;
            }
          }
          next = points[far_i];
        }
        movement = std::max(movement, std::abs(next - centroids[c]));
        centroids[c] = next;
      }
      if (movement < tolerance) {
        ++iters;
        break;
      }
    }

    double objective = 0.0;
    for (int i = 0; i < n; ++i) {
      int bestc = 0;
      double bestd = std::abs(points[i] - centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(points[i] - centroids[c]);
        if (d < bestd) {
          bestd = d;
          bestc = c;
        }
      }
      assign[i] = bestc;
      objective += bestd * bestd;
    }
    if (objective < best.objective) {
      best.centroids = centroids;
      best.assignment = assign;
      best.objective = objective;
      best.iterations = iters;
    }
  }
  return best;
}

SeparateDecodeResult uura_sd_decode(std::span<const SignalMatrix> signals,
                                    const Codebook& codebook, double sigma2,
                                    const DetectionConfig& detection,
                                    double gamma_floor, Rng& cluster_rng,
                                    double first_slot_gain_scale) {
  SeparateDecodeResult out;
  const int slots = int(signals.size());
  std::vector<MlEstimate> estimates;
  estimates.reserve(slots);
  for (const auto& y : signals)
    estimates.push_back(
        solve_p0(sample_covariance(y), codebook, sigma2, detection));
  double sweeps = 0.0;
  for (const auto& e : estimates) sweeps += e.iterations;
  out.mean_p0_sweeps = slots > 0 ? sweeps / slots : 0.0;

  const auto [active1, count] = estimate_active_count(
      estimates[0].gamma, detection.threshold * first_slot_gain_scale);
  out.slot1_detected = active1;
  out.estimated_active = count;
  if (count == 0) {
    out.no_activity = true;
    return out;
  }

  // Detections: thresholded list in the first sub-slot, top-K elsewhere.
  std::vector<std::vector<int>> detections(slots);
  detections[0] = active1;
  for (int l = 1; l < slots; ++l)
    detections[l] = top_k_indices(estimates[l].gamma, count);

  std::vector<double> features;
  features.reserve(std::size_t(slots) * count);
  for (int l = 0; l < slots; ++l) {
    const double scale = l == 0 ? first_slot_gain_scale : 1.0;
    for (const int j1 : detections[l])
      features.push_back(std::log(std::max(
          estimates[l].gamma[std::size_t(j1) - 1] / scale, gamma_floor)));
  }

  const KMeansResult km = kmeans_1d(features, count, cluster_rng);

  // One codeword per cluster per sub-slot, greedily nearest to the final
  // centroids.
  const int bits = [&] {
    int b = 0;
    while ((1 << b) < codebook.cols) ++b;
    return b;
  }();
  std::vector<std::vector<int>> cluster_slots(count,
                                              std::vector<int>(slots, 0));
  for (int l = 0; l < slots; ++l) {
    struct Cand {
      double dist;
      int det;
      int cluster;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < count; ++i) {
      const double f = features[std::size_t(l) * count + i];
      for (int c = 0; c < count; ++c)
        cands.push_back({std::abs(f - km.centroids[c]), i, c});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.det != b.det) return a.det < b.det;
      return a.cluster < b.cluster;
    });
    std::vector<bool> det_done(count, false), cluster_done(count, false);
    int made = 0;
    for (const Cand& c : cands) {
      if (made == count) break;
      if (det_done[c.det] || cluster_done[c.cluster]) continue;
      det_done[c.det] = true;
      cluster_done[c.cluster] = true;
      cluster_slots[c.cluster][l] = detections[l][c.det];
      ++made;
    }
  }

  for (int c = 0; c < count; ++c) {
    Message m;
    m.sub_blocks = cluster_slots[c];
    for (const int j1 : cluster_slots[c]) {
      const auto frag = unmap_index(j1, bits);
      m.bits.insert(m.bits.end(), frag.begin(), frag.end());
    }
    out.messages.push_back(std::move(m));
  }
  return out;
}

double tree_search_complexity(int active_users,
                              const TreeCodeProfile& profile) {
  const double ka = active_users;
  const int L = profile.sub_slots;
  double total = ka * (L - 1);
  for (int n = 2; n <= L - 1; ++n) {
    for (int m = 2; m <= n; ++m) {
      double prod = 1.0;
      for (int l = m; l <= n; ++l)
        prod *= std::pow(2.0, -profile.parity_lengths[l - 1]);
      total += ka * std::pow(ka, n - m) * (ka - 1.0) * prod;
    }
  }
  return total;
}

double complexity_report(Scheme scheme, const ComplexityConfig& c) {
  const double n0 = c.codeword_length;
  const double m = c.antennas;
  const double l = c.sub_slots;
  const double ka = c.active_users;
  const double t = c.max_iterations;
  switch (scheme) {
    case Scheme::integrated:
      return n0 * n0 * m * l + t * (l - 1.0) * (n0 * n0 + ka * ka);
    case Scheme::separate:
      return l * (n0 * n0 * m + t * n0 * n0 + m * ka * ka * ka);
    case Scheme::coupled:
      return double(c.codebook_size) * n0 * c.tree.sub_slots * m * m +
             tree_search_complexity(c.active_users, c.tree);
  }
  return 0.0;
}

}  // namespace uura
