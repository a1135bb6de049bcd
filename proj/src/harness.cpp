#include "uura/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "uura/kernels/kernels.hpp"

namespace uura {

namespace {

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("UURA_LOG");
    return env ? std::atoi(env) : 0;
  }();
  return level;
}

double resolve_threshold(const ExperimentSpec& spec) {
  if (!spec.auto_threshold) return spec.detection.threshold;
  return default_threshold(spec.system.noise_variance,
                           spec.system.target_snr_db);
}

std::pair<int, int> slot1_miss_false(const std::vector<int>& truth,
                                     const std::vector<int>& detected) {
  const std::set<int> t(truth.begin(), truth.end());
  const std::set<int> d(detected.begin(), detected.end());
  int missed = 0, false_det = 0;
  for (const int j : t)
    if (!d.count(j)) ++missed;
  for (const int j : d)
    if (!t.count(j)) ++false_det;
  return {missed, false_det};
}

struct SweepSetter {
  const char* name;
  std::function<void(ExperimentSpec&, double)> apply;
};

const std::vector<SweepSetter>& sweep_setters() {
  static const std::vector<SweepSetter> setters = {
      {"targetSnrDb", [](ExperimentSpec& s, double v) { s.system.target_snr_db = v; }},
      {"noiseVariance", [](ExperimentSpec& s, double v) { s.system.noise_variance = v; }},
      {"codewordLength", [](ExperimentSpec& s, double v) { s.system.codeword_length = int(std::lround(v)); }},
      {"antennas", [](ExperimentSpec& s, double v) { s.system.antennas = int(std::lround(v)); }},
      {"activeUsers", [](ExperimentSpec& s, double v) { s.system.active_users = int(std::lround(v)); }},
      {"totalUsers", [](ExperimentSpec& s, double v) { s.system.total_users = int(std::lround(v)); }},
      {"subSlots", [](ExperimentSpec& s, double v) { s.system.sub_slots = int(std::lround(v)); }},
      {"subBlockBits", [](ExperimentSpec& s, double v) { s.system.subblock_bits = int(std::lround(v)); }},
      {"gainSpreadDb", [](ExperimentSpec& s, double v) { s.system.gain_spread_db = v; }},
      {"seed", [](ExperimentSpec& s, double v) { s.system.seed = std::uint64_t(std::llround(v)); }},
      {"alpha", [](ExperimentSpec& s, double v) { s.penalties.alpha = v; }},
      {"beta", [](ExperimentSpec& s, double v) { s.penalties.beta = v; }},
      {"stepSize", [](ExperimentSpec& s, double v) { s.penalties.step_size = v; }},
      {"stepDecay", [](ExperimentSpec& s, double v) { s.penalties.step_decay = v; }},
      {"maxIterations", [](ExperimentSpec& s, double v) { s.penalties.max_iterations = int(std::lround(v)); }},
      {"convergenceTol", [](ExperimentSpec& s, double v) { s.penalties.convergence_tol = v; }},
      {"gammaFloor", [](ExperimentSpec& s, double v) { s.penalties.gamma_floor = v; }},
      {"warmStartSweeps", [](ExperimentSpec& s, double v) { s.penalties.warm_start_sweeps = int(std::lround(v)); }},
      {"threshold",
       [](ExperimentSpec& s, double v) {
         s.detection.threshold = v;
         s.auto_threshold = false;
       }},
      {"maxSweeps", [](ExperimentSpec& s, double v) { s.detection.max_sweeps = int(std::lround(v)); }},
      {"sweepTolerance", [](ExperimentSpec& s, double v) { s.detection.sweep_tolerance = v; }},
      {"trials", [](ExperimentSpec& s, double v) { s.trials = int(std::lround(v)); }},
      {"firstSubSlotSnrDb", [](ExperimentSpec& s, double v) { s.first_subslot_snr_db = v; }},
      {"curaSubSlots", [](ExperimentSpec& s, double v) { s.cura_sub_slots = int(std::lround(v)); }},
  };
  return setters;
}

const SweepSetter& find_setter(const std::string& field) {
  for (const auto& s : sweep_setters())
    if (field == s.name) return s;
  throw ConfigError("unknown sweep field: " + field);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string format_sweep_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// RFC-4180 quoting; our fields are numeric so this is a formality the
// golden-file test still pins.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

ComplexityConfig complexity_config_for(const ExperimentSpec& spec) {
  ComplexityConfig c;
  c.codeword_length = spec.system.codeword_length;
  c.antennas = spec.system.antennas;
  c.sub_slots = spec.system.sub_slots;
  c.active_users = spec.system.active_users;
  c.max_iterations = spec.penalties.max_iterations;
  c.codebook_size = spec.system.codebook_size();
  c.tree = cura_profile_for(spec);
  return c;
}

struct TrialWorld {
  std::vector<Message> messages;  // original data messages
  GroundTruth truth;
  std::vector<SignalMatrix> signals;
};

TrialWorld synthesize_trial(const ExperimentSpec& spec,
                            const Codebook& codebook,
                            const TreeCodeProfile* profile, int trial) {
  const SystemConfig& cfg = spec.system;
  const double boost = spec.first_subslot_snr_db
                           ? *spec.first_subslot_snr_db - cfg.target_snr_db
                           : 0.0;

  Rng msg_rng = make_stream(cfg.seed, "messages", std::uint64_t(trial));
  Rng gain_rng = make_stream(cfg.seed, "gains", std::uint64_t(trial));
  Rng chan_rng = make_stream(cfg.seed, "channel", std::uint64_t(trial));
  Rng noise_rng = make_stream(cfg.seed, "noise", std::uint64_t(trial));

  TrialWorld world;
  world.messages = draw_messages(cfg, msg_rng);
  const LargeScaleFading fading = draw_large_scale_fading(cfg, gain_rng);

  SystemConfig tx_cfg = cfg;
  std::vector<Message> tx_messages;
  if (profile) {
    tx_cfg.sub_slots = profile->sub_slots;
    for (const auto& m : world.messages) {
      Message coded;
      coded.bits = m.bits;
      coded.sub_blocks = tree_encode(m.bits, *profile);
      tx_messages.push_back(std::move(coded));
    }
  } else {
    tx_messages = world.messages;
  }

  const ChannelRealization channel =
      make_channel(tx_cfg, fading, chan_rng, boost);
  world.truth = build_ground_truth(tx_cfg, std::move(tx_messages), channel);
  world.signals.reserve(tx_cfg.sub_slots);
  for (int l = 1; l <= tx_cfg.sub_slots; ++l)
    world.signals.push_back(synthesize_received_signal(
        tx_cfg, codebook, world.truth, channel, l, noise_rng));
  return world;
}

TrialResult run_trial_impl(const ExperimentSpec& spec,
                           const Codebook& codebook,
                           const TreeCodeProfile* profile, int trial) {
  const auto start = std::chrono::steady_clock::now();
  DetectionConfig detection = spec.detection;
  detection.threshold = resolve_threshold(spec);
  const double slot1_scale =
      spec.first_subslot_snr_db
          ? std::pow(10.0,
                     (*spec.first_subslot_snr_db - spec.system.target_snr_db) /
                         10.0)
          : 1.0;

  const TrialWorld world = synthesize_trial(spec, codebook, profile, trial);

  TrialResult result;
  std::vector<Message> recovered;
  std::vector<int> slot1_detected;

  switch (spec.scheme) {
    case Scheme::integrated: {
      const SessionResult session =
          decode_session(world.signals, codebook, spec.system.noise_variance,
                         spec.penalties, detection, slot1_scale);
      recovered = session.messages;
      for (const auto& m : recovered)
        if (!m.sub_blocks.empty()) slot1_detected.push_back(m.sub_blocks[0]);
      result.estimated_active = int(recovered.size());
      double iter_sum = 0.0;
      int iter_n = 0;
      for (const auto& d : session.diagnostics) {
        if (d.sub_slot >= 2) {
          iter_sum += d.iterations;
          ++iter_n;
        }
        result.stitch_conflicts += d.stitch_conflicts;
      }
      result.iterations = iter_n > 0 ? iter_sum / iter_n : 0.0;
      break;
    }
    case Scheme::separate: {
      Rng cluster_rng =
          make_stream(spec.system.seed, "kmeans", std::uint64_t(trial));
      const SeparateDecodeResult sep = uura_sd_decode(
          world.signals, codebook, spec.system.noise_variance, detection,
          spec.penalties.gamma_floor, cluster_rng, slot1_scale);
      recovered = sep.messages;
      slot1_detected = sep.slot1_detected;
      result.estimated_active = sep.estimated_active;
      result.iterations = sep.mean_p0_sweeps;
      break;
    }
    case Scheme::coupled: {
      const CoupledDecodeResult cura = cura_decode(
          world.signals, codebook, *profile, spec.system.active_users);
      recovered = cura.messages;
      slot1_detected =
          energy_detect(world.signals[0], codebook, spec.system.active_users);
      result.estimated_active = int(recovered.size());
      result.iterations = double(cura.tree_nodes_visited);
      break;
    }
  }

  const auto [p_md, p_fa] = compute_pmd_pfa(world.messages, recovered);
  result.p_md = p_md;
  result.p_fa = p_fa;
  const auto [missed, false_det] =
      slot1_miss_false(world.truth.active_lists[0], slot1_detected);
  result.slot1_missed = missed;
  result.slot1_false = false_det;
  result.wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

void run_parallel(int tasks, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0)
    workers = int(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, tasks);
  if (workers <= 1) {
    for (int i = 0; i < tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::pair<double, double> compute_pmd_pfa(
    const std::vector<Message>& transmitted,
    const std::vector<Message>& recovered) {
  std::set<std::vector<std::uint8_t>> truth;
  for (const auto& m : transmitted) truth.insert(m.bits);
  std::set<std::vector<std::uint8_t>> got;
  for (const auto& m : recovered) got.insert(m.bits);

  int missed = 0;
  for (const auto& bits : truth)
    if (!got.count(bits)) ++missed;
  int bogus = 0;
  for (const auto& bits : got)
    if (!truth.count(bits)) ++bogus;

  const double p_md = truth.empty() ? 0.0 : double(missed) / truth.size();
  const double p_fa = got.empty() ? 0.0 : double(bogus) / got.size();
  return {p_md, p_fa};
}

double compute_der(std::span<const std::pair<int, int>> miss_false_per_trial,
                   int active_users) {
  if (miss_false_per_trial.empty() || active_users < 1) return 0.0;
  double total = 0.0;
  for (const auto& [missed, false_det] : miss_false_per_trial)
    total += missed + false_det;
  return total / (double(miss_false_per_trial.size()) * active_users);
}

TreeCodeProfile cura_profile_for(const ExperimentSpec& spec) {
  const int l = spec.cura_sub_slots > 0 ? spec.cura_sub_slots
                                        : 4 * spec.system.sub_slots;
  return TreeCodeProfile::balanced(spec.system.message_bits(),
                                   spec.system.subblock_bits, l,
                                   spec.system.seed ^ 0x7265657463ULL);
}

TrialResult run_single_trial(const ExperimentSpec& spec, int trial_index) {
  spec.system.validate();
  Rng cb_rng = make_stream(spec.system.seed, "codebook");
  const Codebook codebook = generate_codebook(spec.system, cb_rng);
  if (spec.scheme == Scheme::coupled) {
    const TreeCodeProfile profile = cura_profile_for(spec);
    return run_trial_impl(spec, codebook, &profile, trial_index);
  }
  return run_trial_impl(spec, codebook, nullptr, trial_index);
}

ExperimentResult run_trials(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw ConfigError("trials must be >= 1");
  spec.system.validate();

  std::vector<std::pair<bool, double>> points;  // (has value, value)
  std::vector<ExperimentSpec> point_specs;
  if (spec.sweep) {
    const SweepSetter& setter = find_setter(spec.sweep->first);
    if (spec.sweep->second.empty())
      throw ConfigError("sweep value list is empty");
    for (const double v : spec.sweep->second) {
      ExperimentSpec s = spec;
      s.sweep.reset();
      setter.apply(s, v);
      s.system.validate();
      points.emplace_back(true, v);
      point_specs.push_back(std::move(s));
    }
  } else {
    points.emplace_back(false, 0.0);
    point_specs.push_back(spec);
  }

  ExperimentResult result;
  std::ostringstream csv;
  csv << "sweep_value,trial,p_md,p_fa,der,iterations,wall_clock\n";

  for (std::size_t p = 0; p < point_specs.size(); ++p) {
    const ExperimentSpec& ps = point_specs[p];
    Rng cb_rng = make_stream(ps.system.seed, "codebook");
    const Codebook codebook = generate_codebook(ps.system, cb_rng);
    TreeCodeProfile profile;
    const TreeCodeProfile* profile_ptr = nullptr;
    if (ps.scheme == Scheme::coupled) {
      profile = cura_profile_for(ps);
      profile_ptr = &profile;
    }

    std::vector<TrialResult> trials(ps.trials);
    run_parallel(ps.trials, ps.workers, [&](int t) {
      trials[t] = run_trial_impl(ps, codebook, profile_ptr, t);
    });

    MetricsReport report;
    report.trials = ps.trials;
    std::vector<std::pair<int, int>> miss_false;
    miss_false.reserve(trials.size());
    for (const auto& t : trials) {
      report.p_md += t.p_md;
      report.p_fa += t.p_fa;
      report.mean_iterations += t.iterations;
      report.wall_clock += t.wall_clock;
      miss_false.emplace_back(t.slot1_missed, t.slot1_false);
    }
    report.p_md /= ps.trials;
    report.p_fa /= ps.trials;
    report.mean_iterations /= ps.trials;
    report.error_probability = report.p_md + report.p_fa;
    report.der_first_subslot =
        compute_der(miss_false, ps.system.active_users);
    report.complexity_estimate =
        complexity_report(ps.scheme, complexity_config_for(ps));

    for (int t = 0; t < ps.trials; ++t) {
      const TrialResult& r = trials[t];
      const double der =
          double(r.slot1_missed + r.slot1_false) / ps.system.active_users;
      csv << csv_field(points[p].first ? format_sweep_value(points[p].second)
                                       : "")
          << ',' << t << ',' << format_double(r.p_md) << ','
          << format_double(r.p_fa) << ',' << format_double(der) << ','
          << format_double(r.iterations) << ','
          << format_double(spec.timings ? r.wall_clock : 0.0) << '\n';
    }

    if (log_level() >= 1) {
      std::fprintf(stderr,
                   "[uura] point %zu/%zu (%s): p_md=%.4f p_fa=%.4f der=%.4g "
                   "iter=%.1f wall=%.1fs\n",
                   p + 1, point_specs.size(), scheme_to_string(ps.scheme).c_str(),
                   report.p_md, report.p_fa, report.der_first_subslot,
                   report.mean_iterations, report.wall_clock);
    }
    result.points.push_back({points[p].second, report});
  }

  result.csv = csv.str();
  if (!spec.output_path.empty()) {
    std::ofstream out(spec.output_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + spec.output_path);
    out << result.csv;
  }
  return result;
}

namespace {

// First m antennas of a wider capture; smaller arrays are nested subarrays
// of the largest so per-trial comparisons across antenna counts share the
// same channel and noise realizations.
SignalMatrix first_antennas(const SignalMatrix& y, int m) {
  SignalMatrix out;
  out.rows = y.rows;
  out.cols = m;
  out.data.assign(y.data.begin(),
                  y.data.begin() + std::size_t(m) * y.rows);
  return out;
}

}  // namespace

TraceResult mse_trace_experiment(const ExperimentSpec& spec,
                                 std::span<const int> antenna_list,
                                 double step_decay) {
  spec.system.validate();
  TraceResult result;
  const int size = spec.system.codebook_size();
  int max_antennas = 1;
  for (const int m : antenna_list) max_antennas = std::max(max_antennas, m);

  struct Task {
    int antennas;
    int trial;
  };
  std::vector<Task> tasks;
  for (const int m : antenna_list)
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({m, t});
  std::vector<TraceRow> rows(tasks.size());

  run_parallel(int(tasks.size()), spec.workers, [&](int idx) {
    const Task task = tasks[idx];
    ExperimentSpec ps = spec;
    ps.system.antennas = max_antennas;
    DetectionConfig detection = ps.detection;
    detection.threshold = resolve_threshold(ps);

    Rng cb_rng = make_stream(ps.system.seed, "codebook");
    const Codebook codebook = generate_codebook(ps.system, cb_rng);
    TrialWorld world = synthesize_trial(ps, codebook, nullptr, task.trial);
    if (task.antennas < max_antennas)
      for (auto& y : world.signals) y = first_antennas(y, task.antennas);

    TraceRow row;
    row.antennas = task.antennas;
    row.trial = task.trial;

    const double slot1_scale =
        ps.first_subslot_snr_db
            ? std::pow(10.0, (*ps.first_subslot_snr_db -
                              ps.system.target_snr_db) /
                                 10.0)
            : 1.0;
    const mig::HermMatrix cov1 = sample_covariance(world.signals[0]);
    const MlEstimate first =
        solve_p0(cov1, codebook, ps.system.noise_variance, detection);
    const auto [active, count] = estimate_active_count(
        first.gamma, detection.threshold * slot1_scale);
    if (count > 0 && world.signals.size() > 1) {
      std::vector<double> centered = first.gamma;
      if (slot1_scale != 1.0)
        for (auto& g : centered) g /= slot1_scale;
      const ClassRegistry registry0 =
          init_classes(active, centered, task.antennas);
      const mig::HermMatrix cov2 = sample_covariance(world.signals[1]);
      DetectionConfig warm_cfg = detection;
      warm_cfg.max_sweeps = ps.penalties.warm_start_sweeps;
      const MlEstimate warm =
          solve_p0(cov2, codebook, ps.system.noise_variance, warm_cfg);
      const std::vector<double>& truth2 = world.truth.slot_gains[1];

      const auto run = [&](double decay, int& iters, double& mse) {
        ClassRegistry registry = registry0;
        PenaltyConfig pen = ps.penalties;
        pen.step_decay = decay;
        const SubSlotDecodeResult res =
            decode_subslot(cov2, codebook, registry, pen, warm,
                           ps.system.noise_variance, ps.system.subblock_bits);
        iters = res.iterations_used;
        mse = kernels::active().sum_sq_diff(res.gamma_hat.data(),
                                            truth2.data(), std::size_t(size)) /
              double(size);
      };
      run(1.0, row.iterations_fixed, row.final_mse_fixed);
      run(step_decay, row.iterations_decay, row.final_mse_decay);
    }
    rows[idx] = row;
  });

  std::ostringstream csv;
  csv << "antennas,trial,iterations_fixed,final_mse_fixed,iterations_decay,"
         "final_mse_decay\n";
  for (const auto& r : rows) {
    csv << r.antennas << ',' << r.trial << ',' << r.iterations_fixed << ','
        << format_double(r.final_mse_fixed) << ',' << r.iterations_decay
        << ',' << format_double(r.final_mse_decay) << '\n';
  }
  result.rows = std::move(rows);
  result.csv = csv.str();
  if (!spec.output_path.empty()) {
    std::ofstream out(spec.output_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + spec.output_path);
    out << result.csv;
  }
  return result;
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "integrated") return Scheme::integrated;
  if (name == "separate") return Scheme::separate;
  if (name == "coupled") return Scheme::coupled;
  throw ConfigError("unknown scheme: " + name +
                    " (expected integrated|separate|coupled)");
}

std::string scheme_to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::integrated: return "integrated";
    case Scheme::separate: return "separate";
    case Scheme::coupled: return "coupled";
  }
  return "?";
}

ExperimentSpec load_experiment_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::set<std::string> known = {
      "totalUsers", "activeUsers", "antennas", "subBlockBits", "subSlots",
      "codewordLength", "noiseVariance", "targetSnrDb", "cellRadiusKm",
      "gainSpreadDb", "seed", "messageBits",
      "alpha", "beta", "stepSize", "stepDecay", "maxIterations",
      "convergenceTol", "gammaFloor", "warmStartSweeps",
      "threshold", "maxSweeps", "sweepTolerance",
      "scheme", "trials", "firstSubSlotSnrDb", "curaSubSlots",
      "outputPath", "workers", "timings"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config field: " + key);
  }

  ExperimentSpec s;
  try {
    auto& c = s.system;
    if (j.contains("totalUsers")) c.total_users = j["totalUsers"].get<int>();
    if (j.contains("activeUsers")) c.active_users = j["activeUsers"].get<int>();
    if (j.contains("antennas")) c.antennas = j["antennas"].get<int>();
    if (j.contains("subBlockBits")) c.subblock_bits = j["subBlockBits"].get<int>();
    if (j.contains("subSlots")) c.sub_slots = j["subSlots"].get<int>();
    if (j.contains("codewordLength")) c.codeword_length = j["codewordLength"].get<int>();
    if (j.contains("noiseVariance")) c.noise_variance = j["noiseVariance"].get<double>();
    if (j.contains("targetSnrDb")) c.target_snr_db = j["targetSnrDb"].get<double>();
    if (j.contains("cellRadiusKm")) c.cell_radius_km = j["cellRadiusKm"].get<double>();
    if (j.contains("gainSpreadDb")) c.gain_spread_db = j["gainSpreadDb"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("messageBits") &&
        j["messageBits"].get<int>() != c.message_bits())
      throw ConfigError("messageBits must equal subSlots * subBlockBits");

    auto& p = s.penalties;
    if (j.contains("alpha")) p.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) p.beta = j["beta"].get<double>();
    if (j.contains("stepSize")) p.step_size = j["stepSize"].get<double>();
    if (j.contains("stepDecay")) p.step_decay = j["stepDecay"].get<double>();
    if (j.contains("maxIterations")) p.max_iterations = j["maxIterations"].get<int>();
    if (j.contains("convergenceTol")) p.convergence_tol = j["convergenceTol"].get<double>();
    if (j.contains("gammaFloor")) p.gamma_floor = j["gammaFloor"].get<double>();
    if (j.contains("warmStartSweeps")) p.warm_start_sweeps = j["warmStartSweeps"].get<int>();

    auto& d = s.detection;
    if (j.contains("threshold")) {
      d.threshold = j["threshold"].get<double>();
      s.auto_threshold = false;
    }
    if (j.contains("maxSweeps")) d.max_sweeps = j["maxSweeps"].get<int>();
    if (j.contains("sweepTolerance")) d.sweep_tolerance = j["sweepTolerance"].get<double>();

    if (j.contains("scheme"))
      s.scheme = scheme_from_string(j["scheme"].get<std::string>());
    if (j.contains("trials")) s.trials = j["trials"].get<int>();
    if (j.contains("firstSubSlotSnrDb"))
      s.first_subslot_snr_db = j["firstSubSlotSnrDb"].get<double>();
    if (j.contains("curaSubSlots")) s.cura_sub_slots = j["curaSubSlots"].get<int>();
    if (j.contains("outputPath")) s.output_path = j["outputPath"].get<std::string>();
    if (j.contains("workers")) s.workers = j["workers"].get<int>();
    if (j.contains("timings")) s.timings = j["timings"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  s.system.validate();
  return s;
}

std::string experiment_spec_to_json(const ExperimentSpec& s) {
  nlohmann::json j{
      {"totalUsers", s.system.total_users},
      {"activeUsers", s.system.active_users},
      {"antennas", s.system.antennas},
      {"subBlockBits", s.system.subblock_bits},
      {"subSlots", s.system.sub_slots},
      {"codewordLength", s.system.codeword_length},
      {"noiseVariance", s.system.noise_variance},
      {"targetSnrDb", s.system.target_snr_db},
      {"cellRadiusKm", s.system.cell_radius_km},
      {"gainSpreadDb", s.system.gain_spread_db},
      {"seed", s.system.seed},
      {"alpha", s.penalties.alpha},
      {"beta", s.penalties.beta},
      {"stepSize", s.penalties.step_size},
      {"stepDecay", s.penalties.step_decay},
      {"maxIterations", s.penalties.max_iterations},
      {"convergenceTol", s.penalties.convergence_tol},
      {"gammaFloor", s.penalties.gamma_floor},
      {"warmStartSweeps", s.penalties.warm_start_sweeps},
      {"maxSweeps", s.detection.max_sweeps},
      {"sweepTolerance", s.detection.sweep_tolerance},
      {"scheme", scheme_to_string(s.scheme)},
      {"trials", s.trials},
      {"workers", s.workers},
      {"timings", s.timings},
  };
  if (!s.auto_threshold) j["threshold"] = s.detection.threshold;
  if (s.first_subslot_snr_db) j["firstSubSlotSnrDb"] = *s.first_subslot_snr_db;
  if (s.cura_sub_slots > 0) j["curaSubSlots"] = s.cura_sub_slots;
  if (!s.output_path.empty()) j["outputPath"] = s.output_path;
  return j.dump(2);
}

std::string metrics_report_to_json(const ExperimentResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) {
    points.push_back(nlohmann::json{
        {"sweepValue", p.value},
        {"pMd", p.report.p_md},
        {"pFa", p.report.p_fa},
        {"errorProbability", p.report.error_probability},
        {"derFirstSubSlot", p.report.der_first_subslot},
        {"meanIterations", p.report.mean_iterations},
        {"wallClock", p.report.wall_clock},
        {"trials", p.report.trials},
        {"complexityEstimate", p.report.complexity_estimate},
    });
  }
  return nlohmann::json{{"points", points}}.dump(2);
}

}  // namespace uura
