#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uura/baselines.hpp"
#include "uura/integrated_decoder.hpp"
#include "uura/system_model.hpp"

// Monte Carlo experiment runner: trial synthesis, scheme dispatch behind a
// uniform decoder interface, metric aggregation, and CSV emission. Every
// per-trial quantity is a pure function of (spec, trial index), so results
// are reproducible regardless of worker count or execution order.

namespace uura {

struct ExperimentSpec {
  SystemConfig system;
  PenaltyConfig penalties;
  DetectionConfig detection;
  Scheme scheme = Scheme::integrated;
  int trials = 1;
  // When set, detection.threshold is taken as-is; otherwise it is derived
  // from the configured noise level and target SNR at run time.
  bool auto_threshold = true;
  // SNR override for the first sub-slot (dB); improves the active-count
  // estimate the later sub-slots depend on.
  std::optional<double> first_subslot_snr_db;
  // Coupled-scheme sub-slot count; 0 derives 4x the uncoupled L.
  int cura_sub_slots = 0;
  std::optional<std::pair<std::string, std::vector<double>>> sweep;
  std::string output_path;
  int workers = 0;     // 0 = hardware concurrency
  // Real per-trial wall-clock in the CSV; off by default because timing
  // breaks byte-identical reruns.
  bool timings = false;
};

struct TrialResult {
  double p_md = 0.0;
  double p_fa = 0.0;
  int slot1_missed = 0;
  int slot1_false = 0;
  double iterations = 0.0;  // scheme-dependent work measure
  double wall_clock = 0.0;  // seconds, measured
  int estimated_active = 0;
  int stitch_conflicts = 0;
};

struct MetricsReport {
  double p_md = 0.0;
  double p_fa = 0.0;
  double error_probability = 0.0;
  double der_first_subslot = 0.0;
  double mean_iterations = 0.0;
  double wall_clock = 0.0;  // total seconds across trials
  int trials = 0;
  double complexity_estimate = 0.0;  // analytic multiplication count
};

// Message-level scoring: misdetection is the fraction of transmitted
// messages missing from the recovered set; false alarm is the fraction of
// recovered messages never transmitted (0 when nothing was recovered).
std::pair<double, double> compute_pmd_pfa(
    const std::vector<Message>& transmitted,
    const std::vector<Message>& recovered);

// First-sub-slot detection error rate over trials, normalized by trials*K_a.
double compute_der(std::span<const std::pair<int, int>> miss_false_per_trial,
                   int active_users);

TrialResult run_single_trial(const ExperimentSpec& spec, int trial_index);

struct SweepPoint {
  double value = 0.0;
  MetricsReport report;
};

struct ExperimentResult {
  std::vector<SweepPoint> points;  // single entry when no sweep
  std::string csv;
};

// Executes all trials (parallel across a worker pool), aggregates metrics,
// renders the CSV, and writes it to spec.output_path when set. Throws
// ConfigError for an unknown sweep field before any trial runs.
ExperimentResult run_trials(const ExperimentSpec& spec);

// Convergence-trace experiment: decode the second sub-slot for each antenna
// count, with fixed and decayed step schedules on matched seeds.
struct TraceRow {
  int antennas = 0;
  int trial = 0;
  int iterations_fixed = 0;
  double final_mse_fixed = 0.0;
  int iterations_decay = 0;
  double final_mse_decay = 0.0;
};

struct TraceResult {
  std::vector<TraceRow> rows;
  std::string csv;
};

TraceResult mse_trace_experiment(const ExperimentSpec& spec,
                                 std::span<const int> antenna_list,
                                 double step_decay = 0.8);

// Flat JSON config file -> spec; unknown keys rejected.
ExperimentSpec load_experiment_spec(const std::string& json_text);
std::string experiment_spec_to_json(const ExperimentSpec& spec);
std::string metrics_report_to_json(const ExperimentResult& result);

Scheme scheme_from_string(const std::string& name);  // throws ConfigError
std::string scheme_to_string(Scheme scheme);

TreeCodeProfile cura_profile_for(const ExperimentSpec& spec);

}  // namespace uura
