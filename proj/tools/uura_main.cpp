#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uura/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw uura::ConfigError("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw uura::ConfigError("bad numeric value in list: " + item);
    }
  }
  if (values.empty()) throw uura::ConfigError("empty value list");
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link-level simulator and decoders for uncoupled unsourced "
               "random access"};
  app.require_subcommand(1);

  std::string config_path, scheme, sweep, out_path, json_report, antennas;
  int trials = -1, workers = -1;
  long long seed = -1;
  bool timings = false;
  double decay = 0.8;

  CLI::App* run = app.add_subcommand("run", "Monte Carlo experiment");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--scheme", scheme, "integrated|separate|coupled");
  run->add_option("--trials", trials, "number of trials");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--sweep", sweep, "field=v1,v2,...");
  run->add_option("--out", out_path, "CSV output path");
  run->add_option("--workers", workers, "worker threads (0 = hardware)");
  run->add_flag("--timings", timings,
                "measure per-trial wall clock in the CSV (not reproducible)");
  run->add_option("--json-report", json_report, "aggregate report path");

  CLI::App* trace = app.add_subcommand("trace", "convergence trace per antenna count");
  trace->add_option("--config", config_path, "JSON config file")->required();
  trace->add_option("--antennas", antennas, "comma-separated antenna counts")
      ->required();
  trace->add_option("--trials", trials, "number of trials");
  trace->add_option("--out", out_path, "CSV output path");
  trace->add_option("--workers", workers, "worker threads");
  trace->add_option("--decay", decay, "step decay factor for the second run");

  try {
    app.parse(argc, argv);

    uura::ExperimentSpec spec =
        uura::load_experiment_spec(read_file(config_path));
    if (!scheme.empty()) spec.scheme = uura::scheme_from_string(scheme);
    if (trials >= 0) spec.trials = trials;
    if (seed >= 0) spec.system.seed = std::uint64_t(seed);
    if (!out_path.empty()) spec.output_path = out_path;
    if (workers >= 0) spec.workers = workers;
    if (timings) spec.timings = true;

    if (run->parsed()) {
      if (!sweep.empty()) {
        const auto eq = sweep.find('=');
        if (eq == std::string::npos)
          throw uura::ConfigError("--sweep expects field=v1,v2,...");
        spec.sweep = {sweep.substr(0, eq),
                      parse_value_list(sweep.substr(eq + 1))};
      }
      const uura::ExperimentResult result = uura::run_trials(spec);
      if (spec.output_path.empty()) std::cout << result.csv;
      if (!json_report.empty()) {
        std::ofstream out(json_report, std::ios::binary);
        if (!out)
          throw uura::ConfigError("cannot open report file: " + json_report);
        out << uura::metrics_report_to_json(result) << '\n';
      }
      for (const auto& p : result.points) {
        std::fprintf(stderr,
                     "scheme=%s sweep=%g trials=%d p_md=%.4f p_fa=%.4f "
                     "error=%.4f der=%.4g iters=%.1f\n",
                     uura::scheme_to_string(spec.scheme).c_str(), p.value,
                     p.report.trials, p.report.p_md, p.report.p_fa,
                     p.report.error_probability, p.report.der_first_subslot,
                     p.report.mean_iterations);
      }
    } else {
      std::vector<int> antenna_list;
      for (const double v : parse_value_list(antennas))
        antenna_list.push_back(int(v));
      const uura::TraceResult result =
          uura::mse_trace_experiment(spec, antenna_list, decay);
      if (spec.output_path.empty()) std::cout << result.csv;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const uura::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
