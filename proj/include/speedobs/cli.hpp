// Copyright 2026 The speedobs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// run / check / sweep commands. Each returns the process exit code:
// 0 success, 1 failed assumption check, 2 configuration error, 3 divergence.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "speedobs/adaptive_observer.hpp"
#include "speedobs/config.hpp"
#include "speedobs/geometry.hpp"
#include "speedobs/simulation.hpp"
#include "speedobs/svg.hpp"
#include "speedobs/systems.hpp"

namespace speedobs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

/// Consulted when neither -o nor [output] directory is given.
inline constexpr const char* kOutputDirEnv = "SPEEDOBS_OUTPUT_DIR";
inline constexpr const char* kFallbackOutputDir = "speedobs-out";
inline constexpr std::size_t kCheckSamples = 100;
inline constexpr unsigned kCheckSeed = 20260;

namespace fs = std::filesystem;

inline fs::path resolve_output_dir(const std::optional<std::string>& flag,
                                   const OutputSpec& spec) {
  if (flag && !flag->empty()) return *flag;
  if (!spec.directory.empty()) return spec.directory;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return kFallbackOutputDir;
}

inline std::string format_metrics(const Scenario& sc, const TimeSeries& ts,
                                  const Metrics& m) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << "observer=" << to_string(ts.kind) << '\n';
  os << "samples=" << ts.size() << '\n';
  os << "t_final=" << (ts.t.empty() ? 0.0 : ts.t.back()) << '\n';
  os << "dt=" << sc.dt << '\n';
  os << "epsilon=" << m.epsilon << '\n';
  os << "convergence_time=";
  if (m.convergence_time) {
    os << *m.convergence_time;
  } else {
    os << "none";
  }
  os << '\n';
  os << "final_err_p=" << m.final_err_p << '\n';
  os << "final_err_d=" << m.final_err_d << '\n';
  os << "final_err_r=" << m.final_err_r << '\n';
  os << "min_r=" << m.min_scale << '\n';
  os << "lyapunov_violations=" << m.lyapunov_violations << '\n';
  os << "max_lyapunov_violation=" << m.max_lyapunov_violation << '\n';
  double max_rate = 0.0;
  for (double v : ts.lyapunov_rate) max_rate = std::max(max_rate, v);
  os << "max_lyapunov_rate=" << max_rate << '\n';
  os << "diverged=" << (ts.diverged ? "true" : "false") << '\n';
  if (ts.diverged) os << "diagnostic=" << ts.diagnostic << '\n';
  return os.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline void write_series_csv(const fs::path& path, const TimeSeries& ts) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_csv(os, ts);
}

inline void write_plots(const fs::path& dir, const TimeSeries& ts) {
  struct Spec {
    const char* file;
    const char* title;
    const std::vector<double>* series;
  };
  std::vector<Spec> specs{{"err_p.svg", "|p error|", &ts.err_p},
                          {"err_d.svg", "|d error|", &ts.err_d}};
  if (ts.s > 0) specs.push_back({"err_r.svg", "|r_u error|", &ts.err_r});
  for (const auto& s : specs) {
    LinePlot plot;
    plot.title = s.title;
    plot.y_label = s.title;
    plot.x = ts.t;
    plot.y = *s.series;
    plot.log_y = true;
    std::ofstream os(dir / s.file);
    if (!os) throw std::runtime_error("cannot write " + (dir / s.file).string());
    write_svg(os, plot);
  }
}

/// Builds the coupled system once so that incompatible pairings surface as
/// configuration errors before any output is written.
inline void preflight(const Scenario& sc) {
  validate(sc);
  const CoupledSystem sys(sc);
  (void)sys.initial_state(sc);
}

inline int cmd_run(const fs::path& config_path,
                   const std::optional<std::string>& output_dir,
                   std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    preflight(cfg.scenario);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const fs::path dir = resolve_output_dir(output_dir, cfg.output);
  try {
    fs::create_directories(dir);
    const TimeSeries ts = integrate_scenario(cfg.scenario);
    const Metrics m = compute_metrics(ts);
    write_series_csv(dir / "timeseries.csv", ts);
    const std::string metrics = format_metrics(cfg.scenario, ts, m);
    write_text(dir / "metrics.txt", metrics);
    write_text(dir / "scenario.cfg", to_config_text(cfg));
    if (cfg.output.emit_svg && ts.has_observer()) write_plots(dir, ts);
    out << metrics;
    out << "output=" << dir.string() << '\n';
    if (ts.diverged) {
      err << "error: run diverged: " << ts.diagnostic << '\n';
      return kExitDiverged;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

inline int cmd_check(const fs::path& config_path, std::ostream& out,
                     std::ostream& err) {
  MechanicalModel model;
  try {
    model = make_model(load_config(config_path).scenario.model);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const AssumptionReport rep =
      check_zrs(model, random_configurations(model.n, kCheckSamples, kCheckSeed));
  out << rep.to_text();
  return rep.all_pass() ? kExitOk : kExitCheckFailed;
}

inline std::optional<std::vector<double>> parse_values(const std::string& csv) {
  std::vector<double> values;
  for (const auto& part : detail::split(csv, ',')) {
    double v = 0.0;
    const char* first = part.data();
    const char* last = first + part.size();
    const auto res = std::from_chars(first, last, v);
    if (part.empty() || res.ec != std::errc() || res.ptr != last ||
        !std::isfinite(v)) {
      return std::nullopt;
    }
    values.push_back(v);
  }
  return values;
}

inline std::string aggregate_csv(const std::string& param,
                                 const std::vector<SweepResult>& results) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << param
     << ",convergence_time,final_err_p,final_err_d,final_err_r,min_r,"
        "lyapunov_violations,max_lyapunov_violation,diverged\n";
  for (const auto& r : results) {
    os << r.value << ',';
    if (r.metrics.convergence_time) {
      os << *r.metrics.convergence_time;
    } else {
      os << "nan";
    }
    os << ',' << r.metrics.final_err_p << ',' << r.metrics.final_err_d << ','
       << r.metrics.final_err_r << ',' << r.metrics.min_scale << ','
       << r.metrics.lyapunov_violations << ',' << r.metrics.max_lyapunov_violation
       << ',' << (r.series.diverged ? 1 : 0) << '\n';
  }
  return os.str();
}

inline int cmd_sweep(const fs::path& config_path, const std::string& param,
                     const std::string& values_csv,
                     const std::optional<std::string>& output_dir,
                     std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::vector<double> values;
  try {
    cfg = load_config(config_path);
    const auto parsed = parse_values(values_csv);
    if (!parsed || parsed->empty()) {
      err << "error: --values must be a non-empty comma-separated list of numbers\n";
      return kExitConfig;
    }
    values = *parsed;
    for (double v : values) preflight(with_parameter(cfg.scenario, param, v));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const fs::path dir = resolve_output_dir(output_dir, cfg.output);
  bool diverged = false;
  try {
    fs::create_directories(dir);
    const auto results = sweep(cfg.scenario, param, values);
    for (std::size_t k = 0; k < results.size(); ++k) {
      write_series_csv(dir / ("run_" + std::to_string(k + 1) + ".csv"),
                       results[k].series);
      diverged = diverged || results[k].series.diverged;
    }
    const std::string agg = aggregate_csv(param, results);
    write_text(dir / "aggregate.csv", agg);
    write_text(dir / "scenario.cfg", to_config_text(cfg));
    out << agg;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (diverged) {
    err << "error: at least one sweep run diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

}  // namespace speedobs::cli
