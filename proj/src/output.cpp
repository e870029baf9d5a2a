#include "gra/output.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#ifndef GRA_BUILD_ID
#define GRA_BUILD_ID "unknown"
#endif

namespace gra {

const char* build_id() { return GRA_BUILD_ID; }

const char* to_string(Preset preset) {
  switch (preset) {
    case Preset::fig3: return "fig3";
    case Preset::fig4: return "fig4";
    case Preset::fig6: return "fig6";
  }
  return "?";
}

Preset parse_preset(std::string_view text) {
  if (text == "fig3") return Preset::fig3;
  if (text == "fig4") return Preset::fig4;
  if (text == "fig6") return Preset::fig6;
  throw ConfigError(fmt::format("unknown preset '{}'", text));
}

PresetPlan preset_plan(Preset preset) {
  PresetPlan plan;
  switch (preset) {
    case Preset::fig3:
      plan.variable = SweepVariable::group_size_cap;
      for (int n = 2; n <= 50; ++n) plan.values.push_back(n);
      plan.modes = {Mode::grouped_ra};
      break;
    case Preset::fig4:
      plan.variable = SweepVariable::csi_mae;
      for (int i = 0; i <= 24; ++i) plan.values.push_back(0.5 * i);
      plan.modes = {Mode::grouped_ra};
      break;
    case Preset::fig6:
      plan.variable = SweepVariable::device_count;
      plan.values = {1000, 10000, 30000};
      plan.modes = {Mode::grouped_ra, Mode::eab};
      break;
  }
  return plan;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.10g}", value);
}

std::string render(const Table& table, bool gnuplot) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells, const char* lead) {
    out += lead;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += gnuplot ? " " : ",";
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header, gnuplot ? "# " : "");
  for (const auto& r : table.rows) line(r, "");
  return out;
}

Table runs_table(const std::vector<std::pair<Mode, std::vector<SweepPoint>>>& results,
                 SweepVariable variable, std::uint64_t seed) {
  Table t;
  t.header = {"variable", "value", "mode", "run_seed", "seed", "build"};
  bool named = false;
  for (const auto& [mode, points] : results) {
    for (const auto& p : points) {
      for (const auto& r : p.report.runs) {
        const auto scalars = r.scalars();
        if (!named) {
          for (const auto& [name, v] : scalars) t.header.push_back(name);
          named = true;
        }
        std::vector<std::string> row{to_string(variable), format_number(p.value), to_string(mode),
                                     std::to_string(r.seed), std::to_string(seed), build_id()};
        for (const auto& [name, v] : scalars) row.push_back(format_number(v));
        t.rows.push_back(std::move(row));
      }
    }
  }
  return t;
}

namespace {

double per_run_stddev(const MonteCarloReport& r) {
  return r.metric("mean_delay").stddev;
}

}  // namespace

Table preset_table(Preset preset, const std::vector<std::pair<Mode, std::vector<SweepPoint>>>& results,
                   std::uint64_t seed) {
  Table t;
  const auto tail = [&](const MonteCarloReport& r) {
    return std::vector<std::string>{std::to_string(r.runs.size()), std::to_string(seed), build_id()};
  };
  auto append = [](std::vector<std::string> row, std::vector<std::string> more) {
    row.insert(row.end(), more.begin(), more.end());
    return row;
  };
  switch (preset) {
    case Preset::fig3:
      t.header = {"group_size", "mean_PER", "mean_reliability", "runs", "seed", "build"};
      for (const auto& p : results.front().second) {
        t.rows.push_back(append({format_number(p.value), format_number(p.report.metric("mean_d2d_per").mean),
                                 format_number(p.report.metric("mean_d2d_reliability").mean)},
                                tail(p.report)));
      }
      break;
    case Preset::fig4:
      t.header = {"mae", "mean_PER", "worst_PER", "runs", "seed", "build"};
      for (const auto& p : results.front().second) {
        t.rows.push_back(append({format_number(p.value), format_number(p.report.metric("mean_d2d_per").mean),
                                 format_number(p.report.metric("worst_d2d_per").mean)},
                                tail(p.report)));
      }
      break;
    case Preset::fig6: {
      t.header = {"N",          "mode",          "mean_delay",     "stddev", "ull_mean_delay",
                  "censored_mean_delay", "collision_rate", "runs", "seed",   "build"};
      // Rows ordered by N, then mode.
      const auto& first = results.front().second;
      for (std::size_t i = 0; i < first.size(); ++i) {
        for (const auto& [mode, points] : results) {
          const auto& p = points[i];
          t.rows.push_back(append({format_number(p.value), to_string(mode),
                                   format_number(p.report.pooled_mean_delay),
                                   format_number(per_run_stddev(p.report)),
                                   format_number(p.report.pooled_ull_mean_delay),
                                   format_number(p.report.metric("censored_mean_delay").mean),
                                   format_number(p.report.metric("collision_rate").mean)},
                                  tail(p.report)));
        }
      }
      break;
    }
  }
  return t;
}

Table summary_table(const MonteCarloReport& report, Mode mode, std::uint64_t seed) {
  Table t;
  t.header = {"mode", "metric", "mean", "stddev", "runs", "seed", "build"};
  t.rows.push_back({to_string(mode), "pooled_mean_delay", format_number(report.pooled_mean_delay), "",
                    std::to_string(report.runs.size()), std::to_string(seed), build_id()});
  t.rows.push_back({to_string(mode), "pooled_ull_mean_delay", format_number(report.pooled_ull_mean_delay),
                    "", std::to_string(report.runs.size()), std::to_string(seed), build_id()});
  for (const auto& [name, s] : report.summary) {
    t.rows.push_back({to_string(mode), name, format_number(s.mean), format_number(s.stddev),
                      std::to_string(report.runs.size()), std::to_string(seed), build_id()});
  }
  return t;
}

namespace {

void prepare_out_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("{}: cannot create output directory: {}", dir, ec.message()));
  const auto probe = fs::path(dir) / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error(fmt::format("{}: output directory is not writable", dir));
  }
  fs::remove(probe, ec);
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& text) {
  const auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error(fmt::format("{}: write failed", path));
  return path;
}

}  // namespace

std::vector<std::string> execute(const RunManifest& m) {
  const SimConfig config = m.config_path.empty() ? SimConfig{} : load_config(m.config_path);
  validate(config);
  if (m.runs == 0) throw ConfigError("runs: must be at least 1");
  const std::uint64_t seed = m.seed.value_or(config.scenario.rng_seed);
  prepare_out_dir(m.out_dir);

  const std::string ext = m.gnuplot ? ".dat" : ".csv";
  std::vector<std::string> written;
  if (m.preset) {
    const auto plan = preset_plan(*m.preset);
    std::vector<std::pair<Mode, std::vector<SweepPoint>>> results;
    for (Mode mode : plan.modes) {
      results.emplace_back(mode, sweep(config, plan.variable, plan.values, mode, m.runs, seed, m.threads));
    }
    const std::string name = to_string(*m.preset);
    written.push_back(write_file(m.out_dir, name + ext, render(preset_table(*m.preset, results, seed), m.gnuplot)));
    written.push_back(write_file(m.out_dir, name + "_runs" + ext,
                                 render(runs_table(results, plan.variable, seed), m.gnuplot)));
    return written;
  }

  auto report = monte_carlo(config, m.mode, m.runs, seed, m.threads);
  const double n = static_cast<double>(config.scenario.device_count);
  std::vector<std::pair<Mode, std::vector<SweepPoint>>> results;
  results.push_back({m.mode, {SweepPoint{n, report}}});
  written.push_back(write_file(m.out_dir, std::string("summary") + ext,
                               render(summary_table(report, m.mode, seed), m.gnuplot)));
  written.push_back(write_file(m.out_dir, std::string("runs") + ext,
                               render(runs_table(results, SweepVariable::device_count, seed), m.gnuplot)));
  return written;
}

}  // namespace gra
