#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gra/engine.hpp"

namespace gra {

/// `git describe` of the tree this library was built from.
const char* build_id();

enum class Preset : std::uint8_t { fig3, fig4, fig6 };

const char* to_string(Preset preset);
Preset parse_preset(std::string_view text);

/// What a preset sweeps; fixed per preset.
struct PresetPlan {
  SweepVariable variable;
  std::vector<double> values;
  std::vector<Mode> modes;
};

PresetPlan preset_plan(Preset preset);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Locale-independent decimal rendering.
std::string format_number(double value);

/// CSV, or with `gnuplot` a whitespace-separated variant whose header is a
/// comment line.
std::string render(const Table& table, bool gnuplot = false);

/// One row per run and sweep point with every scalar metric.
Table runs_table(const std::vector<std::pair<Mode, std::vector<SweepPoint>>>& results,
                 SweepVariable variable, std::uint64_t seed);

/// The per-preset aggregate schema.
Table preset_table(Preset preset, const std::vector<std::pair<Mode, std::vector<SweepPoint>>>& results,
                   std::uint64_t seed);

/// Aggregate of a plain Monte-Carlo batch (no preset).
Table summary_table(const MonteCarloReport& report, Mode mode, std::uint64_t seed);

struct RunManifest {
  std::string config_path;  // empty: built-in defaults
  Mode mode = Mode::grouped_ra;
  std::size_t runs = 10;
  std::optional<std::uint64_t> seed;  // default: scenario.rng_seed
  std::string out_dir = "out";
  std::optional<Preset> preset;
  bool gnuplot = false;
  std::size_t threads = 1;
};

/// Runs the manifest and writes its CSVs; returns the written paths. The
/// output directory is checked for writability before any simulation.
std::vector<std::string> execute(const RunManifest& manifest);

}  // namespace gra
