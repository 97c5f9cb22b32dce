// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "snn/data.hpp"
#include "snn/hwmodel.hpp"
#include "snn/learning.hpp"
#include "snn/network.hpp"

namespace snn {

/// One hyperparameter combination of a sweep.
struct SweepPoint {
  std::size_t index = 0;
  SurrogateKind surrogate = SurrogateKind::fast_sigmoid;
  double scale = 0.0;
  double beta = 0.0;
  double theta = 0.0;

  /// "p<index>_<surrogate>_k<scale>_b<beta>_t<theta>"; sorts in index order.
  std::string key() const;
};

/// Sweep definition. Loaded from a `key = value` file:
///
///   name, arch, timesteps, encoder, epochs, batch, lr, optimizer, seed,
///   surrogate, scale, beta, theta, centered, clip,
///   axis.surrogate, axis.scale, axis.beta, axis.theta   (comma lists)
///   repeats, budget,
///   data (synth | IDX directory), synth_per_class, synth_classes,
///   synth_side, synth_noise, data_seed, test_fraction,
///   hw_config (path relative to the grid file), hw.<key> overrides
///
/// Axes missing from the file hold the single base value.
struct SweepGrid {
  std::string name = "sweep";
  NetworkSpec spec;
  TrainConfig train;
  DataSource data;
  HwConfig hw;
  std::vector<SurrogateKind> surrogates;
  std::vector<double> scales;
  std::vector<double> betas;
  std::vector<double> thetas;
  std::size_t repeats = 3;
  std::size_t budget = 500;

  void validate() const;
  /// Cartesian product, surrogate outermost and theta innermost.
  std::vector<SweepPoint> points() const;
  NetworkSpec spec_for(const SweepPoint& p) const;

  static SweepGrid from_key_values(const KeyValues& kv, const std::string& base_dir = ".");
  static SweepGrid load(const std::string& path);
  /// Canonical text with every value resolved; parses back to the same grid.
  std::string to_text() const;
};

/// Documented seed derivation: hash_string("<base_seed>|<axis values>|<repeat>"),
/// where hash_string is FNV-1a 64 finalized by SplitMix64.
std::uint64_t run_seed(std::uint64_t base_seed, const SweepPoint& p, std::size_t repeat);

/// One CSV row: a single run, or an aggregate (repeat = mean/min/max).
struct SweepRow {
  std::string point_key;
  SurrogateKind surrogate = SurrogateKind::fast_sigmoid;
  double scale = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  std::string repeat;
  std::uint64_t seed = 0;
  double test_acc = 0.0;
  double mean_fire_rate = 0.0;
  std::vector<double> layer_rates;
  double latency_s = 0.0;
  double dyn_energy_j = 0.0;
  double avg_power_w = 0.0;
  double fps = 0.0;
  double fps_per_w = 0.0;
  /// ok | diverged | invalid | aggregate
  std::string status;
  double wallclock_s = 0.0;

  bool ok() const { return status == "ok"; }
  bool aggregate() const { return status == "aggregate"; }
};

struct SweepResult {
  std::size_t spiking_layers = 0;
  /// Runs then aggregates, ordered by point index (then repeat, mean, min, max).
  std::vector<SweepRow> rows;
  std::size_t new_runs = 0;
  bool complete = true;

  const SweepRow* find(const std::string& point_key, const std::string& repeat = "mean") const;
  std::vector<SweepRow> means() const;
};

inline constexpr const char* kSweepSchema = "# snn-sweep-csv v1";

void write_sweep_csv(std::ostream& os, const SweepResult& r, bool with_wallclock = true);
SweepResult read_sweep_csv(std::istream& is);
std::string sweep_csv_header(std::size_t spiking_layers);

struct SweepOptions {
  /// Journal and final CSV go here; empty keeps everything in memory.
  std::string out_dir;
  std::size_t workers = 1;
  /// Reuse journaled runs of the same grid instead of retraining them.
  bool resume = true;
  /// Stop after this many new runs (leaves the sweep incomplete).
  std::optional<std::size_t> max_new_runs;
  std::function<void(const SweepRow&)> on_row;
};

/// Trains, evaluates and costs every (point, repeat). Runs whose training
/// diverges are recorded with status `diverged` and the sweep continues.
/// With an out_dir, each finished run is appended to `journal.csv` and the
/// complete, sorted table is written to `sweep.csv`.
SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opts = {});

/// A single (point, repeat) run against an already loaded split.
SweepRow run_point(const SweepGrid& grid, const SweepPoint& p, std::size_t repeat,
                   const DatasetSplit& data);

/// Appends mean/min/max rows per point over its successful runs.
void add_aggregates(SweepResult& r);

struct FrontierPoint {
  std::string key;
  double accuracy = 0.0;
  double fps_per_w = 0.0;
};

/// Non-dominated set under (max accuracy, max FPS/W); equal points are all kept.
std::vector<FrontierPoint> frontier(const std::vector<FrontierPoint>& points);
/// Frontier over the per-point mean rows.
std::vector<FrontierPoint> frontier(const SweepResult& r);

struct DeltaReport {
  /// A - B in accuracy units (fraction).
  double accuracy_delta = 0.0;
  /// (A - B) / B.
  double accuracy_delta_rel = 0.0;
  double latency_delta_rel = 0.0;
  double fps_per_w_ratio = 0.0;
};

DeltaReport compare_rows(const SweepRow& a, const SweepRow& b);
/// Compares the mean rows of two points; throws InvalidArgument on a missing key.
DeltaReport compare(const SweepResult& r, const std::string& key_a, const std::string& key_b);

/// Mean rows with the highest accuracy and the highest FPS/W (first wins ties).
const SweepRow& best_accuracy(const SweepResult& r);
const SweepRow& best_efficiency(const SweepResult& r);

}  // namespace snn
