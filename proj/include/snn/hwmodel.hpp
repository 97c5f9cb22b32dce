// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "snn/kvconfig.hpp"
#include "snn/network.hpp"

namespace snn {

/// Constants of the modeled accelerator, in SI units.
///
/// Config file keys (all optional, defaults below):
///   clock_hz, cycles_per_synop, cycles_per_update, static_power_w,
///   energy_per_synop_j, energy_per_update_j, lanes, layer_lanes
/// `layer_lanes` is a comma list with one entry per spiking layer and
/// overrides `lanes`.
struct HwConfig {
  double clock_hz = 200e6;
  double cycles_per_synop = 1.0;
  double cycles_per_update = 1.0;
  double static_power_w = 0.5;
  double energy_per_synop_j = 5e-12;
  double energy_per_update_j = 2e-12;
  std::size_t lanes = 16;
  std::vector<std::size_t> layer_lanes;

  /// Clock, synop cycles and lanes must be > 0; the rest >= 0.
  void validate() const;
  std::size_t lanes_for(std::size_t spiking_layer) const;

  static HwConfig from_key_values(const KeyValues& kv);
  static HwConfig load(const std::string& path);
  std::string to_text() const;
};

/// Work one spiking layer does per inference.
struct LayerWorkload {
  double incoming_spikes = 0.0;
  /// Synapses touched per incoming spike, averaged exactly over input positions.
  double fanout = 0.0;
  double neurons = 0.0;
  /// Comparisons of a pooling stage feeding this layer, charged like updates.
  double pool_slots = 0.0;
  std::size_t timesteps = 1;
  /// 0 means HwConfig::lanes.
  std::size_t lanes = 0;
};

/// ceil(spikes * fanout * cycles_per_synop / lanes)
///   + (neurons + pool_slots) * T * cycles_per_update / lanes
double layer_cycles(const LayerWorkload& w, const HwConfig& hw);

/// Event term of layer_cycles alone.
double event_cycles(const LayerWorkload& w, const HwConfig& hw);

/// Average synapses reached by one input spike of `layer` given its input shape.
double layer_fanout(const LayerSpec& layer, const Shape& input_shape);

struct LayerCost {
  std::size_t layer = 0;
  LayerWorkload workload;
  double cycles = 0.0;
  double dynamic_energy_j = 0.0;
};

struct HwCostReport {
  std::vector<LayerCost> layers;
  double total_cycles = 0.0;
  double latency_s = 0.0;
  double dynamic_energy_j = 0.0;
  double avg_power_w = 0.0;
  double fps = 0.0;
  double fps_per_w = 0.0;
  /// Steady-state figures when layers overlap: clock / slowest layer.
  double pipeline_fps = 0.0;
  double pipeline_fps_per_w = 0.0;
};

/// Workloads derived from the layer geometry of `spec` and the per-inference
/// spike counts in `sparsity`.
std::vector<LayerWorkload> workloads(const NetworkSpec& spec, const SparsityReport& sparsity,
                                     const HwConfig& hw);

/// Layers run in lock-step sequence, so latency is the sum of layer cycles
/// over the clock. Power = static + dynamic energy / latency.
HwCostReport estimate(const NetworkSpec& spec, const SparsityReport& sparsity,
                      const HwConfig& hw);

/// Cost of explicit workloads (one per spiking layer).
HwCostReport estimate_workloads(const std::vector<LayerWorkload>& layers, const HwConfig& hw);

void write_cost_csv_header(std::ostream& os);
void write_cost_csv_row(std::ostream& os, const HwCostReport& r);
void print_cost_table(std::ostream& os, const HwCostReport& r, bool pipeline);

}  // namespace snn
