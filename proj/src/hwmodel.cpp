// SPDX-License-Identifier: Apache-2.0
#include "snn/hwmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "snn/error.hpp"

namespace snn {

void HwConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("hw config: ") + name + " must be > 0");
    }
  };
  const auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("hw config: ") + name + " must be >= 0");
    }
  };
  positive(clock_hz, "clock_hz");
  positive(cycles_per_synop, "cycles_per_synop");
  non_negative(cycles_per_update, "cycles_per_update");
  non_negative(static_power_w, "static_power_w");
  non_negative(energy_per_synop_j, "energy_per_synop_j");
  non_negative(energy_per_update_j, "energy_per_update_j");
  if (lanes == 0) throw InvalidArgument("hw config: lanes must be > 0");
  for (auto l : layer_lanes)
    if (l == 0) throw InvalidArgument("hw config: layer_lanes entries must be > 0");
}

std::size_t HwConfig::lanes_for(std::size_t spiking_layer) const {
  if (layer_lanes.empty()) return lanes;
  if (spiking_layer >= layer_lanes.size()) {
    throw InvalidArgument("hw config: layer_lanes has no entry for spiking layer " +
                          std::to_string(spiking_layer));
  }
  return layer_lanes[spiking_layer];
}

HwConfig HwConfig::from_key_values(const KeyValues& kv) {
  const auto unknown = kv.unknown_keys({"clock_hz", "cycles_per_synop", "cycles_per_update",
                                        "static_power_w", "energy_per_synop_j",
                                        "energy_per_update_j", "lanes", "layer_lanes"});
  if (!unknown.empty()) throw InvalidArgument("hw config: unknown key '" + unknown.front() + "'");
  HwConfig hw;
  hw.clock_hz = kv.get_double("clock_hz", hw.clock_hz);
  hw.cycles_per_synop = kv.get_double("cycles_per_synop", hw.cycles_per_synop);
  hw.cycles_per_update = kv.get_double("cycles_per_update", hw.cycles_per_update);
  hw.static_power_w = kv.get_double("static_power_w", hw.static_power_w);
  hw.energy_per_synop_j = kv.get_double("energy_per_synop_j", hw.energy_per_synop_j);
  hw.energy_per_update_j = kv.get_double("energy_per_update_j", hw.energy_per_update_j);
  hw.lanes = kv.get_uint("lanes", hw.lanes);
  if (kv.has("layer_lanes")) {
    for (const auto& s : split(kv.get_string("layer_lanes"), ','))
      hw.layer_lanes.push_back(parse_uint(s, "layer_lanes"));
  }
  hw.validate();
  return hw;
}

HwConfig HwConfig::load(const std::string& path) {
  const auto kv = KeyValues::load(path);
  try {
    return from_key_values(kv);
  } catch (const InvalidArgument& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string HwConfig::to_text() const {
  std::string s;
  s += "clock_hz = " + format_double(clock_hz) + "\n";
  s += "cycles_per_synop = " + format_double(cycles_per_synop) + "\n";
  s += "cycles_per_update = " + format_double(cycles_per_update) + "\n";
  s += "static_power_w = " + format_double(static_power_w) + "\n";
  s += "energy_per_synop_j = " + format_double(energy_per_synop_j) + "\n";
  s += "energy_per_update_j = " + format_double(energy_per_update_j) + "\n";
  s += "lanes = " + std::to_string(lanes) + "\n";
  if (!layer_lanes.empty()) {
    s += "layer_lanes = ";
    for (std::size_t i = 0; i < layer_lanes.size(); ++i)
      s += (i ? "," : "") + std::to_string(layer_lanes[i]);
    s += "\n";
  }
  return s;
}

namespace {

double lanes_of(const LayerWorkload& w, const HwConfig& hw) {
  return static_cast<double>(w.lanes ? w.lanes : hw.lanes);
}

double update_cycles(const LayerWorkload& w, const HwConfig& hw) {
  return (w.neurons + w.pool_slots) * static_cast<double>(w.timesteps) * hw.cycles_per_update /
         lanes_of(w, hw);
}

double layer_energy(const LayerWorkload& w, const HwConfig& hw) {
  return w.incoming_spikes * w.fanout * hw.energy_per_synop_j +
         (w.neurons + w.pool_slots) * static_cast<double>(w.timesteps) * hw.energy_per_update_j;
}

}  // namespace

double event_cycles(const LayerWorkload& w, const HwConfig& hw) {
  return std::ceil(w.incoming_spikes * w.fanout * hw.cycles_per_synop / lanes_of(w, hw));
}

double layer_cycles(const LayerWorkload& w, const HwConfig& hw) {
  return event_cycles(w, hw) + update_cycles(w, hw);
}

double layer_fanout(const LayerSpec& layer, const Shape& in) {
  switch (layer.kind) {
    case LayerKind::spiking_dense: return static_cast<double>(layer.units);
    case LayerKind::spiking_conv: {
      // Total synapses F*C*K*K*Ho*Wo shared by C*H*W input neurons.
      const std::size_t ho = conv_output_extent(in[1], layer.window, 1, 0);
      const std::size_t wo = conv_output_extent(in[2], layer.window, 1, 0);
      const double taps = static_cast<double>(layer.units * layer.window * layer.window * ho * wo);
      return taps / static_cast<double>(in[1] * in[2]);
    }
    case LayerKind::maxpool: return 0.0;
  }
  return 0.0;
}

std::vector<LayerWorkload> workloads(const NetworkSpec& spec, const SparsityReport& sparsity,
                                     const HwConfig& hw) {
  spec.validate();
  if (sparsity.samples == 0) throw InvalidArgument("sparsity report covers no samples");
  const auto shapes = spec.layer_shapes();
  const double n = static_cast<double>(sparsity.samples);
  std::vector<LayerWorkload> out;
  double events = sparsity.input_events / n;
  double pool_slots = 0.0;
  Shape in = spec.input_shape();
  std::size_t spiking_index = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const LayerSparsity* entry = nullptr;
    for (const auto& l : sparsity.layers)
      if (l.layer == i) entry = &l;
    if (entry == nullptr || entry->kind != layer.kind) {
      throw InvalidArgument("sparsity report is missing layer " + std::to_string(i) + " (" +
                            to_string(layer.kind) + ")");
    }
    if (layer.kind == LayerKind::maxpool) {
      pool_slots += static_cast<double>(shape_numel(in));
    } else {
      LayerWorkload w;
      w.incoming_spikes = events;
      w.fanout = layer_fanout(layer, in);
      w.neurons = static_cast<double>(shape_numel(shapes[i]));
      w.pool_slots = pool_slots;
      w.timesteps = spec.timesteps;
      w.lanes = hw.lanes_for(spiking_index++);
      out.push_back(w);
      pool_slots = 0.0;
    }
    events = entry->spikes / n;
    in = shapes[i];
  }
  return out;
}

HwCostReport estimate_workloads(const std::vector<LayerWorkload>& layers, const HwConfig& hw) {
  hw.validate();
  HwCostReport r;
  double slowest = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerCost c{i, layers[i], layer_cycles(layers[i], hw), layer_energy(layers[i], hw)};
    r.total_cycles += c.cycles;
    r.dynamic_energy_j += c.dynamic_energy_j;
    slowest = std::max(slowest, c.cycles);
    r.layers.push_back(c);
  }
  if (!(r.total_cycles > 0.0)) throw InvalidArgument("hw estimate: workload has zero cycles");
  r.latency_s = r.total_cycles / hw.clock_hz;
  r.avg_power_w = hw.static_power_w + r.dynamic_energy_j / r.latency_s;
  r.fps = 1.0 / r.latency_s;
  r.fps_per_w = r.fps / r.avg_power_w;
  r.pipeline_fps = hw.clock_hz / slowest;
  // Steady state: one inference's dynamic energy per frame interval.
  const double pipeline_power = hw.static_power_w + r.dynamic_energy_j * r.pipeline_fps;
  r.pipeline_fps_per_w = r.pipeline_fps / pipeline_power;
  return r;
}

HwCostReport estimate(const NetworkSpec& spec, const SparsityReport& sparsity,
                      const HwConfig& hw) {
  hw.validate();
  auto r = estimate_workloads(workloads(spec, sparsity, hw), hw);
  std::size_t k = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].spiking()) r.layers[k++].layer = i;
  return r;
}

void write_cost_csv_header(std::ostream& os) {
  os << "total_cycles,latency_s,dyn_energy_j,avg_power_w,fps,fps_per_w,pipeline_fps,"
        "pipeline_fps_per_w\n";
}

void write_cost_csv_row(std::ostream& os, const HwCostReport& r) {
  os << format_double(r.total_cycles) << ',' << format_double(r.latency_s) << ','
     << format_double(r.dynamic_energy_j) << ',' << format_double(r.avg_power_w) << ','
     << format_double(r.fps) << ',' << format_double(r.fps_per_w) << ','
     << format_double(r.pipeline_fps) << ',' << format_double(r.pipeline_fps_per_w) << '\n';
}

void print_cost_table(std::ostream& os, const HwCostReport& r, bool pipeline) {
  char buf[256];
  os << "layer  in_spikes/inf      fanout    neurons  pool_slots        cycles   dyn_energy_J\n";
  for (const auto& c : r.layers) {
    std::snprintf(buf, sizeof buf, "%5zu %14.2f %11.3f %10.0f %11.0f %13.1f %14.4e\n", c.layer,
                  c.workload.incoming_spikes, c.workload.fanout, c.workload.neurons,
                  c.workload.pool_slots, c.cycles, c.dynamic_energy_j);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "total cycles %.1f | latency %.6e s | dyn energy %.4e J | power %.4f W\n"
                "FPS %.2f | FPS/W %.2f\n",
                r.total_cycles, r.latency_s, r.dynamic_energy_j, r.avg_power_w, r.fps,
                r.fps_per_w);
  os << buf;
  if (pipeline) {
    std::snprintf(buf, sizeof buf, "pipelined steady state: FPS %.2f | FPS/W %.2f\n",
                  r.pipeline_fps, r.pipeline_fps_per_w);
    os << buf;
  }
}

}  // namespace snn
