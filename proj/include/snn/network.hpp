// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "snn/neuron.hpp"
#include "snn/numerics.hpp"

namespace snn {

enum class LayerKind { spiking_conv, maxpool, spiking_dense };

std::string to_string(LayerKind kind);

/// One token of an architecture string.
///   conv:  `units` filters of `window` x `window`   (token `<F>C<Y>`)
///   pool:  `window` x `window` max pooling           (token `P<Z>` / `MP<Z>`)
///   dense: `units` output neurons                    (token `<N>`)
struct LayerSpec {
  LayerKind kind = LayerKind::spiking_dense;
  std::size_t units = 0;
  std::size_t window = 0;

  static LayerSpec conv(std::size_t filters, std::size_t kernel) {
    return {LayerKind::spiking_conv, filters, kernel};
  }
  static LayerSpec pool(std::size_t window) { return {LayerKind::maxpool, 0, window}; }
  static LayerSpec dense(std::size_t units) { return {LayerKind::spiking_dense, units, 0}; }

  bool spiking() const { return kind != LayerKind::maxpool; }
  bool operator==(const LayerSpec&) const = default;
};

/// Parses e.g. "32C3-P2-32C3-MP2-256-10". Both `P` and `MP` mean max pooling.
std::vector<LayerSpec> parse_arch(std::string_view text);
std::string format_arch(const std::vector<LayerSpec>& layers);

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  /// Input (channels, height, width).
  std::array<std::size_t, 3> input{1, 1, 1};
  std::size_t timesteps = 10;
  LifParams lif;
  SurrogateSpec surrogate;

  /// Per-sample output shape of every layer ((C,H,W) for conv/pool, (N) for dense).
  /// Throws InvalidArgument on any incompatibility.
  std::vector<Shape> layer_shapes() const;
  Shape input_shape() const { return {input[0], input[1], input[2]}; }
  std::size_t classes() const;
  void validate() const;

  std::string to_text() const;
  static NetworkSpec from_text(std::string_view text);

  bool operator==(const NetworkSpec& o) const;
};

/// Trainable parameters, one tensor per layer (empty for pooling layers).
/// Conv kernels are [F,C,Y,Y]; dense weights are [in, out].
struct NetworkState {
  std::vector<Tensor> weights;

  bool operator==(const NetworkState&) const = default;
};

/// Kaiming-uniform fan-in init: U(-b, b), b = sqrt(6 / fan_in).
NetworkState init_state(const NetworkSpec& spec, Rng& rng);
/// All weights zero, shapes from `spec`.
NetworkState zero_state(const NetworkSpec& spec);

enum class Activation {
  /// Emit the hard threshold spike (normal operation).
  hard_threshold,
  /// Emit surrogate_forward of the membrane instead of the spike while the
  /// reset still uses the hard spike. Gradient-check tooling only.
  surrogate_relaxed,
};

struct ForwardOptions {
  bool record = true;
  Activation activation = Activation::hard_threshold;
};

/// Per-layer recording of one forward pass, indexed by timestep.
struct LayerTrace {
  std::vector<Tensor> input;     // what the layer consumed at t
  std::vector<Tensor> membrane;  // spiking layers: potential after the update at t
  std::vector<Tensor> output;    // what the layer emitted at t
  std::vector<std::vector<std::size_t>> argmax;  // pooling layers only
};

struct ForwardResult {
  /// Final-layer output summed over time, [B, classes].
  Tensor counts;
  /// Empty unless ForwardOptions::record.
  std::vector<LayerTrace> layers;
};

/// Time-unrolled forward pass over input [T,B,C,H,W].
///
/// Every timestep advances all layers in order. A spiking layer computes its
/// input current from the previous layer's same-step output, applies
/// lif_step, and emits fire(u_new) downstream. That emitted spike is the one
/// lif_step subtracts on the following step. Membranes start at zero.
ForwardResult forward(const NetworkSpec& spec, const NetworkState& state, const Tensor& input,
                      const ForwardOptions& opts = {});

/// Argmax over classes of the count tensor; ties resolve to the lowest class.
std::vector<std::size_t> predict(const Tensor& counts);

struct LayerSparsity {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::spiking_dense;
  double spikes = 0.0;
  double slots = 0.0;

  double rate() const { return slots > 0.0 ? spikes / slots : 0.0; }
};

/// Spike statistics accumulated over `samples` inferences.
struct SparsityReport {
  std::vector<LayerSparsity> layers;
  std::size_t samples = 0;
  /// Nonzero slots of the network input (events entering the first layer).
  double input_events = 0.0;
  double input_slots = 0.0;

  /// Spiking layers only; aggregate = total spikes / total slots.
  double total_spikes() const;
  double total_slots() const;
  double rate() const;
  const LayerSparsity& at_layer(std::size_t layer) const;

  /// Accumulates counts of another report over the same network.
  void merge(const SparsityReport& other);
};

/// Throws InvalidArgument when the trace is empty.
SparsityReport count_spikes(const NetworkSpec& spec, const std::vector<LayerTrace>& recorded);

/// Binary checkpoint container (little-endian):
///   "SNNB" u8:version u32:len spec-text u64:seed u32:count
///   count x { u32:rank rank x u64:dim numel x f64 }
/// Only spiking layers contribute tensors, in layer order.
struct Checkpoint {
  NetworkSpec spec;
  NetworkState state;
  std::uint64_t seed = 0;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace snn
