// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "snn/data.hpp"
#include "snn/network.hpp"

namespace snn {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 25;
  std::size_t batch_size = 32;
  double base_lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double momentum = 0.0;  // sgd only
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  /// Clip the global gradient norm to `clip_norm` before each step.
  bool clip = false;
  double clip_norm = 10.0;
  EncoderKind encoder = EncoderKind::direct_current;
  bool detach_reset = true;

  void validate() const;
};

/// One gradient tensor per weight tensor (empty for pooling layers).
struct GradientSet {
  std::vector<Tensor> grads;

  double global_norm() const;
};

struct LossResult {
  double loss = 0.0;
  /// dLoss/dCounts, same shape as the counts.
  Tensor grad;
};

/// Softmax cross-entropy on counts / timesteps, averaged over the batch.
LossResult rate_cross_entropy_loss(const Tensor& counts, const std::vector<std::size_t>& labels,
                                   std::size_t timesteps);

struct BackwardOptions {
  /// Treat the reset term's spike as a constant (no gradient through it).
  bool detach_reset = true;
  /// Multiplies every surrogate derivative; 0 cuts all spike gradients.
  double surrogate_gain = 1.0;
  Activation activation = Activation::hard_threshold;
};

/// Reverse-time accumulation through a recorded forward pass, given dLoss/dCounts.
GradientSet backward(const NetworkSpec& spec, const NetworkState& state,
                     const ForwardResult& fwd, const Tensor& grad_counts,
                     const BackwardOptions& opts = {});

struct BpttResult {
  double loss = 0.0;
  GradientSet grads;
  Tensor counts;
};

/// Forward with recording, rate cross-entropy loss, then backward().
BpttResult bptt(const NetworkSpec& spec, const NetworkState& state, const Tensor& inputs,
                const std::vector<std::size_t>& labels, const BackwardOptions& opts = {});

/// 0.5 * base_lr * (1 + cos(pi * epoch / total_epochs)), no restarts.
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double base_lr);

/// Scales all gradients so the global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(GradientSet& grads, double max_norm);

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const NetworkState& shape_like);

  void step(NetworkState& state, const GradientSet& grads, double lr);
  std::size_t steps() const { return steps_; }

 private:
  TrainConfig cfg_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  std::size_t steps_ = 0;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  SparsityReport sparsity;
};

/// Inference over a whole dataset in fixed order. Bernoulli encoding draws
/// from a generator seeded by `seed`, so repeated calls agree.
EvalResult evaluate(const NetworkSpec& spec, const NetworkState& state, const LabeledDataset& ds,
                    EncoderKind encoder, std::size_t batch_size, std::uint64_t seed);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double mean_fire_rate = 0.0;
  SparsityReport test_sparsity;
  double wallclock_s = 0.0;
};

struct TrainResult {
  NetworkState state;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Seeded weight init.
NetworkState initial_state(const NetworkSpec& spec, std::uint64_t seed);

/// Mini-batch training with the cosine schedule stepped once per epoch.
/// Deterministic for a given seed. Throws NumericError naming the epoch and
/// batch when the loss or a gradient becomes non-finite.
TrainResult train(const NetworkSpec& spec, const DatasetSplit& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// `epoch,lr,train_loss,train_acc,test_acc,mean_fire_rate,wallclock_s`
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const EpochMetrics& m, bool with_wallclock = true);

}  // namespace snn
