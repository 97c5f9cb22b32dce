// SPDX-License-Identifier: Apache-2.0
#include "snn/learning.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "snn/error.hpp"
#include "snn/kvconfig.hpp"

namespace snn {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(std::string_view text) {
  if (text == "sgd") return OptimizerKind::sgd;
  if (text == "adam") return OptimizerKind::adam;
  throw InvalidArgument("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
    throw InvalidArgument("learning rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0,1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidArgument("adam betas must be in [0,1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam epsilon must be > 0");
  if (clip && !(clip_norm > 0.0)) throw InvalidArgument("clip norm must be > 0");
}

double GradientSet::global_norm() const {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.data()) sq += v * v;
  return std::sqrt(sq);
}

LossResult rate_cross_entropy_loss(const Tensor& counts, const std::vector<std::size_t>& labels,
                                   std::size_t timesteps) {
  if (counts.rank() != 2) throw InvalidArgument("loss expects counts [B, classes]");
  const std::size_t b = counts.dim(0), c = counts.dim(1);
  if (labels.size() != b) throw InvalidArgument("loss: label count does not match batch");
  if (timesteps == 0) throw InvalidArgument("loss: timesteps must be >= 1");
  require_finite(counts, "loss counts");
  const double inv_t = 1.0 / static_cast<double>(timesteps);
  LossResult r{0.0, Tensor(counts.shape())};
  std::vector<double> p(c);
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      throw InvalidArgument("label " + std::to_string(labels[i]) + " out of range for " +
                            std::to_string(c) + " classes");
    }
    double zmax = counts[i * c] * inv_t;
    for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, counts[i * c + j] * inv_t);
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(counts[i * c + j] * inv_t - zmax);
      denom += p[j];
    }
    for (std::size_t j = 0; j < c; ++j) p[j] /= denom;
    r.loss -= std::log(p[labels[i]]);
    for (std::size_t j = 0; j < c; ++j) {
      const double target = j == labels[i] ? 1.0 : 0.0;
      r.grad[i * c + j] = (p[j] - target) * inv_t / static_cast<double>(b);
    }
  }
  r.loss /= static_cast<double>(b);
  return r;
}

namespace {

void check_layer_grad(const Tensor& g, std::size_t layer, std::size_t t, std::string_view what) {
  for (double v : g.data()) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite " + std::string(what) + " gradient at layer " +
                         std::to_string(layer) + ", timestep " + std::to_string(t));
    }
  }
}

}  // namespace

GradientSet backward(const NetworkSpec& spec, const NetworkState& state,
                     const ForwardResult& fwd, const Tensor& grad_counts,
                     const BackwardOptions& opts) {
  const std::size_t n_layers = spec.layers.size();
  const std::size_t steps = spec.timesteps;
  if (fwd.layers.size() != n_layers) {
    throw InvalidArgument("backward needs a recorded forward pass");
  }
  if (grad_counts.shape() != fwd.counts.shape()) {
    throw InvalidArgument("backward: gradient shape does not match counts");
  }

  GradientSet out;
  for (const auto& w : state.weights) out.grads.push_back(Tensor::zeros_like(w));

  // dLoss/d(output of the current layer) per timestep; counts sum the last layer over time.
  std::vector<Tensor> grad_out(steps, grad_counts);
  const double theta = spec.lif.theta;
  const double beta = spec.lif.beta;

  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = spec.layers[li];
    const auto& trace = fwd.layers[li];
    std::vector<Tensor> grad_in(steps);
    const bool need_input_grad = li > 0;

    if (layer.kind == LayerKind::maxpool) {
      for (std::size_t t = 0; t < steps; ++t) {
        grad_in[t] = maxpool2d_backward(grad_out[t], trace.argmax[t], trace.input[t].shape());
      }
    } else {
      const Tensor& w = state.weights[li];
      const Tensor w_t = layer.kind == LayerKind::spiking_dense ? transpose(w) : Tensor();
      Tensor carry;
      for (std::size_t t = steps; t-- > 0;) {
        const Tensor& u = trace.membrane[t];
        Tensor slope = backward_spike_grad(u, spec.surrogate, theta);
        if (opts.surrogate_gain != 1.0) slope = scale(slope, opts.surrogate_gain);

        const auto& g = grad_out[t];
        const std::size_t batch = u.dim(0);
        Tensor du(u.shape());
        for (std::size_t k = 0; k < du.size(); ++k) {
          du[k] = g[k] * slope[k] + (carry.empty() ? 0.0 : carry[k]);
        }
        check_layer_grad(du, li, t, "membrane");

        // u[t] = beta u[t-1] + I[t] - theta s[t-1], with s[t-1] = fire(u[t-1]).
        carry = Tensor(u.shape());
        for (std::size_t k = 0; k < du.size(); ++k) carry[k] = beta * du[k];
        if (!opts.detach_reset && t > 0) {
          const Tensor prev_slope = [&] {
            Tensor s = backward_spike_grad(trace.membrane[t - 1], spec.surrogate, theta);
            return opts.surrogate_gain != 1.0 ? scale(s, opts.surrogate_gain) : s;
          }();
          for (std::size_t k = 0; k < du.size(); ++k) carry[k] -= theta * prev_slope[k] * du[k];
        }

        const Tensor& x = trace.input[t];
        if (layer.kind == LayerKind::spiking_conv) {
          axpy(out.grads[li], 1.0, conv2d_backward_kernels(x, du, w.shape()));
          if (need_input_grad) grad_in[t] = conv2d_backward_input(du, w, x.shape());
        } else {
          const Tensor flat = x.reshaped({batch, x.size() / batch});
          const Tensor du2 = du.reshaped({batch, du.size() / batch});
          axpy(out.grads[li], 1.0, matmul(transpose(flat), du2));
          if (need_input_grad) grad_in[t] = matmul(du2, w_t).reshaped(x.shape());
        }
        if (need_input_grad) check_layer_grad(grad_in[t], li, t, "input");
      }
      check_layer_grad(out.grads[li], li, 0, "weight");
    }
    grad_out = std::move(grad_in);
  }
  return out;
}

BpttResult bptt(const NetworkSpec& spec, const NetworkState& state, const Tensor& inputs,
                const std::vector<std::size_t>& labels, const BackwardOptions& opts) {
  auto fwd = forward(spec, state, inputs, {true, opts.activation});
  auto loss = rate_cross_entropy_loss(fwd.counts, labels, spec.timesteps);
  BpttResult r;
  r.loss = loss.loss;
  r.grads = backward(spec, state, fwd, loss.grad, opts);
  r.counts = std::move(fwd.counts);
  return r;
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double base_lr) {
  if (total_epochs == 0 || epoch >= total_epochs) {
    throw InvalidArgument("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(total_epochs) + ")");
  }
  const double phase = std::numbers::pi * static_cast<double>(epoch) /
                       static_cast<double>(total_epochs);
  return 0.5 * base_lr * (1.0 + std::cos(phase));
}

double clip_global_norm(GradientSet& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& g : grads.grads)
      for (auto& v : g.data()) v *= f;
  }
  return norm;
}

Optimizer::Optimizer(const TrainConfig& cfg, const NetworkState& shape_like) : cfg_(cfg) {
  for (const auto& w : shape_like.weights) {
    first_.push_back(Tensor::zeros_like(w));
    second_.push_back(Tensor::zeros_like(w));
  }
}

void Optimizer::step(NetworkState& state, const GradientSet& grads, double lr) {
  if (grads.grads.size() != state.weights.size() || first_.size() != state.weights.size()) {
    throw InvalidArgument("optimizer: gradient set does not match the network");
  }
  ++steps_;
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < state.weights.size(); ++i) {
    auto& w = state.weights[i];
    const auto& g = grads.grads[i];
    require_same_shape(w, g, "optimizer step");
    auto& m = first_[i];
    auto& v = second_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (cfg_.optimizer == OptimizerKind::sgd) {
        m[k] = cfg_.momentum * m[k] + g[k];
        w[k] -= lr * m[k];
      } else {
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.adam_eps);
      }
    }
  }
}

namespace {

std::vector<std::size_t> range_indices(std::size_t begin, std::size_t end,
                                       const std::vector<std::size_t>& order) {
  return {order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::size_t correct(const Tensor& counts, const std::vector<std::size_t>& labels) {
  const auto pred = predict(counts);
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) n += pred[i] == labels[i];
  return n;
}

void check_input_shape(const NetworkSpec& spec, const LabeledDataset& ds) {
  const auto& s = ds.images.shape();
  if (s.size() != 4 || s[1] != spec.input[0] || s[2] != spec.input[1] || s[3] != spec.input[2]) {
    throw InvalidArgument("dataset images " + shape_str(s) + " do not match network input " +
                          shape_str(spec.input_shape()));
  }
  if (ds.classes != spec.classes()) {
    throw InvalidArgument("dataset has " + std::to_string(ds.classes) +
                          " classes but the network outputs " + std::to_string(spec.classes()));
  }
}

constexpr std::uint64_t kInitStream = 0x696e6974;    // "init"
constexpr std::uint64_t kOrderStream = 0x6f72646572;  // "order"
constexpr std::uint64_t kEncodeStream = 0x656e63;     // "enc"
constexpr std::uint64_t kEvalStream = 0x6576616c;     // "eval"

}  // namespace

EvalResult evaluate(const NetworkSpec& spec, const NetworkState& state, const LabeledDataset& ds,
                    EncoderKind encoder, std::size_t batch_size, std::uint64_t seed) {
  ds.validate();
  check_input_shape(spec, ds);
  if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  Rng rng(mix64(seed ^ kEvalStream));
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  EvalResult r;
  std::size_t hits = 0;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const auto batch = ds.subset(range_indices(start, std::min(ds.size(), start + batch_size), order));
    const auto input = encode(batch.images, {encoder, spec.timesteps}, rng);
    const auto fwd = forward(spec, state, input, {true, Activation::hard_threshold});
    hits += correct(fwd.counts, batch.labels);
    loss_sum += rate_cross_entropy_loss(fwd.counts, batch.labels, spec.timesteps).loss *
                static_cast<double>(batch.size());
    r.sparsity.merge(count_spikes(spec, fwd.layers));
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(ds.size());
  r.loss = loss_sum / static_cast<double>(ds.size());
  return r;
}

NetworkState initial_state(const NetworkSpec& spec, std::uint64_t seed) {
  Rng rng(mix64(seed ^ kInitStream));
  return init_state(spec, rng);
}

TrainResult train(const NetworkSpec& spec, const DatasetSplit& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  spec.validate();
  cfg.validate();
  data.train.validate();
  data.test.validate();
  check_input_shape(spec, data.train);
  check_input_shape(spec, data.test);

  TrainResult result{initial_state(spec, cfg.seed), {}};
  Optimizer opt(cfg, result.state);
  Rng order_rng(mix64(cfg.seed ^ kOrderStream));
  Rng encode_rng(mix64(cfg.seed ^ kEncodeStream));
  const BackwardOptions bopts{cfg.detach_reset, 1.0, Activation::hard_threshold};

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch;
    m.lr = cosine_lr(epoch, cfg.epochs, cfg.base_lr);
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const auto batch = data.train.subset(
          range_indices(start, std::min(order.size(), start + cfg.batch_size), order));
      const auto input = encode(batch.images, {cfg.encoder, spec.timesteps}, encode_rng);
      BpttResult step;
      try {
        step = bptt(spec, result.state, input, batch.labels, bopts);
      } catch (const NumericError& e) {
        throw NumericError("divergence at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + ": " + e.what());
      }
      if (!std::isfinite(step.loss)) {
        throw NumericError("divergence at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no) + ": loss is not finite");
      }
      if (cfg.clip) clip_global_norm(step.grads, cfg.clip_norm);
      opt.step(result.state, step.grads, m.lr);
      loss_sum += step.loss * static_cast<double>(batch.size());
      hits += correct(step.counts, batch.labels);
    }
    m.train_loss = loss_sum / static_cast<double>(order.size());
    m.train_acc = static_cast<double>(hits) / static_cast<double>(order.size());
    const auto ev = evaluate(spec, result.state, data.test, cfg.encoder, cfg.batch_size, cfg.seed);
    m.test_acc = ev.accuracy;
    m.test_sparsity = ev.sparsity;
    m.mean_fire_rate = ev.sparsity.rate();
    m.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_epoch) on_epoch(m);
    result.metrics.push_back(std::move(m));
  }
  return result;
}

void write_metrics_header(std::ostream& os) {
  os << "epoch,lr,train_loss,train_acc,test_acc,mean_fire_rate,wallclock_s\n";
}

void write_metrics_row(std::ostream& os, const EpochMetrics& m, bool with_wallclock) {
  os << m.epoch << ',' << format_double(m.lr) << ',' << format_double(m.train_loss) << ','
     << format_double(m.train_acc) << ',' << format_double(m.test_acc) << ','
     << format_double(m.mean_fire_rate) << ',';
  if (with_wallclock) os << format_double(m.wallclock_s);
  os << '\n';
}

}  // namespace snn
