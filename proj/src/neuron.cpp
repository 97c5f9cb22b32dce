// SPDX-License-Identifier: Apache-2.0
#include "snn/neuron.hpp"

#include <cmath>
#include <numbers>

#include "snn/error.hpp"

namespace snn {

void LifParams::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw InvalidArgument("beta must satisfy 0 <= beta <= 1, got " + std::to_string(beta));
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InvalidArgument("theta must satisfy theta > 0, got " + std::to_string(theta));
  }
}

std::string to_string(SurrogateKind kind) {
  return kind == SurrogateKind::arctangent ? "arctangent" : "fast_sigmoid";
}

SurrogateKind parse_surrogate_kind(std::string_view text) {
  if (text == "arctangent" || text == "atan") return SurrogateKind::arctangent;
  if (text == "fast_sigmoid" || text == "fast-sigmoid") return SurrogateKind::fast_sigmoid;
  throw InvalidArgument("unknown surrogate '" + std::string(text) +
                        "' (expected arctangent or fast_sigmoid)");
}

void SurrogateSpec::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("surrogate scale must be > 0, got " + std::to_string(scale));
  }
}

Tensor fire(const Tensor& u, double theta) {
  Tensor s(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) s[i] = u[i] > theta ? 1.0 : 0.0;
  return s;
}

LifStepResult lif_step(const MembraneState& state, const Tensor& input_current,
                       const LifParams& params) {
  params.validate();
  require_same_shape(state.u, input_current, "lif_step");
  require_finite(state.u, "lif_step membrane");
  require_finite(input_current, "lif_step input");
  LifStepResult r{MembraneState{Tensor(state.u.shape())}, fire(state.u, params.theta)};
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    r.state.u[i] = params.beta * state.u[i] + input_current[i] - r.spikes[i] * params.theta;
  }
  require_finite(r.state.u, "lif_step");
  return r;
}

double surrogate_value(double u, const SurrogateSpec& spec) {
  if (spec.kind == SurrogateKind::arctangent) {
    return std::atan(std::numbers::pi * u * spec.scale / 2.0) / std::numbers::pi;
  }
  return u / (1.0 + spec.scale * std::abs(u));
}

double surrogate_slope(double u, const SurrogateSpec& spec) {
  if (spec.kind == SurrogateKind::arctangent) {
    const double z = std::numbers::pi * u * spec.scale / 2.0;
    return (spec.scale / 2.0) / (1.0 + z * z);
  }
  const double d = 1.0 + spec.scale * std::abs(u);
  return 1.0 / (d * d);
}

namespace {

template <typename F>
Tensor map_checked(const Tensor& u, const SurrogateSpec& spec, std::string_view what, F f) {
  spec.validate();
  require_finite(u, what);
  Tensor out(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i]);
  return out;
}

}  // namespace

Tensor surrogate_forward(const Tensor& u, const SurrogateSpec& spec) {
  return map_checked(u, spec, "surrogate_forward",
                     [&](double x) { return surrogate_value(x, spec); });
}

Tensor surrogate_derivative(const Tensor& u, const SurrogateSpec& spec) {
  return map_checked(u, spec, "surrogate_derivative",
                     [&](double x) { return surrogate_slope(x, spec); });
}

Tensor backward_spike_grad(const Tensor& u, const SurrogateSpec& spec, double theta) {
  const double shift = spec.centered ? theta : 0.0;
  return map_checked(u, spec, "backward_spike_grad",
                     [&](double x) { return surrogate_slope(x - shift, spec); });
}

}  // namespace snn
