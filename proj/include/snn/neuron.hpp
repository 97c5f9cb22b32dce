// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "snn/numerics.hpp"

namespace snn {

/// Leak factor and firing threshold of a LIF population.
struct LifParams {
  double beta = 0.25;
  double theta = 1.0;

  /// Throws InvalidArgument unless 0 <= beta <= 1 and theta > 0.
  void validate() const;
};

enum class SurrogateKind { arctangent, fast_sigmoid };

std::string to_string(SurrogateKind kind);
SurrogateKind parse_surrogate_kind(std::string_view text);

/// Smooth stand-in for the spike step used by the backward pass.
///
/// `scale` is alpha for arctangent and k for fast sigmoid. When `centered`
/// is set the surrogate is evaluated at (u - theta) so its peak slope sits
/// on the firing boundary; otherwise at the raw potential.
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::fast_sigmoid;
  double scale = 0.25;
  bool centered = true;

  void validate() const;
};

struct MembraneState {
  Tensor u;
};

struct LifStepResult {
  MembraneState state;
  Tensor spikes;
};

/// Binary spike map: 1 where u > theta (strict), else 0.
Tensor fire(const Tensor& u, double theta);

/// One leaky integrate-and-fire update with reset by subtraction:
///   s = [u > theta]
///   u' = beta * u + input_current - s * theta
/// `spikes` are decided on the potential before the update.
LifStepResult lif_step(const MembraneState& state, const Tensor& input_current,
                       const LifParams& params);

double surrogate_value(double u, const SurrogateSpec& spec);
double surrogate_slope(double u, const SurrogateSpec& spec);

/// arctangent: (1/pi) atan(pi u alpha / 2); fast sigmoid: u / (1 + k|u|).
Tensor surrogate_forward(const Tensor& u, const SurrogateSpec& spec);

/// arctangent: (alpha/2) / (1 + (pi u alpha / 2)^2); fast sigmoid: 1 / (1 + k|u|)^2.
Tensor surrogate_derivative(const Tensor& u, const SurrogateSpec& spec);

/// ds/du of the spike decision at potential `u`: the surrogate derivative at
/// (u - theta), or at u when the spec is not centered.
Tensor backward_spike_grad(const Tensor& u, const SurrogateSpec& spec, double theta);

}  // namespace snn
