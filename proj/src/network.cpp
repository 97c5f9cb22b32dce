// SPDX-License-Identifier: Apache-2.0
#include "snn/network.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "snn/error.hpp"
#include "snn/kvconfig.hpp"

namespace snn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::spiking_conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::spiking_dense: return "dense";
  }
  return "?";
}

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::size_t positive_dim(std::string_view digits, std::string_view token) {
  if (!all_digits(digits)) {
    throw InvalidArgument("unknown architecture token '" + std::string(token) + "'");
  }
  const auto v = parse_uint(digits, "architecture token");
  if (v == 0) {
    throw InvalidArgument("zero dimension in architecture token '" + std::string(token) + "'");
  }
  return static_cast<std::size_t>(v);
}

LayerSpec parse_token(std::string_view tok) {
  if (tok.starts_with("MP")) return LayerSpec::pool(positive_dim(tok.substr(2), tok));
  if (tok.starts_with("P")) return LayerSpec::pool(positive_dim(tok.substr(1), tok));
  if (const auto c = tok.find('C'); c != std::string_view::npos) {
    return LayerSpec::conv(positive_dim(tok.substr(0, c), tok),
                           positive_dim(tok.substr(c + 1), tok));
  }
  return LayerSpec::dense(positive_dim(tok, tok));
}

}  // namespace

std::vector<LayerSpec> parse_arch(std::string_view text) {
  const auto trimmed = trim(text);
  if (trimmed.empty()) throw InvalidArgument("empty architecture string");
  std::vector<LayerSpec> layers;
  for (const auto& tok : split(trimmed, '-')) {
    if (tok.empty()) throw InvalidArgument("empty token in architecture '" + trimmed + "'");
    auto layer = parse_token(tok);
    if (!layers.empty() && layers.back().kind == LayerKind::spiking_dense &&
        layer.kind != LayerKind::spiking_dense) {
      throw InvalidArgument("architecture '" + trimmed + "': " + to_string(layer.kind) +
                            " layer cannot follow a dense layer");
    }
    layers.push_back(layer);
  }
  return layers;
}

std::string format_arch(const std::vector<LayerSpec>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += '-';
    switch (l.kind) {
      case LayerKind::spiking_conv:
        out += std::to_string(l.units) + "C" + std::to_string(l.window);
        break;
      case LayerKind::maxpool: out += "MP" + std::to_string(l.window); break;
      case LayerKind::spiking_dense: out += std::to_string(l.units); break;
    }
  }
  return out;
}

std::vector<Shape> NetworkSpec::layer_shapes() const {
  std::vector<Shape> shapes;
  Shape cur = input_shape();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const auto where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::spiking_conv:
        if (cur.size() != 3) throw InvalidArgument(where + ": conv needs a spatial input");
        try {
          cur = {l.units, conv_output_extent(cur[1], l.window, 1, 0),
                 conv_output_extent(cur[2], l.window, 1, 0)};
        } catch (const InvalidArgument& e) {
          throw InvalidArgument(where + ": " + e.what());
        }
        break;
      case LayerKind::maxpool:
        if (cur.size() != 3) throw InvalidArgument(where + ": pooling needs a spatial input");
        if (cur[1] % l.window != 0 || cur[2] % l.window != 0) {
          throw InvalidArgument(where + ": input " + shape_str(cur) +
                                " not divisible by window " + std::to_string(l.window));
        }
        cur = {cur[0], cur[1] / l.window, cur[2] / l.window};
        break;
      case LayerKind::spiking_dense: cur = {l.units}; break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::size_t NetworkSpec::classes() const {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  return layers.back().units;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  if (layers.back().kind != LayerKind::spiking_dense) {
    throw InvalidArgument("final layer must be a dense spiking layer");
  }
  for (auto d : input) {
    if (d == 0) throw InvalidArgument("input dimensions must be positive");
  }
  if (timesteps == 0) throw InvalidArgument("timesteps must be >= 1");
  lif.validate();
  surrogate.validate();
  (void)layer_shapes();
}

std::string NetworkSpec::to_text() const {
  std::string s;
  s += "arch = " + format_arch(layers) + "\n";
  s += "input = " + std::to_string(input[0]) + "," + std::to_string(input[1]) + "," +
       std::to_string(input[2]) + "\n";
  s += "timesteps = " + std::to_string(timesteps) + "\n";
  s += "beta = " + format_double(lif.beta) + "\n";
  s += "theta = " + format_double(lif.theta) + "\n";
  s += "surrogate = " + to_string(surrogate.kind) + "\n";
  s += "scale = " + format_double(surrogate.scale) + "\n";
  s += std::string("centered = ") + (surrogate.centered ? "1" : "0") + "\n";
  return s;
}

NetworkSpec NetworkSpec::from_text(std::string_view text) {
  const auto kv = KeyValues::parse(text, "network spec");
  NetworkSpec spec;
  spec.layers = parse_arch(kv.get_string("arch"));
  const auto dims = split(kv.get_string("input"), ',');
  if (dims.size() != 3) throw InvalidArgument("network spec: input must be C,H,W");
  for (std::size_t i = 0; i < 3; ++i) spec.input[i] = parse_uint(dims[i], "input");
  spec.timesteps = kv.get_uint("timesteps");
  spec.lif.beta = kv.get_double("beta");
  spec.lif.theta = kv.get_double("theta");
  spec.surrogate.kind = parse_surrogate_kind(kv.get_string("surrogate"));
  spec.surrogate.scale = kv.get_double("scale");
  spec.surrogate.centered = kv.get_bool("centered", true);
  spec.validate();
  return spec;
}

bool NetworkSpec::operator==(const NetworkSpec& o) const {
  return layers == o.layers && input == o.input && timesteps == o.timesteps &&
         lif.beta == o.lif.beta && lif.theta == o.lif.theta &&
         surrogate.kind == o.surrogate.kind && surrogate.scale == o.surrogate.scale &&
         surrogate.centered == o.surrogate.centered;
}

namespace {

Shape weight_shape(const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::spiking_conv: return {l.units, in[0], l.window, l.window};
    case LayerKind::spiking_dense: return {shape_numel(in), l.units};
    case LayerKind::maxpool: return {};
  }
  return {};
}

std::size_t fan_in(const Shape& w, LayerKind kind) {
  return kind == LayerKind::spiking_conv ? w[1] * w[2] * w[3] : w[0];
}

}  // namespace

NetworkState zero_state(const NetworkSpec& spec) {
  spec.validate();
  const auto shapes = spec.layer_shapes();
  NetworkState st;
  Shape in = spec.input_shape();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    st.weights.push_back(spec.layers[i].spiking() ? Tensor(weight_shape(spec.layers[i], in))
                                                  : Tensor());
    in = shapes[i];
  }
  return st;
}

NetworkState init_state(const NetworkSpec& spec, Rng& rng) {
  auto st = zero_state(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto& w = st.weights[i];
    if (w.empty()) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in(w.shape(), spec.layers[i].kind)));
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
  }
  return st;
}

ForwardResult forward(const NetworkSpec& spec, const NetworkState& state, const Tensor& input,
                      const ForwardOptions& opts) {
  spec.validate();
  const auto shapes = spec.layer_shapes();
  if (state.weights.size() != spec.layers.size()) {
    throw InvalidArgument("network state has " + std::to_string(state.weights.size()) +
                          " weight slots for " + std::to_string(spec.layers.size()) + " layers");
  }
  const auto& is = input.shape();
  if (is.size() != 5 || is[0] != spec.timesteps || is[2] != spec.input[0] ||
      is[3] != spec.input[1] || is[4] != spec.input[2]) {
    throw InvalidArgument("forward: input shape " + shape_str(is) + " does not match [T=" +
                          std::to_string(spec.timesteps) + ",B," +
                          shape_str(spec.input_shape()) + "]");
  }
  require_finite(input, "forward input");
  const std::size_t batch = is[1];
  const std::size_t n_layers = spec.layers.size();

  std::vector<MembraneState> membranes(n_layers);
  {
    Shape in = spec.input_shape();
    for (std::size_t i = 0; i < n_layers; ++i) {
      const auto& l = spec.layers[i];
      if (l.spiking()) {
        const auto ws = weight_shape(l, in);
        if (state.weights[i].shape() != ws) {
          throw InvalidArgument("layer " + std::to_string(i) + " weights " +
                                shape_str(state.weights[i].shape()) + ", expected " +
                                shape_str(ws));
        }
        Shape ms{batch};
        ms.insert(ms.end(), shapes[i].begin(), shapes[i].end());
        membranes[i].u = Tensor(ms);
      }
      in = shapes[i];
    }
  }

  ForwardResult result;
  result.counts = Tensor({batch, spec.classes()});
  if (opts.record) result.layers.resize(n_layers);

  for (std::size_t t = 0; t < spec.timesteps; ++t) {
    Tensor x = input.slice(t);
    for (std::size_t i = 0; i < n_layers; ++i) {
      const auto& l = spec.layers[i];
      if (opts.record) result.layers[i].input.push_back(x);
      if (l.kind == LayerKind::maxpool) {
        auto pooled = maxpool2d(x, l.window);
        x = std::move(pooled.output);
        if (opts.record) result.layers[i].argmax.push_back(std::move(pooled.argmax));
      } else {
        Tensor current;
        if (l.kind == LayerKind::spiking_conv) {
          current = conv2d(x, state.weights[i]);
        } else {
          const auto flat = x.reshaped({batch, x.size() / batch});
          current = matmul(flat, state.weights[i]);
        }
        membranes[i] = lif_step(membranes[i], current, spec.lif).state;
        const auto& u = membranes[i].u;
        if (opts.activation == Activation::hard_threshold) {
          x = fire(u, spec.lif.theta);
        } else {
          const double shift = spec.surrogate.centered ? spec.lif.theta : 0.0;
          Tensor shifted(u.shape());
          for (std::size_t k = 0; k < u.size(); ++k) shifted[k] = u[k] - shift;
          x = surrogate_forward(shifted, spec.surrogate);
        }
        if (opts.record) result.layers[i].membrane.push_back(u);
      }
      if (opts.record) result.layers[i].output.push_back(x);
    }
    for (std::size_t k = 0; k < result.counts.size(); ++k) result.counts[k] += x[k];
  }
  require_finite(result.counts, "forward counts");
  return result;
}

std::vector<std::size_t> predict(const Tensor& counts) {
  if (counts.rank() != 2) throw InvalidArgument("predict expects [B, classes]");
  const std::size_t b = counts.dim(0), c = counts.dim(1);
  std::vector<std::size_t> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (counts[i * c + j] > counts[i * c + best]) best = j;
    out[i] = best;
  }
  return out;
}

double SparsityReport::total_spikes() const {
  double s = 0.0;
  for (const auto& l : layers)
    if (l.kind != LayerKind::maxpool) s += l.spikes;
  return s;
}

double SparsityReport::total_slots() const {
  double s = 0.0;
  for (const auto& l : layers)
    if (l.kind != LayerKind::maxpool) s += l.slots;
  return s;
}

double SparsityReport::rate() const {
  const double slots = total_slots();
  return slots > 0.0 ? total_spikes() / slots : 0.0;
}

const LayerSparsity& SparsityReport::at_layer(std::size_t layer) const {
  for (const auto& l : layers)
    if (l.layer == layer) return l;
  throw InvalidArgument("sparsity report has no entry for layer " + std::to_string(layer));
}

void SparsityReport::merge(const SparsityReport& other) {
  if (layers.empty() && samples == 0) {
    *this = other;
    return;
  }
  if (other.layers.size() != layers.size()) {
    throw InvalidArgument("cannot merge sparsity reports of different networks");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].spikes += other.layers[i].spikes;
    layers[i].slots += other.layers[i].slots;
  }
  samples += other.samples;
  input_events += other.input_events;
  input_slots += other.input_slots;
}

SparsityReport count_spikes(const NetworkSpec& spec, const std::vector<LayerTrace>& recorded) {
  if (recorded.empty() || recorded.front().output.empty()) {
    throw InvalidArgument("count_spikes: empty recording (was instrumentation enabled?)");
  }
  if (recorded.size() != spec.layers.size()) {
    throw InvalidArgument("count_spikes: recording does not match the network");
  }
  SparsityReport r;
  r.samples = recorded.front().input.front().dim(0);
  for (const auto& x : recorded.front().input) {
    for (double v : x.data()) r.input_events += (v != 0.0) ? 1.0 : 0.0;
    r.input_slots += static_cast<double>(x.size());
  }
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    LayerSparsity ls{i, spec.layers[i].kind, 0.0, 0.0};
    for (const auto& s : recorded[i].output) {
      for (double v : s.data()) ls.spikes += v;
      ls.slots += static_cast<double>(s.size());
    }
    r.layers.push_back(ls);
  }
  return r;
}

namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint is truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U le() {
    auto s = take(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(s[i]) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out{'S', 'N', 'N', 'B'};
  put_u8(out, kCheckpointVersion);
  const auto text = ckpt.spec.to_text();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  put_le<std::uint64_t>(out, ckpt.seed);
  std::uint32_t count = 0;
  for (const auto& w : ckpt.state.weights) count += w.empty() ? 0 : 1;
  put_le<std::uint32_t>(out, count);
  for (const auto& w : ckpt.state.weights) {
    if (w.empty()) continue;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.rank()));
    for (auto d : w.shape()) put_le<std::uint64_t>(out, d);
    for (double v : w.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), "SNNB")) {
    throw DataError("not a checkpoint: bad magic bytes (expected SNNB)");
  }
  const auto version = r.le<std::uint8_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto text_len = r.le<std::uint32_t>();
  const auto text = r.take(text_len);
  Checkpoint ckpt;
  try {
    ckpt.spec = NetworkSpec::from_text(std::string(text.begin(), text.end()));
  } catch (const std::exception& e) {
    throw DataError(std::string("checkpoint network spec is invalid: ") + e.what());
  }
  ckpt.seed = r.le<std::uint64_t>();
  const auto count = r.le<std::uint32_t>();
  auto expected = zero_state(ckpt.spec);
  std::uint32_t seen = 0;
  for (auto& w : expected.weights) {
    if (w.empty()) continue;
    if (seen++ >= count) throw DataError("checkpoint has too few weight tensors");
    const auto rank = r.le<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.le<std::uint64_t>());
    if (shape != w.shape()) {
      throw DataError("checkpoint tensor " + shape_str(shape) + " does not match layer shape " +
                      shape_str(w.shape()));
    }
    for (auto& v : w.data()) v = std::bit_cast<double>(r.le<std::uint64_t>());
  }
  if (seen != count) throw DataError("checkpoint has extra weight tensors");
  if (!r.done()) throw DataError("checkpoint has trailing bytes");
  ckpt.state = std::move(expected);
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace snn
