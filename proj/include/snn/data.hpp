// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "snn/numerics.hpp"

namespace snn {

/// Images [N,C,H,W] with values in [0,1] and one class index per image.
struct LabeledDataset {
  Tensor images;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  /// Throws InvalidArgument unless the invariants hold.
  void validate() const;
  /// Images and labels at `indices`, in that order.
  LabeledDataset subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const LabeledDataset&) const = default;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image/label pair (unsigned bytes, big-endian dims).
/// Pixels are scaled by 1/255. `classes` of 0 means max label + 1.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::size_t classes = 0);

/// Writes single-channel images as round(v * 255) bytes.
void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path);

/// Per-class stroke templates on a side x side grid, binary.
/// Throws InvalidArgument when `classes` distinct templates at pairwise
/// Hamming distance >= 25% of the pixels cannot be built.
std::vector<Tensor> digit_templates(std::size_t classes, std::size_t side);

/// Desk-scale stand-in for a digit dataset: each image is its class template
/// plus seeded uniform noise in [-noise, noise], clamped to [0,1] and
/// quantized to multiples of 1/255 so IDX round-trips are exact. Samples
/// are ordered class-major.
LabeledDataset synth_digits(std::size_t per_class, std::size_t classes, std::size_t side,
                            double noise, std::uint64_t seed);

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// Seeded shuffle, then the last `test_fraction` of samples become the test set.
DatasetSplit train_test_split(const LabeledDataset& ds, double test_fraction, std::uint64_t seed);

/// Where a run's data comes from: the built-in generator or an IDX pair
/// (`images.idx3` and `labels.idx1` inside `idx_dir`), split 80/20 by default.
struct DataSource {
  bool synthetic = true;
  std::string idx_dir;
  std::size_t per_class = 60;
  std::size_t classes = 10;
  std::size_t side = 12;
  double noise = 0.3;
  std::uint64_t seed = 7;
  double test_fraction = 0.2;

  LabeledDataset load() const;
  DatasetSplit load_split() const;
  std::string describe() const;
};

inline constexpr const char* kIdxImagesFile = "images.idx3";
inline constexpr const char* kIdxLabelsFile = "labels.idx1";

enum class EncoderKind { rate_bernoulli, direct_current };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view text);

struct Encoder {
  EncoderKind kind = EncoderKind::direct_current;
  std::size_t timesteps = 10;
};

/// [B,C,H,W] -> [T,B,C,H,W].
/// rate_bernoulli: independent Bernoulli(pixel) spike per slot and timestep.
/// direct_current: the pixel value repeated at every timestep.
Tensor encode(const Tensor& images, const Encoder& enc, Rng& rng);

}  // namespace snn
