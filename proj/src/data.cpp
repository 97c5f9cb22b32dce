// SPDX-License-Identifier: Apache-2.0
#include "snn/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>

#include "snn/error.hpp"

namespace snn {

void LabeledDataset::validate() const {
  if (labels.empty()) throw InvalidArgument("dataset is empty");
  if (images.rank() != 4 || images.dim(0) != labels.size()) {
    throw InvalidArgument("dataset images " + shape_str(images.shape()) + " do not match " +
                          std::to_string(labels.size()) + " labels");
  }
  for (double v : images.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("dataset pixel outside [0,1]");
  }
  for (auto l : labels) {
    if (l >= classes) {
      throw InvalidArgument("label " + std::to_string(l) + " out of range for " +
                            std::to_string(classes) + " classes");
    }
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  Shape s = images.shape();
  s[0] = indices.size();
  const std::size_t per = images.size() / std::max<std::size_t>(1, images.dim(0));
  LabeledDataset out{Tensor(s), {}, classes};
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = indices[i];
    if (src >= size()) throw InvalidArgument("subset index out of range");
    std::copy_n(images.data().begin() + static_cast<std::ptrdiff_t>(src * per), per,
                out.images.data().begin() + static_cast<std::ptrdiff_t>(i * per));
    out.labels.push_back(labels[src]);
  }
  return out;
}

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& path) {
  if (b.size() < off + 4) throw DataError("'" + path + "' is truncated (header)");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::string& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "bad IDX magic 0x%08x (expected 0x%08x)", got, want);
    throw DataError("'" + path + "': " + buf);
  }
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::size_t classes) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  check_magic(be32(img, 0, images_path), kIdxImagesMagic, images_path);
  check_magic(be32(lab, 0, labels_path), kIdxLabelsMagic, labels_path);

  const std::size_t n = be32(img, 4, images_path);
  const std::size_t rows = be32(img, 8, images_path);
  const std::size_t cols = be32(img, 12, images_path);
  const std::size_t n_labels = be32(lab, 4, labels_path);
  if (n != n_labels) {
    throw DataError("image/label count mismatch: " + std::to_string(n) + " images vs " +
                    std::to_string(n_labels) + " labels");
  }
  if (n == 0 || rows == 0 || cols == 0) throw DataError("'" + images_path + "' has no images");
  if (img.size() != 16 + n * rows * cols) {
    throw DataError("'" + images_path + "' is truncated or has trailing bytes: expected " +
                    std::to_string(16 + n * rows * cols) + " bytes, found " +
                    std::to_string(img.size()));
  }
  if (lab.size() != 8 + n) {
    throw DataError("'" + labels_path + "' is truncated or has trailing bytes");
  }

  LabeledDataset ds{Tensor({n, 1, rows, cols}), std::vector<std::size_t>(n), classes};
  for (std::size_t i = 0; i < n * rows * cols; ++i) ds.images[i] = img[16 + i] / 255.0;
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  if (ds.classes == 0) ds.classes = max_label + 1;
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("'") + labels_path + "': " + e.what());
  }
  return ds;
}

void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path) {
  ds.validate();
  if (ds.images.dim(1) != 1) throw InvalidArgument("IDX export supports one channel only");
  std::vector<std::uint8_t> img;
  put_be32(img, kIdxImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(ds.size()));
  put_be32(img, static_cast<std::uint32_t>(ds.images.dim(2)));
  put_be32(img, static_cast<std::uint32_t>(ds.images.dim(3)));
  for (double v : ds.images.data()) img.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  std::vector<std::uint8_t> lab;
  put_be32(lab, kIdxLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (auto l : ds.labels) {
    if (l > 255) throw InvalidArgument("IDX labels must fit in one byte");
    lab.push_back(static_cast<std::uint8_t>(l));
  }
  write_file(images_path, img);
  write_file(labels_path, lab);
}

namespace {

constexpr std::size_t kStrokeCount = 8;

// Stroke primitives: top, bottom, middle bars; left, right, centre columns;
// main and anti diagonals. Bands are side/5 pixels thick (at least one).
bool on_stroke(std::size_t stroke, std::size_t y, std::size_t x, std::size_t side) {
  const std::size_t w = std::max<std::size_t>(1, side / 5);
  const std::size_t mid = (side - w) / 2;
  const auto diff = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  switch (stroke) {
    case 0: return y < w;
    case 1: return y >= side - w;
    case 2: return y >= mid && y < mid + w;
    case 3: return x < w;
    case 4: return x >= side - w;
    case 5: return x >= mid && x < mid + w;
    case 6: return 2 * diff(y, x) < w;
    case 7: return 2 * diff(y + x, side - 1) < w;
  }
  return false;
}

std::vector<std::uint8_t> stroke_bitmap(unsigned mask, std::size_t side) {
  std::vector<std::uint8_t> px(side * side, 0);
  for (std::size_t s = 0; s < kStrokeCount; ++s) {
    if (!(mask & (1u << s))) continue;
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x)
        if (on_stroke(s, y, x, side)) px[y * side + x] = 1;
  }
  return px;
}

std::size_t hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

std::vector<Tensor> digit_templates(std::size_t classes, std::size_t side) {
  if (side < 5) throw InvalidArgument("synthetic digit side must be >= 5");
  if (classes == 0 || classes > 10) {
    throw InvalidArgument("synthetic digits support 1..10 classes, got " + std::to_string(classes));
  }
  // Candidate stroke subsets, three-stroke shapes first, then by closeness to three strokes.
  std::vector<unsigned> masks(255);
  std::iota(masks.begin(), masks.end(), 1u);
  std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    const auto da = std::abs(std::popcount(a) - 3), db = std::abs(std::popcount(b) - 3);
    return da < db;
  });
  const std::size_t min_distance = (side * side + 3) / 4;
  std::vector<std::vector<std::uint8_t>> chosen;
  for (unsigned m : masks) {
    if (chosen.size() == classes) break;
    auto bm = stroke_bitmap(m, side);
    const bool far = std::all_of(chosen.begin(), chosen.end(),
                                 [&](const auto& c) { return hamming(c, bm) >= min_distance; });
    if (far) chosen.push_back(std::move(bm));
  }
  if (chosen.size() < classes) {
    throw InvalidArgument("cannot build " + std::to_string(classes) +
                          " templates with pairwise distance >= 25% at side " +
                          std::to_string(side));
  }
  std::vector<Tensor> out;
  for (const auto& bm : chosen) {
    Tensor t({side, side});
    for (std::size_t i = 0; i < bm.size(); ++i) t[i] = bm[i];
    out.push_back(std::move(t));
  }
  return out;
}

LabeledDataset synth_digits(std::size_t per_class, std::size_t classes, std::size_t side,
                            double noise, std::uint64_t seed) {
  if (per_class == 0) throw InvalidArgument("synthetic dataset needs at least one sample per class");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("noise must be >= 0");
  const auto templates = digit_templates(classes, side);
  Rng rng(seed);
  const std::size_t n = per_class * classes;
  LabeledDataset ds{Tensor({n, 1, side, side}), {}, classes};
  ds.labels.reserve(n);
  std::size_t k = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t j = 0; j < per_class; ++j) {
      for (std::size_t p = 0; p < side * side; ++p) {
        double v = templates[c][p];
        if (noise > 0.0) v += rng.uniform(-noise, noise);
        ds.images[k++] = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

DatasetSplit train_test_split(const LabeledDataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must be in (0,1)");
  }
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, ds.size() - 1);
  const auto cut = idx.begin() + static_cast<std::ptrdiff_t>(ds.size() - n_test);
  return {ds.subset({idx.begin(), cut}), ds.subset({cut, idx.end()})};
}

LabeledDataset DataSource::load() const {
  if (synthetic) return synth_digits(per_class, classes, side, noise, seed);
  const auto dir = idx_dir.empty() ? std::string(".") : idx_dir;
  return load_idx(dir + "/" + kIdxImagesFile, dir + "/" + kIdxLabelsFile);
}

DatasetSplit DataSource::load_split() const {
  return train_test_split(load(), test_fraction, seed);
}

std::string DataSource::describe() const {
  if (!synthetic) return "idx:" + idx_dir;
  return "synth(per_class=" + std::to_string(per_class) + ", classes=" + std::to_string(classes) +
         ", side=" + std::to_string(side) + ", noise=" + std::to_string(noise) +
         ", seed=" + std::to_string(seed) + ")";
}

std::string to_string(EncoderKind kind) {
  return kind == EncoderKind::rate_bernoulli ? "rate_bernoulli" : "direct_current";
}

EncoderKind parse_encoder_kind(std::string_view text) {
  if (text == "rate_bernoulli" || text == "bernoulli") return EncoderKind::rate_bernoulli;
  if (text == "direct_current" || text == "direct") return EncoderKind::direct_current;
  throw InvalidArgument("unknown encoder '" + std::string(text) +
                        "' (expected rate_bernoulli or direct_current)");
}

Tensor encode(const Tensor& images, const Encoder& enc, Rng& rng) {
  if (enc.timesteps == 0) throw InvalidArgument("encoder timesteps must be >= 1");
  if (images.rank() != 4) throw InvalidArgument("encode expects [B,C,H,W] images");
  for (double v : images.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("encode: pixel value outside [0,1]");
  }
  Shape s{enc.timesteps};
  s.insert(s.end(), images.shape().begin(), images.shape().end());
  Tensor out(s);
  const std::size_t n = images.size();
  for (std::size_t t = 0; t < enc.timesteps; ++t) {
    double* dst = out.data().data() + t * n;
    if (enc.kind == EncoderKind::direct_current) {
      std::copy_n(images.data().data(), n, dst);
    } else {
      for (std::size_t i = 0; i < n; ++i) dst[i] = rng.bernoulli(images[i]) ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace snn
