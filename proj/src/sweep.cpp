// SPDX-License-Identifier: Apache-2.0
#include "snn/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "snn/error.hpp"

namespace snn {

namespace fs = std::filesystem;

std::string SweepPoint::key() const {
  char idx[32];
  std::snprintf(idx, sizeof idx, "p%03zu", index);
  return std::string(idx) + "_" + to_string(surrogate) + "_k" + format_double(scale) + "_b" +
         format_double(beta) + "_t" + format_double(theta);
}

void SweepGrid::validate() const {
  spec.validate();
  train.validate();
  hw.validate();
  if (surrogates.empty() || scales.empty() || betas.empty() || thetas.empty()) {
    throw InvalidArgument("sweep grid: every axis needs at least one value");
  }
  for (double s : scales) SurrogateSpec{SurrogateKind::fast_sigmoid, s, true}.validate();
  for (double b : betas) LifParams{b, 1.0}.validate();
  for (double t : thetas) LifParams{0.5, t}.validate();
  if (repeats == 0) throw InvalidArgument("sweep grid: repeats must be >= 1");
  const auto runs = surrogates.size() * scales.size() * betas.size() * thetas.size() * repeats;
  if (runs > budget) {
    throw InvalidArgument("sweep grid: " + std::to_string(runs) + " runs exceed the budget of " +
                          std::to_string(budget));
  }
}

std::vector<SweepPoint> SweepGrid::points() const {
  std::vector<SweepPoint> out;
  for (auto s : surrogates)
    for (double k : scales)
      for (double b : betas)
        for (double t : thetas) out.push_back({out.size(), s, k, b, t});
  return out;
}

NetworkSpec SweepGrid::spec_for(const SweepPoint& p) const {
  NetworkSpec s = spec;
  s.surrogate.kind = p.surrogate;
  s.surrogate.scale = p.scale;
  s.lif.beta = p.beta;
  s.lif.theta = p.theta;
  return s;
}

namespace {

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) out.push_back(parse_double(s, what));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

const std::vector<std::string> kGridKeys = {
    "name", "arch", "timesteps", "encoder", "epochs", "batch", "lr", "optimizer", "momentum",
    "seed", "surrogate", "scale", "beta", "theta", "centered", "clip", "clip_norm",
    "detach_reset", "axis.surrogate", "axis.scale", "axis.beta", "axis.theta", "repeats",
    "budget", "data", "synth_per_class", "synth_classes", "synth_side", "synth_noise",
    "data_seed", "test_fraction", "hw_config"};

}  // namespace

SweepGrid SweepGrid::from_key_values(const KeyValues& kv, const std::string& base_dir) {
  for (const auto& k : kv.unknown_keys(kGridKeys)) {
    if (!k.starts_with("hw.")) throw InvalidArgument("sweep grid: unknown key '" + k + "'");
  }
  SweepGrid g;
  g.name = kv.get_string("name", g.name);

  // Data first: the network input shape follows from it.
  const auto data = kv.get_string("data", "synth");
  g.data.synthetic = data == "synth";
  if (!g.data.synthetic) {
    g.data.idx_dir = fs::path(data).is_absolute() ? data : (fs::path(base_dir) / data).string();
  }
  g.data.per_class = kv.get_uint("synth_per_class", g.data.per_class);
  g.data.classes = kv.get_uint("synth_classes", g.data.classes);
  g.data.side = kv.get_uint("synth_side", g.data.side);
  g.data.noise = kv.get_double("synth_noise", g.data.noise);
  g.data.seed = kv.get_uint("data_seed", g.data.seed);
  g.data.test_fraction = kv.get_double("test_fraction", g.data.test_fraction);

  g.spec.layers = parse_arch(kv.get_string("arch", "8C3-MP2-32-10"));
  g.spec.input = {1, g.data.side, g.data.side};
  g.spec.timesteps = kv.get_uint("timesteps", g.spec.timesteps);
  g.spec.lif.beta = kv.get_double("beta", g.spec.lif.beta);
  g.spec.lif.theta = kv.get_double("theta", g.spec.lif.theta);
  g.spec.surrogate.kind = parse_surrogate_kind(kv.get_string("surrogate", "fast_sigmoid"));
  g.spec.surrogate.scale = kv.get_double("scale", g.spec.surrogate.scale);
  g.spec.surrogate.centered = kv.get_bool("centered", true);

  g.train.encoder = parse_encoder_kind(kv.get_string("encoder", "direct_current"));
  g.train.epochs = kv.get_uint("epochs", g.train.epochs);
  g.train.batch_size = kv.get_uint("batch", g.train.batch_size);
  g.train.base_lr = kv.get_double("lr", g.train.base_lr);
  g.train.optimizer = parse_optimizer_kind(kv.get_string("optimizer", "adam"));
  g.train.momentum = kv.get_double("momentum", g.train.momentum);
  g.train.seed = kv.get_uint("seed", g.train.seed);
  g.train.clip = kv.get_bool("clip", false);
  g.train.clip_norm = kv.get_double("clip_norm", g.train.clip_norm);
  g.train.detach_reset = kv.get_bool("detach_reset", true);

  g.surrogates.clear();
  if (kv.has("axis.surrogate")) {
    for (const auto& s : split(kv.get_string("axis.surrogate"), ','))
      g.surrogates.push_back(parse_surrogate_kind(s));
  } else {
    g.surrogates = {g.spec.surrogate.kind};
  }
  g.scales = kv.has("axis.scale") ? parse_double_list(kv.get_string("axis.scale"), "axis.scale")
                                  : std::vector<double>{g.spec.surrogate.scale};
  g.betas = kv.has("axis.beta") ? parse_double_list(kv.get_string("axis.beta"), "axis.beta")
                                : std::vector<double>{g.spec.lif.beta};
  g.thetas = kv.has("axis.theta") ? parse_double_list(kv.get_string("axis.theta"), "axis.theta")
                                  : std::vector<double>{g.spec.lif.theta};
  g.repeats = kv.get_uint("repeats", g.repeats);
  g.budget = kv.get_uint("budget", g.budget);

  KeyValues hw_kv;
  if (kv.has("hw_config")) {
    const auto p = kv.get_string("hw_config");
    hw_kv = KeyValues::load(fs::path(p).is_absolute() ? p : (fs::path(base_dir) / p).string());
  }
  for (const auto& [k, v] : kv.entries())
    if (k.starts_with("hw.")) hw_kv.set(k.substr(3), v);
  g.hw = HwConfig::from_key_values(hw_kv);

  g.validate();
  return g;
}

SweepGrid SweepGrid::load(const std::string& path) {
  const auto kv = KeyValues::load(path);
  return from_key_values(kv, fs::path(path).parent_path().string().empty()
                                 ? std::string(".")
                                 : fs::path(path).parent_path().string());
}

std::string SweepGrid::to_text() const {
  std::ostringstream os;
  os << "name = " << name << "\n";
  os << "arch = " << format_arch(spec.layers) << "\n";
  os << "timesteps = " << spec.timesteps << "\n";
  os << "encoder = " << to_string(train.encoder) << "\n";
  os << "epochs = " << train.epochs << "\n";
  os << "batch = " << train.batch_size << "\n";
  os << "lr = " << format_double(train.base_lr) << "\n";
  os << "optimizer = " << to_string(train.optimizer) << "\n";
  os << "momentum = " << format_double(train.momentum) << "\n";
  os << "seed = " << train.seed << "\n";
  os << "clip = " << (train.clip ? 1 : 0) << "\n";
  os << "clip_norm = " << format_double(train.clip_norm) << "\n";
  os << "detach_reset = " << (train.detach_reset ? 1 : 0) << "\n";
  os << "surrogate = " << to_string(spec.surrogate.kind) << "\n";
  os << "scale = " << format_double(spec.surrogate.scale) << "\n";
  os << "beta = " << format_double(spec.lif.beta) << "\n";
  os << "theta = " << format_double(spec.lif.theta) << "\n";
  os << "centered = " << (spec.surrogate.centered ? 1 : 0) << "\n";
  os << "axis.surrogate = ";
  for (std::size_t i = 0; i < surrogates.size(); ++i) os << (i ? "," : "") << to_string(surrogates[i]);
  os << "\n";
  os << "axis.scale = " << join_doubles(scales) << "\n";
  os << "axis.beta = " << join_doubles(betas) << "\n";
  os << "axis.theta = " << join_doubles(thetas) << "\n";
  os << "repeats = " << repeats << "\n";
  os << "budget = " << budget << "\n";
  os << "data = " << (data.synthetic ? std::string("synth") : data.idx_dir) << "\n";
  os << "synth_per_class = " << data.per_class << "\n";
  os << "synth_classes = " << data.classes << "\n";
  os << "synth_side = " << data.side << "\n";
  os << "synth_noise = " << format_double(data.noise) << "\n";
  os << "data_seed = " << data.seed << "\n";
  os << "test_fraction = " << format_double(data.test_fraction) << "\n";
  std::istringstream hw_lines(hw.to_text());
  for (std::string line; std::getline(hw_lines, line);) os << "hw." << line << "\n";
  return os.str();
}

std::uint64_t run_seed(std::uint64_t base_seed, const SweepPoint& p, std::size_t repeat) {
  const auto text = std::to_string(base_seed) + "|" + to_string(p.surrogate) + "," +
                    format_double(p.scale) + "," + format_double(p.beta) + "," +
                    format_double(p.theta) + "|" + std::to_string(repeat);
  return hash_string(text);
}

const SweepRow* SweepResult::find(const std::string& point_key, const std::string& repeat) const {
  for (const auto& r : rows)
    if (r.point_key == point_key && r.repeat == repeat) return &r;
  return nullptr;
}

std::vector<SweepRow> SweepResult::means() const {
  std::vector<SweepRow> out;
  for (const auto& r : rows)
    if (r.aggregate() && r.repeat == "mean") out.push_back(r);
  return out;
}

std::string sweep_csv_header(std::size_t spiking_layers) {
  std::string h = "point_key,surrogate,scale,beta,theta,repeat,seed,test_acc,mean_fire_rate";
  for (std::size_t i = 1; i <= spiking_layers; ++i) h += ",l" + std::to_string(i) + "_rate";
  h += ",latency_s,dyn_energy_j,avg_power_w,fps,fps_per_w,status,wallclock_s";
  return h;
}

namespace {

std::string format_row(const SweepRow& r, bool with_wallclock) {
  std::string s = r.point_key + "," + to_string(r.surrogate) + "," + format_double(r.scale) +
                  "," + format_double(r.beta) + "," + format_double(r.theta) + "," + r.repeat +
                  "," + std::to_string(r.seed) + "," + format_double(r.test_acc) + "," +
                  format_double(r.mean_fire_rate);
  for (double v : r.layer_rates) s += "," + format_double(v);
  s += "," + format_double(r.latency_s) + "," + format_double(r.dyn_energy_j) + "," +
       format_double(r.avg_power_w) + "," + format_double(r.fps) + "," +
       format_double(r.fps_per_w) + "," + r.status + ",";
  if (with_wallclock) s += format_double(r.wallclock_s);
  return s;
}

// Returns nullopt for lines that are incomplete or malformed (e.g. cut by a crash).
std::optional<SweepRow> parse_row(const std::string& line, std::size_t layers) {
  const auto f = split(line, ',');
  if (f.size() != 16 + layers) return std::nullopt;
  try {
    SweepRow r;
    std::size_t i = 0;
    r.point_key = f[i++];
    r.surrogate = parse_surrogate_kind(f[i++]);
    r.scale = parse_double(f[i++], "scale");
    r.beta = parse_double(f[i++], "beta");
    r.theta = parse_double(f[i++], "theta");
    r.repeat = f[i++];
    r.seed = parse_uint(f[i++], "seed");
    r.test_acc = parse_double(f[i++], "test_acc");
    r.mean_fire_rate = parse_double(f[i++], "mean_fire_rate");
    for (std::size_t l = 0; l < layers; ++l) r.layer_rates.push_back(parse_double(f[i++], "rate"));
    r.latency_s = parse_double(f[i++], "latency_s");
    r.dyn_energy_j = parse_double(f[i++], "dyn_energy_j");
    r.avg_power_w = parse_double(f[i++], "avg_power_w");
    r.fps = parse_double(f[i++], "fps");
    r.fps_per_w = parse_double(f[i++], "fps_per_w");
    r.status = f[i++];
    r.wallclock_s = f[i].empty() ? 0.0 : parse_double(f[i], "wallclock_s");
    if (r.point_key.empty() || r.status.empty()) return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::size_t layers_from_header(const std::string& header) {
  const auto cols = split(header, ',');
  if (cols.size() < 16 || cols.front() != "point_key") {
    throw DataError("not a sweep CSV: unexpected header");
  }
  return cols.size() - 16;
}

}  // namespace

void write_sweep_csv(std::ostream& os, const SweepResult& r, bool with_wallclock) {
  os << kSweepSchema << "\n" << sweep_csv_header(r.spiking_layers) << "\n";
  for (const auto& row : r.rows) os << format_row(row, with_wallclock) << "\n";
}

SweepResult read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepSchema) {
    throw DataError("not a sweep CSV: missing '" + std::string(kSweepSchema) + "' line");
  }
  if (!std::getline(is, line)) throw DataError("sweep CSV has no header");
  SweepResult r;
  r.spiking_layers = layers_from_header(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = parse_row(line, r.spiking_layers);
    if (!row) throw DataError("malformed sweep CSV row: " + line);
    r.rows.push_back(std::move(*row));
  }
  return r;
}

SweepRow run_point(const SweepGrid& grid, const SweepPoint& p, std::size_t repeat,
                   const DatasetSplit& data) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = grid.spec_for(p);
  TrainConfig cfg = grid.train;
  cfg.seed = run_seed(grid.train.seed, p, repeat);

  std::size_t spiking = 0;
  for (const auto& l : spec.layers) spiking += l.spiking() ? 1 : 0;

  SweepRow row;
  row.point_key = p.key();
  row.surrogate = p.surrogate;
  row.scale = p.scale;
  row.beta = p.beta;
  row.theta = p.theta;
  row.repeat = std::to_string(repeat);
  row.seed = cfg.seed;
  try {
    auto tr = train(spec, data, cfg);
    EvalResult ev;
    if (tr.metrics.empty()) {
      ev = evaluate(spec, tr.state, data.test, cfg.encoder, cfg.batch_size, cfg.seed);
    } else {
      ev.accuracy = tr.metrics.back().test_acc;
      ev.sparsity = tr.metrics.back().test_sparsity;
    }
    const auto cost = estimate(spec, ev.sparsity, grid.hw);
    row.test_acc = ev.accuracy;
    row.mean_fire_rate = ev.sparsity.rate();
    for (const auto& l : ev.sparsity.layers)
      if (l.kind != LayerKind::maxpool) row.layer_rates.push_back(l.rate());
    row.latency_s = cost.latency_s;
    row.dyn_energy_j = cost.dynamic_energy_j;
    row.avg_power_w = cost.avg_power_w;
    row.fps = cost.fps;
    row.fps_per_w = cost.fps_per_w;
    row.status = "ok";
  } catch (const NumericError&) {
    row.status = "diverged";
  } catch (const InvalidArgument&) {
    row.status = "invalid";
  }
  if (!row.ok()) {
    const double nan = std::nan("");
    row.test_acc = row.mean_fire_rate = nan;
    row.layer_rates.assign(spiking, nan);
    row.latency_s = row.dyn_energy_j = row.avg_power_w = row.fps = row.fps_per_w = nan;
  }
  row.wallclock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

void add_aggregates(SweepResult& r) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<SweepRow>> runs;
  for (auto& row : r.rows) {
    if (row.aggregate()) continue;
    if (!runs.contains(row.point_key)) order.push_back(row.point_key);
    runs[row.point_key].push_back(std::move(row));
  }
  std::sort(order.begin(), order.end());
  std::vector<SweepRow> out;
  for (const auto& key : order) {
    auto& group = runs[key];
    std::stable_sort(group.begin(), group.end(), [](const SweepRow& a, const SweepRow& b) {
      return std::stoull(a.repeat) < std::stoull(b.repeat);
    });
    out.insert(out.end(), group.begin(), group.end());
    std::vector<const SweepRow*> ok;
    for (const auto& g : group)
      if (g.ok()) ok.push_back(&g);
    if (ok.empty()) continue;

    SweepRow mean = *ok.front(), lo = *ok.front(), hi = *ok.front();
    mean.repeat = "mean";
    lo.repeat = "min";
    hi.repeat = "max";
    for (auto* a : {&mean, &lo, &hi}) {
      a->seed = 0;
      a->status = "aggregate";
    }
    const auto fold = [&](auto field) {
      double s = 0.0;
      for (auto* o : ok) {
        const double v = field(*o);
        s += v;
        field(lo) = std::min(field(lo), v);
        field(hi) = std::max(field(hi), v);
      }
      field(mean) = s / static_cast<double>(ok.size());
    };
    fold([](auto& row) -> auto& { return row.test_acc; });
    fold([](auto& row) -> auto& { return row.mean_fire_rate; });
    for (std::size_t l = 0; l < mean.layer_rates.size(); ++l)
      fold([l](auto& row) -> auto& { return row.layer_rates[l]; });
    fold([](auto& row) -> auto& { return row.latency_s; });
    fold([](auto& row) -> auto& { return row.dyn_energy_j; });
    fold([](auto& row) -> auto& { return row.avg_power_w; });
    fold([](auto& row) -> auto& { return row.fps; });
    fold([](auto& row) -> auto& { return row.fps_per_w; });
    fold([](auto& row) -> auto& { return row.wallclock_s; });
    out.push_back(std::move(mean));
    out.push_back(std::move(lo));
    out.push_back(std::move(hi));
  }
  r.rows = std::move(out);
}

namespace {

std::map<std::string, SweepRow> read_journal(const fs::path& path, std::size_t layers) {
  std::map<std::string, SweepRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line) || line != kSweepSchema) return rows;
  if (!std::getline(in, line) || line != sweep_csv_header(layers)) return rows;
  while (std::getline(in, line)) {
    if (auto row = parse_row(line, layers); row && !row->aggregate()) {
      rows[row->point_key + "#" + row->repeat] = std::move(*row);
    }
  }
  return rows;
}

void write_text_atomically(const fs::path& path, const std::string& text) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opts) {
  grid.validate();
  const auto points = grid.points();
  SweepResult result;
  for (const auto& l : grid.spec.layers) result.spiking_layers += l.spiking() ? 1 : 0;

  struct Task {
    std::size_t point;
    std::size_t repeat;
    std::string id() const { return std::to_string(point) + "#" + std::to_string(repeat); }
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t r = 0; r < grid.repeats; ++r) tasks.push_back({p, r});

  const std::string header = sweep_csv_header(result.spiking_layers);
  std::map<std::string, SweepRow> journaled;
  std::ofstream journal;
  if (!opts.out_dir.empty()) {
    const fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    const auto grid_file = dir / "grid.cfg";
    const auto journal_file = dir / "journal.csv";
    const auto grid_text = grid.to_text();
    if (opts.resume && fs::exists(grid_file)) {
      if (read_text(grid_file) != grid_text) {
        throw InvalidArgument("output directory '" + opts.out_dir +
                              "' holds a different sweep; use a new directory or disable resume");
      }
      journaled = read_journal(journal_file, result.spiking_layers);
    }
    write_text_atomically(grid_file, grid_text);
    // Rewrite the journal from its valid rows so appends start on a clean line.
    std::string text = std::string(kSweepSchema) + "\n" + header + "\n";
    for (const auto& [k, row] : journaled) text += format_row(row, true) + "\n";
    write_text_atomically(journal_file, text);
    journal.open(journal_file, std::ios::app);
    if (!journal) throw DataError("cannot append to '" + journal_file.string() + "'");
  }

  const auto journal_key = [&](const Task& t) {
    return points[t.point].key() + "#" + std::to_string(t.repeat);
  };
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!journaled.contains(journal_key(tasks[i]))) pending.push_back(i);
  if (opts.max_new_runs && pending.size() > *opts.max_new_runs) {
    pending.resize(*opts.max_new_runs);
  }

  std::vector<std::optional<SweepRow>> fresh(tasks.size());
  if (!pending.empty()) {
    const auto data = grid.data.load_split();
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    const auto worker = [&] {
      while (true) {
        const auto slot = next.fetch_add(1);
        if (slot >= pending.size()) return;
        const auto& task = tasks[pending[slot]];
        try {
          auto row = run_point(grid, points[task.point], task.repeat, data);
          std::lock_guard lock(mu);
          if (journal.is_open()) journal << format_row(row, true) << "\n" << std::flush;
          if (opts.on_row) opts.on_row(row);
          fresh[pending[slot]] = std::move(row);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = pending.size();
        }
      }
    };
    const auto n_workers = std::clamp<std::size_t>(opts.workers, 1, pending.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (fresh[i]) {
      result.rows.push_back(std::move(*fresh[i]));
      ++result.new_runs;
    } else if (auto it = journaled.find(journal_key(tasks[i])); it != journaled.end()) {
      result.rows.push_back(it->second);
    } else {
      result.complete = false;
    }
  }
  add_aggregates(result);

  if (!opts.out_dir.empty() && result.complete) {
    std::ostringstream os;
    write_sweep_csv(os, result);
    write_text_atomically(fs::path(opts.out_dir) / "sweep.csv", os.str());
  }
  return result;
}

std::vector<FrontierPoint> frontier(const std::vector<FrontierPoint>& points) {
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return points[a].accuracy > points[b].accuracy;
  });
  // Sweep accuracy groups from best to worst; a point survives when it has the
  // best FPS/W in its group and strictly beats every more accurate point.
  std::vector<bool> keep(points.size(), false);
  double best_above = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t end = g;
    double group_max = -std::numeric_limits<double>::infinity();
    while (end < idx.size() && points[idx[end]].accuracy == points[idx[g]].accuracy) {
      group_max = std::max(group_max, points[idx[end]].fps_per_w);
      ++end;
    }
    for (std::size_t k = g; k < end; ++k) {
      const double f = points[idx[k]].fps_per_w;
      keep[idx[k]] = f == group_max && f > best_above;
    }
    best_above = std::max(best_above, group_max);
    g = end;
  }
  std::vector<FrontierPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (keep[i]) out.push_back(points[i]);
  return out;
}

std::vector<FrontierPoint> frontier(const SweepResult& r) {
  std::vector<FrontierPoint> pts;
  for (const auto& m : r.means()) pts.push_back({m.point_key, m.test_acc, m.fps_per_w});
  return frontier(pts);
}

DeltaReport compare_rows(const SweepRow& a, const SweepRow& b) {
  DeltaReport d;
  d.accuracy_delta = a.test_acc - b.test_acc;
  d.accuracy_delta_rel = (a.test_acc - b.test_acc) / b.test_acc;
  d.latency_delta_rel = (a.latency_s - b.latency_s) / b.latency_s;
  d.fps_per_w_ratio = a.fps_per_w / b.fps_per_w;
  return d;
}

DeltaReport compare(const SweepResult& r, const std::string& key_a, const std::string& key_b) {
  const auto* a = r.find(key_a);
  const auto* b = r.find(key_b);
  if (a == nullptr) throw InvalidArgument("compare: no aggregate row for '" + key_a + "'");
  if (b == nullptr) throw InvalidArgument("compare: no aggregate row for '" + key_b + "'");
  return compare_rows(*a, *b);
}

namespace {

template <typename Field>
const SweepRow& best_by(const SweepResult& r, Field field) {
  const SweepRow* best = nullptr;
  for (const auto& row : r.rows) {
    if (!row.aggregate() || row.repeat != "mean") continue;
    if (best == nullptr || field(row) > field(*best)) best = &row;
  }
  if (best == nullptr) throw InvalidArgument("sweep result has no successful points");
  return *best;
}

}  // namespace

const SweepRow& best_accuracy(const SweepResult& r) {
  return best_by(r, [](const SweepRow& row) { return row.test_acc; });
}

const SweepRow& best_efficiency(const SweepResult& r) {
  return best_by(r, [](const SweepRow& row) { return row.fps_per_w; });
}

}  // namespace snn
