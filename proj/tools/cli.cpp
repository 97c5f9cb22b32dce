// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "snn/data.hpp"
#include "snn/error.hpp"
#include "snn/hwmodel.hpp"
#include "snn/learning.hpp"
#include "snn/network.hpp"
#include "snn/sweep.hpp"

namespace snn::cli {
namespace {

namespace fs = std::filesystem;

struct DataFlags {
  std::string data = "synth";
  DataSource source;

  DataSource resolve() const {
    DataSource s = source;
    s.synthetic = data == "synth";
    if (!s.synthetic) s.idx_dir = data;
    return s;
  }
};

void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.data,
                  "'synth' for the built-in generator, or a directory holding images.idx3 and "
                  "labels.idx1")
      ->capture_default_str();
  app->add_option("--synth-per-class", f.source.per_class, "synthetic samples per class")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--synth-classes", f.source.classes, "synthetic class count (1..10)")
      ->capture_default_str()
      ->check(CLI::Range(1, 10));
  app->add_option("--synth-side", f.source.side, "synthetic image side in pixels (>= 5)")
      ->capture_default_str()
      ->check(CLI::Range(5, 1024));
  app->add_option("--synth-noise", f.source.noise,
                  "synthetic uniform noise amplitude (pixel units, [0,1])")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--data-seed", f.source.seed, "seed for synthetic data and the train/test split")
      ->capture_default_str();
  app->add_option("--test-fraction", f.source.test_fraction, "held-out fraction of samples")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

void print_config(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::cout << "# " << cmd << " configuration\n";
  for (const auto& [k, v] : kv) std::cout << "#   " << k << " = " << v << "\n";
  std::cout.flush();
}

std::string shape3(const std::array<std::size_t, 3>& a) {
  return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]);
}

// ---- train ---------------------------------------------------------------

struct TrainFlags {
  std::string arch = "8C3-MP2-32-10";
  std::string surrogate = "fast_sigmoid";
  double scale = 0.25;
  double beta = 0.25;
  double theta = 1.0;
  std::size_t timesteps = 10;
  std::size_t epochs = 25;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t seed = 1;
  std::string optimizer = "adam";
  double momentum = 0.0;
  std::string encoder = "direct_current";
  bool clip = false;
  bool attached_reset = false;
  bool uncentered = false;
  std::string out = "model.snnb";
  std::string metrics = "metrics.csv";
  DataFlags data;
};

int train_cmd(const TrainFlags& f) {
  NetworkSpec spec;
  spec.layers = parse_arch(f.arch);
  spec.timesteps = f.timesteps;
  spec.lif = {f.beta, f.theta};
  spec.surrogate = {parse_surrogate_kind(f.surrogate), f.scale, !f.uncentered};
  spec.lif.validate();
  spec.surrogate.validate();
  TrainConfig cfg;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch;
  cfg.base_lr = f.lr;
  cfg.seed = f.seed;
  cfg.optimizer = parse_optimizer_kind(f.optimizer);
  cfg.momentum = f.momentum;
  cfg.encoder = parse_encoder_kind(f.encoder);
  cfg.clip = f.clip;
  cfg.detach_reset = !f.attached_reset;
  cfg.validate();
  if (spec.timesteps == 0) throw InvalidArgument("timesteps must be >= 1");

  const auto source = f.data.resolve();
  const auto split = source.load_split();
  const auto& s = split.train.images.shape();
  spec.input = {s[1], s[2], s[3]};
  spec.validate();

  print_config("train", {{"arch", format_arch(spec.layers)},
                         {"input", shape3(spec.input)},
                         {"timesteps", std::to_string(spec.timesteps)},
                         {"beta", format_double(spec.lif.beta)},
                         {"theta", format_double(spec.lif.theta)},
                         {"surrogate", to_string(spec.surrogate.kind)},
                         {"scale", format_double(spec.surrogate.scale)},
                         {"centered", spec.surrogate.centered ? "1" : "0"},
                         {"epochs", std::to_string(cfg.epochs)},
                         {"lr", format_double(cfg.base_lr)},
                         {"schedule", "cosine (per epoch, no restarts)"},
                         {"optimizer", to_string(cfg.optimizer)},
                         {"batch", std::to_string(cfg.batch_size)},
                         {"seed", std::to_string(cfg.seed)},
                         {"encoder", to_string(cfg.encoder)},
                         {"clip", cfg.clip ? "global-norm 10" : "off"},
                         {"detach_reset", cfg.detach_reset ? "1" : "0"},
                         {"data", source.describe()},
                         {"train/test", std::to_string(split.train.size()) + "/" +
                                            std::to_string(split.test.size())},
                         {"out", f.out},
                         {"metrics", f.metrics}});

  std::ofstream metrics(f.metrics, std::ios::trunc);
  if (!metrics) throw DataError("cannot write metrics CSV '" + f.metrics + "'");
  write_metrics_header(metrics);
  auto result = train(spec, split, cfg, [&](const EpochMetrics& m) {
    write_metrics_row(metrics, m);
    metrics.flush();
    std::printf("epoch %3zu  lr %.3e  loss %.4f  train %.4f  test %.4f  fire %.4f\n", m.epoch,
                m.lr, m.train_loss, m.train_acc, m.test_acc, m.mean_fire_rate);
    std::fflush(stdout);
  });
  save_checkpoint(f.out, {spec, result.state, cfg.seed});
  std::cout << "checkpoint written to " << f.out << "\n";
  return kExitOk;
}

// ---- eval / cost ------------------------------------------------------------

struct EvalFlags {
  std::string checkpoint = "model.snnb";
  std::string encoder = "direct_current";
  std::size_t batch = 64;
  std::string hw_config;
  bool pipeline = false;
  std::string csv;
  DataFlags data;
};

struct Loaded {
  Checkpoint ckpt;
  DatasetSplit split;
};

Loaded load_for_inference(const EvalFlags& f) {
  Loaded l{load_checkpoint(f.checkpoint), f.data.resolve().load_split()};
  const auto& s = l.split.test.images.shape();
  const std::array<std::size_t, 3> in{s[1], s[2], s[3]};
  if (in != l.ckpt.spec.input || l.split.test.classes != l.ckpt.spec.classes()) {
    throw DataError("dataset (input " + shape3(in) + ", " + std::to_string(l.split.test.classes) +
                    " classes) does not match checkpoint (input " + shape3(l.ckpt.spec.input) +
                    ", " + std::to_string(l.ckpt.spec.classes()) + " classes)");
  }
  return l;
}

void print_sparsity(const SparsityReport& r) {
  std::printf("layer  kind       spikes/inf        slots/inf   rate\n");
  const double n = static_cast<double>(r.samples);
  for (const auto& l : r.layers) {
    std::printf("%5zu  %-8s %12.2f %16.0f   %.5f\n", l.layer, to_string(l.kind).c_str(),
                l.spikes / n, l.slots / n, l.rate());
  }
  std::printf("aggregate firing rate %.5f (sparsity %.5f)\n", r.rate(), 1.0 - r.rate());
}

int eval_cmd(const EvalFlags& f) {
  print_config("eval", {{"checkpoint", f.checkpoint},
                        {"data", f.data.resolve().describe()},
                        {"encoder", f.encoder},
                        {"batch", std::to_string(f.batch)}});
  const auto l = load_for_inference(f);
  const auto ev = evaluate(l.ckpt.spec, l.ckpt.state, l.split.test, parse_encoder_kind(f.encoder),
                           f.batch, l.ckpt.seed);
  std::printf("test accuracy %.4f  loss %.4f  (%zu samples)\n", ev.accuracy, ev.loss,
              l.split.test.size());
  print_sparsity(ev.sparsity);
  return kExitOk;
}

int cost_cmd(const EvalFlags& f) {
  HwConfig hw;
  if (!f.hw_config.empty()) hw = HwConfig::load(f.hw_config);
  print_config("cost", {{"checkpoint", f.checkpoint},
                        {"data", f.data.resolve().describe()},
                        {"encoder", f.encoder},
                        {"hw_config", f.hw_config.empty() ? "(built-in defaults)" : f.hw_config},
                        {"clock_hz", format_double(hw.clock_hz)},
                        {"lanes", std::to_string(hw.lanes)},
                        {"static_power_w", format_double(hw.static_power_w)},
                        {"pipeline", f.pipeline ? "1" : "0"}});
  const auto l = load_for_inference(f);
  const auto ev = evaluate(l.ckpt.spec, l.ckpt.state, l.split.test, parse_encoder_kind(f.encoder),
                           f.batch, l.ckpt.seed);
  const auto report = estimate(l.ckpt.spec, ev.sparsity, hw);
  std::printf("test accuracy %.4f, aggregate firing rate %.5f\n", ev.accuracy, ev.sparsity.rate());
  print_cost_table(std::cout, report, f.pipeline);
  write_cost_csv_header(std::cout);
  write_cost_csv_row(std::cout, report);
  if (!f.csv.empty()) {
    const bool fresh = !fs::exists(f.csv) || fs::file_size(f.csv) == 0;
    std::ofstream out(f.csv, std::ios::app);
    if (!out) throw DataError("cannot write '" + f.csv + "'");
    if (fresh) write_cost_csv_header(out);
    write_cost_csv_row(out, report);
  }
  return kExitOk;
}

// ---- sweep ---------------------------------------------------------------

struct SweepFlags {
  std::string grid;
  std::string out_dir = "sweep_out";
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool resume = false;
  std::size_t stop_after = 0;
};

int sweep_cmd(const SweepFlags& f) {
  const auto grid = SweepGrid::load(f.grid);
  const auto points = grid.points();
  std::cout << "# sweep configuration (resolved)\n";
  std::istringstream text(grid.to_text());
  for (std::string line; std::getline(text, line);) std::cout << "#   " << line << "\n";
  std::cout << "#   out_dir = " << f.out_dir << "\n#   workers = " << f.workers
            << "\n#   resume = " << (f.resume ? 1 : 0) << "\n#   points = " << points.size()
            << " x " << grid.repeats << " repeats\n";
  std::cout.flush();

  SweepOptions opts;
  opts.out_dir = f.out_dir;
  opts.workers = f.workers;
  opts.resume = f.resume;
  if (f.stop_after > 0) opts.max_new_runs = f.stop_after;
  opts.on_row = [](const SweepRow& r) {
    std::printf("%-40s rep %s  acc %.4f  fire %.4f  FPS/W %.2f  %s\n", r.point_key.c_str(),
                r.repeat.c_str(), r.test_acc, r.mean_fire_rate, r.fps_per_w, r.status.c_str());
    std::fflush(stdout);
  };
  const auto result = run_sweep(grid, opts);
  std::printf("%zu new runs, %zu rows\n", result.new_runs, result.rows.size());
  if (!result.complete) {
    std::printf("sweep incomplete; rerun with --resume to finish\n");
    return kExitOk;
  }
  std::printf("results: %s\n", (fs::path(f.out_dir) / "sweep.csv").string().c_str());
  if (result.means().empty()) return kExitOk;
  const auto& acc = best_accuracy(result);
  const auto& eff = best_efficiency(result);
  const auto d = compare(result, eff.point_key, acc.point_key);
  std::printf("best accuracy   %s  acc %.4f  latency %.4e s  FPS/W %.2f\n", acc.point_key.c_str(),
              acc.test_acc, acc.latency_s, acc.fps_per_w);
  std::printf("best FPS/W      %s  acc %.4f  latency %.4e s  FPS/W %.2f\n", eff.point_key.c_str(),
              eff.test_acc, eff.latency_s, eff.fps_per_w);
  std::printf("efficiency vs accuracy point: latency %+.2f%%, accuracy %+.2f pts, FPS/W x%.3f\n",
              100.0 * d.latency_delta_rel, 100.0 * d.accuracy_delta, d.fps_per_w_ratio);
  std::printf("pareto frontier (accuracy vs FPS/W):\n");
  for (const auto& p : frontier(result)) {
    std::printf("  %-40s acc %.4f  FPS/W %.2f\n", p.key.c_str(), p.accuracy, p.fps_per_w);
  }
  return kExitOk;
}

// ---- export-plots -------------------------------------------------------------

struct ExportFlags {
  std::string in = "sweep_out/sweep.csv";
  std::string out_dir = "plots";
};

std::string group_name(const std::string& prefix, const std::vector<std::string>& parts) {
  std::string s = prefix;
  for (const auto& p : parts) s += "_" + p;
  return s + ".tsv";
}

int export_cmd(const ExportFlags& f) {
  print_config("export-plots", {{"in", f.in}, {"out_dir", f.out_dir}});
  std::ifstream in(f.in);
  if (!in) throw DataError("cannot open sweep CSV '" + f.in + "'");
  const auto result = read_sweep_csv(in);
  fs::create_directories(f.out_dir);
  const auto open = [&](const std::string& name) {
    std::ofstream os(fs::path(f.out_dir) / name, std::ios::trunc);
    if (!os) throw DataError("cannot write '" + name + "'");
    return os;
  };
  std::vector<std::string> written;

  {
    auto os = open("points.tsv");
    os << "point_key\tsurrogate\tscale\tbeta\ttheta\tacc_mean\tacc_min\tacc_max\tfire_rate\t"
          "latency_s\tfps_per_w\n";
    for (const auto& m : result.means()) {
      const auto* lo = result.find(m.point_key, "min");
      const auto* hi = result.find(m.point_key, "max");
      os << m.point_key << '\t' << to_string(m.surrogate) << '\t' << format_double(m.scale) << '\t'
         << format_double(m.beta) << '\t' << format_double(m.theta) << '\t'
         << format_double(m.test_acc) << '\t' << format_double(lo ? lo->test_acc : m.test_acc)
         << '\t' << format_double(hi ? hi->test_acc : m.test_acc) << '\t'
         << format_double(m.mean_fire_rate) << '\t' << format_double(m.latency_s) << '\t'
         << format_double(m.fps_per_w) << '\n';
    }
    written.push_back("points.tsv");
  }
  {
    auto os = open("frontier.tsv");
    os << "point_key\taccuracy\tfps_per_w\n";
    for (const auto& p : frontier(result)) {
      os << p.key << '\t' << format_double(p.accuracy) << '\t' << format_double(p.fps_per_w) << '\n';
    }
    written.push_back("frontier.tsv");
  }

  // Scale series: one file per (surrogate, beta, theta) group with several scales.
  std::map<std::vector<std::string>, std::vector<SweepRow>> series;
  // Beta x theta grids: one set per (surrogate, scale) group.
  std::map<std::vector<std::string>, std::vector<SweepRow>> grids;
  for (const auto& m : result.means()) {
    series[{to_string(m.surrogate), "b" + format_double(m.beta), "t" + format_double(m.theta)}]
        .push_back(m);
    grids[{to_string(m.surrogate), "k" + format_double(m.scale)}].push_back(m);
  }
  for (const auto& [key, rows] : series) {
    if (rows.size() < 2) continue;
    const auto name = group_name("scale_series", key);
    auto os = open(name);
    os << "scale\tacc_mean\tfire_rate\tfps_per_w\n";
    for (const auto& r : rows) {
      os << format_double(r.scale) << '\t' << format_double(r.test_acc) << '\t'
         << format_double(r.mean_fire_rate) << '\t' << format_double(r.fps_per_w) << '\n';
    }
    written.push_back(name);
  }
  for (const auto& [key, rows] : grids) {
    std::set<double> betas, thetas;
    for (const auto& r : rows) {
      betas.insert(r.beta);
      thetas.insert(r.theta);
    }
    if (betas.size() < 2 && thetas.size() < 2) continue;
    const std::vector<std::pair<std::string, double SweepRow::*>> metrics = {
        {"accuracy", &SweepRow::test_acc},
        {"latency_s", &SweepRow::latency_s},
        {"fps_per_w", &SweepRow::fps_per_w},
        {"fire_rate", &SweepRow::mean_fire_rate}};
    for (const auto& [metric, field] : metrics) {
      auto parts = key;
      parts.push_back(metric);
      const auto name = group_name("beta_theta", parts);
      auto os = open(name);
      os << "beta\\theta";
      for (double t : thetas) os << '\t' << format_double(t);
      os << '\n';
      for (double b : betas) {
        os << format_double(b);
        for (double t : thetas) {
          os << '\t';
          for (const auto& r : rows)
            if (r.beta == b && r.theta == t) os << format_double(r.*field);
        }
        os << '\n';
      }
      written.push_back(name);
    }
  }
  for (const auto& w : written) std::cout << "wrote " << (fs::path(f.out_dir) / w).string() << "\n";
  return kExitOk;
}

// ---- gen-data ---------------------------------------------------------------

struct GenFlags {
  std::string out = "data";
  DataFlags data;
};

int gen_cmd(const GenFlags& f) {
  auto source = f.data.source;
  source.synthetic = true;
  print_config("gen-data", {{"data", source.describe()}, {"out", f.out}});
  const auto ds = source.load();
  fs::create_directories(f.out);
  const auto images = (fs::path(f.out) / kIdxImagesFile).string();
  const auto labels = (fs::path(f.out) / kIdxLabelsFile).string();
  save_idx(ds, images, labels);
  std::cout << "wrote " << ds.size() << " samples to " << images << " and " << labels << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"snnkit: spiking network training, sparsity and accelerator cost toolkit"};
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train_app = app.add_subcommand("train", "train a spiking network and write a checkpoint");
  train_app->add_option("--arch", tf.arch, "architecture string, e.g. 32C3-P2-32C3-MP2-256-10")
      ->capture_default_str();
  train_app->add_option("--surrogate", tf.surrogate, "arctangent | fast_sigmoid")
      ->capture_default_str();
  train_app->add_option("--scale", tf.scale,
                        "surrogate derivative scale (alpha or k, dimensionless, > 0)")
      ->capture_default_str();
  train_app->add_option("--beta", tf.beta, "membrane leak factor in [0,1]")->capture_default_str();
  train_app->add_option("--theta", tf.theta, "firing threshold (> 0, potential units)")
      ->capture_default_str();
  train_app->add_option("--timesteps", tf.timesteps, "simulation timesteps T per sample")
      ->capture_default_str();
  train_app->add_option("--epochs", tf.epochs, "training epochs (0 writes the initial weights)")
      ->capture_default_str();
  train_app->add_option("--lr", tf.lr, "base learning rate for cosine annealing")
      ->capture_default_str();
  train_app->add_option("--batch", tf.batch, "mini-batch size (samples)")->capture_default_str();
  train_app->add_option("--seed", tf.seed, "run seed (init, batch order, encoder)")
      ->capture_default_str();
  train_app->add_option("--optimizer", tf.optimizer, "adam | sgd")->capture_default_str();
  train_app->add_option("--momentum", tf.momentum, "sgd momentum in [0,1)")->capture_default_str();
  train_app->add_option("--encoder", tf.encoder, "direct_current | rate_bernoulli")
      ->capture_default_str();
  train_app->add_flag("--clip", tf.clip, "clip the global gradient norm at 10");
  train_app->add_flag("--attached-reset", tf.attached_reset,
                      "backpropagate through the reset term as well");
  train_app->add_flag("--uncentered", tf.uncentered,
                      "evaluate the surrogate at u instead of u - theta");
  train_app->add_option("--out", tf.out, "checkpoint path")->capture_default_str();
  train_app->add_option("--metrics", tf.metrics, "per-epoch metrics CSV path")->capture_default_str();
  add_data_flags(train_app, tf.data);

  EvalFlags ef;
  auto* eval_app = app.add_subcommand("eval", "accuracy and firing rates of a checkpoint");
  EvalFlags cf;
  auto* cost_app = app.add_subcommand("cost", "modeled accelerator latency, power and FPS/W");
  for (auto [sub, flags] : {std::pair{eval_app, &ef}, std::pair{cost_app, &cf}}) {
    sub->add_option("--checkpoint", flags->checkpoint, "checkpoint path")->capture_default_str();
    sub->add_option("--encoder", flags->encoder, "direct_current | rate_bernoulli")
        ->capture_default_str();
    sub->add_option("--batch", flags->batch, "inference batch size (samples)")
        ->capture_default_str();
    add_data_flags(sub, flags->data);
  }
  cost_app->add_option("--hw-config", cf.hw_config,
                       "accelerator config file (key = value, SI units); defaults built in");
  cost_app->add_flag("--pipeline", cf.pipeline, "also report pipelined steady-state FPS");
  cost_app->add_option("--csv", cf.csv, "append the cost row to this CSV file");

  SweepFlags sf;
  auto* sweep_app = app.add_subcommand("sweep", "run a hyperparameter grid");
  sweep_app->add_option("--grid", sf.grid, "grid definition file")->required();
  sweep_app->add_option("--out-dir", sf.out_dir, "directory for grid.cfg, journal.csv, sweep.csv")
      ->capture_default_str();
  sweep_app->add_option("--workers", sf.workers, "parallel training runs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep_app->add_flag("--resume", sf.resume, "skip runs already recorded in the journal");
  sweep_app->add_option("--stop-after", sf.stop_after,
                        "stop after this many new runs (0 = run everything)")
      ->capture_default_str();

  ExportFlags xf;
  auto* export_app =
      app.add_subcommand("export-plots", "derive TSV plot series from a sweep CSV");
  export_app->add_option("--in", xf.in, "sweep CSV")->capture_default_str();
  export_app->add_option("--out-dir", xf.out_dir, "output directory")->capture_default_str();

  GenFlags gf;
  auto* gen_app = app.add_subcommand("gen-data", "write the synthetic dataset as IDX files");
  gen_app->add_option("--out", gf.out, "output directory")->capture_default_str();
  add_data_flags(gen_app, gf.data);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_app) return train_cmd(tf);
    if (*eval_app) return eval_cmd(ef);
    if (*cost_app) return cost_cmd(cf);
    if (*sweep_app) return sweep_cmd(sf);
    if (*export_app) return export_cmd(xf);
    if (*gen_app) return gen_cmd(gf);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace snn::cli
