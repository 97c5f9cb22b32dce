// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance [AC1 AC4 ...]   (no arguments runs everything)

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "snn/data.hpp"
#include "snn/error.hpp"
#include "snn/hwmodel.hpp"
#include "snn/learning.hpp"
#include "snn/network.hpp"
#include "snn/neuron.hpp"
#include "snn/sweep.hpp"

using namespace snn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& text) { notes.push_back(text); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path work_root() {
  static const fs::path dir = [] {
    auto d = fs::current_path() / "acceptance_work";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + SNNKIT_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the final comma-separated column (wall-clock) of every line.
std::string strip_last_column(const std::string& text) {
  std::stringstream in(text), out;
  for (std::string line; std::getline(in, line);) {
    const auto cut = line.rfind(',');
    out << (cut == std::string::npos ? line : line.substr(0, cut)) << "\n";
  }
  return out.str();
}

NetworkSpec desk_spec(std::size_t side = 12) {
  NetworkSpec s;
  s.layers = parse_arch("8C3-MP2-32-10");
  s.input = {1, side, side};
  s.timesteps = 10;
  return s;
}

// ---- AC1 -------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  Rng rng(101);
  std::size_t mismatches = 0, spikes = 0;
  for (int n = 0; n < 10000; ++n) {
    const double beta = rng.uniform();
    const double theta = 2.0 - 2.0 * rng.uniform();  // (0, 2]
    const double hi = rng.uniform(0.0, 3.0);
    const double u0 = rng.uniform(-1.0, 3.0);
    oracle::Vec currents(100);
    for (auto& c : currents) c = rng.uniform(-0.5, hi);
    const auto ref = oracle::lif_trajectory(beta, theta, currents, u0);
    MembraneState st{Tensor({1}, {u0})};
    const LifParams p{beta, theta};
    for (std::size_t t = 0; t < 100; ++t) {
      auto r = lif_step(st, Tensor({1}, {currents[t]}), p);
      if (r.spikes[0] != ref.spikes[t] || r.state.u[0] != ref.potentials[t]) ++mismatches;
      spikes += ref.spikes[t];
      st = std::move(r.state);
    }
  }
  o.require(mismatches == 0, fmt("%zu of 1000000 steps differ from the scalar oracle", mismatches));
  o.note(fmt("10000 trajectories x 100 steps, %zu spikes, %zu mismatches", spikes, mismatches));
  return o;
}

// ---- AC2 -------------------------------------------------------------------

Outcome ac2() {
  Outcome o;
  Rng rng(202);
  double worst = 0.0;
  std::size_t checked = 0;
  while (checked < 1000) {
    const auto kind = checked % 2 == 0 ? SurrogateKind::arctangent : SurrogateKind::fast_sigmoid;
    const double scale = std::exp2(rng.uniform(-2.0, 5.0));  // 0.25 .. 32
    const double u = rng.uniform(-4.0, 4.0);
    const double h = 1e-3 / std::max(1.0, scale);
    if (kind == SurrogateKind::fast_sigmoid && std::abs(u) < 2.0 * h) continue;  // kink at 0
    const SurrogateSpec spec{kind, scale, true};
    const auto fwd = [&](double x) { return surrogate_forward(Tensor({1}, {x}), spec)[0]; };
    const double fd = oracle::derivative(fwd, u, h);
    const double an = surrogate_derivative(Tensor({1}, {u}), spec)[0];
    worst = std::max(worst, oracle::rel_err(fd, an));
    ++checked;
  }
  o.require(worst <= 1e-7, fmt("worst relative error %.3e > 1e-7", worst));

  bool exact = true;
  for (double theta : {0.5, 1.0, 1.7})
    for (double a : {0.5, 2.0, 7.0, 32.0}) {
      const Tensor u({1}, {theta});
      exact &= backward_spike_grad(u, {SurrogateKind::fast_sigmoid, a, true}, theta)[0] == 1.0;
      exact &= backward_spike_grad(u, {SurrogateKind::arctangent, a, true}, theta)[0] == a / 2.0;
    }
  o.require(exact, "derivative at u = theta is not exactly 1 (fast sigmoid) / alpha/2 (arctangent)");
  o.note(fmt("1000 points, worst relative error %.3e; values at u = theta exact", worst));
  return o;
}

// ---- AC3 -------------------------------------------------------------------

Outcome ac3() {
  Outcome o;
  NetworkSpec s;
  s.layers = parse_arch("32-10");
  s.input = {1, 8, 8};
  s.timesteps = 6;
  s.lif = {0.7, 1.0};
  s.surrogate = {SurrogateKind::fast_sigmoid, 1.0, true};
  Rng rng(303);
  auto st = init_state(s, rng);
  for (auto& w : st.weights)
    for (auto& v : w.data()) v *= 0.05;
  Tensor x({6, 4, 1, 8, 8});
  for (auto& v : x.data()) v = rng.uniform(0.05, 1.0);
  const std::vector<std::size_t> labels{2, 7, 0, 9};

  // Hard-threshold forward and peak potential: no spike may occur anywhere.
  const auto hard = forward(s, st, x);
  double peak = -1e300;
  for (const auto& l : hard.layers)
    for (const auto& u : l.membrane)
      for (double v : u.data()) peak = std::max(peak, v);
  o.require(count_spikes(s, hard.layers).total_spikes() == 0.0, "weights do not keep the net silent");

  const BackwardOptions opts{true, 1.0, Activation::surrogate_relaxed};
  const auto r = bptt(s, st, x, labels, opts);
  const auto loss = [&](const NetworkState& p) {
    const auto f = forward(s, p, x, {false, Activation::surrogate_relaxed});
    return rate_cross_entropy_loss(f.counts, labels, s.timesteps).loss;
  };
  double worst = 0.0;
  Rng pick(304);
  for (int n = 0; n < 100; ++n) {
    const std::size_t li = n % 2;
    const std::size_t k = pick.below(st.weights[li].size());
    const double fd = oracle::derivative(
        [&](double v) {
          auto p = st;
          p.weights[li][k] = v;
          return loss(p);
        },
        st.weights[li][k], 1e-4);
    worst = std::max(worst, oracle::rel_err(fd, r.grads.grads[li][k]));
  }
  o.require(worst <= 1e-6, fmt("worst relative error %.3e > 1e-6", worst));
  o.note(fmt("2-layer 64-32-10 net, T=6, B=4, peak potential %.3f < theta; 100 weights, worst "
             "relative error %.3e",
             peak, worst));
  return o;
}

// ---- AC4 -------------------------------------------------------------------

Outcome ac4() {
  Outcome o;
  const DataSource src;  // synthetic, 10 classes, 60 per class, 12x12, noise 0.3
  const auto split = src.load_split();
  const auto spec = desk_spec();
  int passing = 0;
  std::string accs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    const auto r = train(spec, split, cfg);
    const double acc = r.metrics.back().test_acc;
    passing += acc >= 0.90;
    accs += fmt("%s%.4f", seed > 1 ? ", " : "", acc);
  }
  o.require(passing >= 4, fmt("only %d of 5 seeds reached 90%%", passing));
  o.note("data: " + src.describe());
  o.note(fmt("8C3-MP2-32-10, T=10, 25 epochs, Adam 1e-3 cosine; test accuracy per seed: %s "
             "(%d/5 >= 0.90)",
             accs.c_str(), passing));
  return o;
}

// ---- AC5 / AC6 ---------------------------------------------------------------

// Firing rate of a one-neuron network under a constant input current, read
// from the spike count the network reports.
double network_rate(double beta, double theta, double current, std::size_t steps) {
  NetworkSpec s;
  s.layers = parse_arch("1");
  s.input = {1, 1, 1};
  s.timesteps = steps;
  s.lif = {beta, theta};
  NetworkState st = zero_state(s);
  st.weights[0] = Tensor({1, 1}, {current});
  const auto r = forward(s, st, Tensor({steps, 1, 1, 1, 1}, 1.0), {false});
  return r.counts[0] / static_cast<double>(steps);
}

Outcome ac5() {
  Outcome o;
  const std::size_t steps = 200;
  for (double beta : {0.25, 0.5}) {
    for (double current : {2.1, 2.5, 3.0}) {
      std::string line = fmt("beta %.2f, current %.1f: rate", beta, current);
      double prev = 2.0;
      bool strict_drop = false;
      for (double theta : {0.5, 1.0, 1.5, 2.0}) {
        const double rate = network_rate(beta, theta, current, steps);
        const double ref = oracle::emitted_rate(beta, theta, current, steps);
        o.require(rate == ref, fmt("rate %.6f differs from oracle %.6f", rate, ref));
        o.require(rate <= prev, fmt("rate rose from %.4f to %.4f at theta %.1f", prev, rate, theta));
        strict_drop |= rate < prev && prev <= 1.0;
        prev = rate;
        line += fmt(" %.3f", rate);
      }
      o.require(strict_drop, "rate never decreased across theta");
      o.note(line + "  (theta 0.5, 1.0, 1.5, 2.0)");
    }
  }
  return o;
}

Outcome ac6() {
  Outcome o;
  const std::size_t steps = 200;
  for (double theta : {1.0, 1.5}) {
    for (double current : {0.4, 0.8, 1.2}) {
      std::string line = fmt("theta %.1f, current %.1f: rate", theta, current);
      double prev = -1.0;
      for (double beta : {0.1, 0.25, 0.5, 0.7, 0.9}) {
        const double rate = network_rate(beta, theta, current, steps);
        const double ref = oracle::emitted_rate(beta, theta, current, steps);
        o.require(rate == ref, fmt("rate %.6f differs from oracle %.6f", rate, ref));
        o.require(rate >= prev, fmt("rate fell from %.4f to %.4f at beta %.2f", prev, rate, beta));
        prev = rate;
        line += fmt(" %.3f", rate);
      }
      o.note(line + "  (beta 0.1, 0.25, 0.5, 0.7, 0.9)");
    }
  }
  return o;
}

// ---- AC7 -------------------------------------------------------------------

SparsityReport synthetic_report(const NetworkSpec& s, double input_events,
                                const std::vector<double>& spikes) {
  SparsityReport r;
  r.samples = 1;
  r.input_events = input_events;
  r.input_slots = 1e9;
  for (std::size_t i = 0; i < s.layers.size(); ++i)
    r.layers.push_back({i, s.layers[i].kind, spikes[i], 1e9});
  return r;
}

Outcome ac7() {
  Outcome o;
  // Hand-computed two-layer example: 4C3 on 1x6x6 (64 neurons), MP2 (64 pooled
  // slots folded into the next layer), dense 3; T=5, 2 lanes, 1 MHz.
  {
    NetworkSpec s;
    s.layers = parse_arch("4C3-MP2-3");
    s.input = {1, 6, 6};
    s.timesteps = 5;
    HwConfig hw;
    hw.clock_hz = 1e6;
    hw.lanes = 2;
    const auto r = estimate(s, synthetic_report(s, 30, {20, 8, 4}), hw);
    // conv fanout = 4*9*16/36 = 16: ceil(30*16/2) + 64*5/2 = 240 + 160
    // dense: ceil(8*3/2) + (3+64)*5/2 = 12 + 167.5
    o.require(r.layers.size() == 2 && r.layers[0].cycles == 400.0 && r.layers[1].cycles == 179.5,
              "hand-computed per-layer cycles");
    o.require(r.total_cycles == 579.5 && r.latency_s == 579.5 / 1e6, "hand-computed latency");
    o.note(fmt("hand example: layer cycles %.1f + %.1f = %.1f, latency %.4e s", r.layers[0].cycles,
               r.layers[1].cycles, r.total_cycles, r.latency_s));
  }
  NetworkSpec s = desk_spec();
  Rng rng(707);
  std::size_t cases = 0, power_checked = 0, power_rises = 0;
  double worst_rise = 0.0;
  for (int n = 0; n < 1000; ++n) {
    // Even cases: one lane and whole event counts, where the ceil in the event
    // term is exact and average power is provably monotone. Odd cases: anything.
    const bool exact_regime = n % 2 == 0;
    HwConfig hw;
    hw.clock_hz = rng.uniform(1e6, 1e9);
    hw.lanes = exact_regime ? 1 : 1 + rng.below(64);
    hw.static_power_w = rng.uniform(0.0, 2.0);
    const auto draw = [&](double hi) {
      const double v = rng.uniform(0, hi);
      return exact_regime ? std::floor(v) : v;
    };
    std::vector<double> spikes{draw(4000), draw(1000), draw(300), draw(20)};
    const double in = draw(1440);
    const auto base = estimate(s, synthetic_report(s, in, spikes), hw);

    o.require(base.fps == 1.0 / base.latency_s, "FPS != 1/latency");
    o.require(std::abs(base.fps * base.latency_s - 1.0) <= 0x1p-52, "FPS*latency != 1");
    o.require(base.fps_per_w == base.fps / base.avg_power_w, "FPS/W != FPS/power");

    auto lower = spikes;
    for (auto& v : lower) v = exact_regime ? std::floor(v * rng.uniform()) : v * rng.uniform();
    const double lower_in = exact_regime ? std::floor(in * rng.uniform()) : in;
    const auto low = estimate(s, synthetic_report(s, lower_in, lower), hw);
    o.require(low.latency_s <= base.latency_s, "lower firing raised latency");
    o.require(low.dynamic_energy_j <= base.dynamic_energy_j, "lower firing raised energy");
    if (exact_regime) {
      ++power_checked;
      o.require(low.avg_power_w <= base.avg_power_w,
                fmt("lower firing raised power %.17g -> %.17g", base.avg_power_w, low.avg_power_w));
    } else if (low.avg_power_w > base.avg_power_w) {
      ++power_rises;
      worst_rise = std::max(worst_rise, low.avg_power_w / base.avg_power_w - 1.0);
    }

    auto halved = spikes;
    for (auto& v : halved) v /= 2;
    const auto half = estimate(s, synthetic_report(s, in / 2, halved), hw);
    o.require(half.dynamic_energy_j < base.dynamic_energy_j || in + spikes[0] == 0,
              "halving rates did not lower energy");
    o.require(half.latency_s <= base.latency_s, "halving rates raised latency");

    HwConfig fast = hw;
    fast.clock_hz = 2 * hw.clock_hz;
    const auto f = estimate(s, synthetic_report(s, in, spikes), fast);
    o.require(f.latency_s == base.latency_s / 2 && f.fps == 2 * base.fps &&
                  f.dynamic_energy_j == base.dynamic_energy_j,
              "doubling the clock is not an exact halving of latency");
    ++cases;
  }
  o.note(fmt("%zu random configurations: latency and energy monotone, FPS*latency, FPS/W "
             "identity and clock covariance hold",
             cases));
  o.note(fmt("power monotone in all %zu one-lane whole-event cases", power_checked));
  o.note(fmt("REPORTED: with fractional events and many lanes, the ceil in the event term let "
             "average power rise in %zu of %zu cases (largest relative rise %.2e)",
             power_rises, cases - power_checked, worst_rise));
  return o;
}

// ---- AC8 / AC9 ---------------------------------------------------------------

SweepResult run_shipped_grid(const std::string& file, const std::string& out, Outcome& o) {
  const auto grid = SweepGrid::load(std::string(SNN_CONFIG_DIR) + "/" + file);
  SweepOptions opts;
  opts.out_dir = (work_root() / out).string();
  opts.workers = workers();
  const auto r = run_sweep(grid, opts);
  std::size_t ok = 0, runs = 0;
  for (const auto& row : r.rows)
    if (!row.aggregate()) {
      ++runs;
      ok += row.ok();
    }
  o.note(fmt("%s: %zu points x %zu repeats, %zu/%zu runs ok, results in %s", file.c_str(),
             grid.points().size(), grid.repeats, ok, runs, opts.out_dir.c_str()));
  o.require(r.complete && runs == grid.points().size() * grid.repeats, "sweep incomplete");
  return r;
}

Outcome ac8() {
  Outcome o;
  const auto r = run_shipped_grid("grid_beta_theta.cfg", "beta_theta", o);
  const auto means = r.means();
  o.note("beta  theta  acc_mean  fire_rate  latency_s    FPS/W");
  for (const auto& m : means) {
    o.note(fmt("%4.2f  %4.2f   %.4f    %.5f   %.4e  %9.1f", m.beta, m.theta, m.test_acc,
               m.mean_fire_rate, m.latency_s, m.fps_per_w));
  }
  const auto front = frontier(r);
  std::string keys;
  for (const auto& p : front) keys += " " + p.key;
  o.note(fmt("pareto frontier (%zu points):", front.size()) + keys);
  o.require(front.size() >= 2, "frontier has fewer than 2 points");

  const auto& acc = best_accuracy(r);
  const auto& eff = best_efficiency(r);
  const auto d = compare(r, eff.point_key, acc.point_key);
  o.note(fmt("best accuracy %s (acc %.4f), best FPS/W %s (acc %.4f)", acc.point_key.c_str(),
             acc.test_acc, eff.point_key.c_str(), eff.test_acc));
  o.note(fmt("best-FPS/W vs best-accuracy: latency %+.2f%%, accuracy %+.2f pts, FPS/W x%.3f",
             100 * d.latency_delta_rel, 100 * d.accuracy_delta, d.fps_per_w_ratio));
  o.require(d.latency_delta_rel < 0.0, "no latency reduction between best-FPS/W and best-accuracy");

  // Reported only: the largest latency cut within 5 accuracy points of the best.
  const SweepRow* pick = nullptr;
  for (const auto& m : means) {
    if (acc.test_acc - m.test_acc > 0.05) continue;
    if (pick == nullptr || m.latency_s < pick->latency_s) pick = &m;
  }
  const auto pd = compare_rows(*pick, acc);
  o.note(fmt("REPORTED: within 5 pts of best accuracy, %s cuts latency by %.2f%% at %.2f pts "
             "accuracy loss (%s the >=40%% / <=5%% target; reference figures 48%% / 2.88%%)",
             pick->point_key.c_str(), -100 * pd.latency_delta_rel, -100 * pd.accuracy_delta,
             (-pd.latency_delta_rel >= 0.40) ? "meets" : "misses"));
  const SweepRow* ref_default = nullptr;
  for (const auto& m : means)
    if (m.beta == 0.25 && m.theta == 1.0) ref_default = &m;
  for (const auto& m : means)
    if (m.beta == 0.5 && m.theta == 1.5 && ref_default != nullptr) {
      const auto dd = compare_rows(m, *ref_default);
      o.note(fmt("REPORTED: beta 0.5 / theta 1.5 vs default beta 0.25 / theta 1.0: latency "
                 "%+.2f%%, accuracy %+.2f pts, FPS/W x%.3f",
                 100 * dd.latency_delta_rel, 100 * dd.accuracy_delta, dd.fps_per_w_ratio));
    }
  return o;
}

Outcome ac9() {
  Outcome o;
  const auto r = run_shipped_grid("grid_surrogate.cfg", "surrogate", o);
  o.note("surrogate      scale  acc_mean  fire_rate    FPS/W");
  const SweepRow* best[2] = {nullptr, nullptr};
  const auto means = r.means();
  for (const auto& m : means) {
    o.note(fmt("%-13s %6.2f   %.4f    %.5f  %8.1f", to_string(m.surrogate).c_str(), m.scale,
               m.test_acc, m.mean_fire_rate, m.fps_per_w));
    auto& b = best[m.surrogate == SurrogateKind::fast_sigmoid ? 1 : 0];
    if (b == nullptr || m.test_acc > b->test_acc) b = &m;
  }
  o.require(best[0] != nullptr && best[1] != nullptr, "a surrogate has no successful point");
  if (best[0] && best[1]) {
    // Several scales can tie at the top; the lowest scale wins the tie.
    std::size_t ties[2] = {0, 0};
    for (const auto& m : means) {
      const int i = m.surrogate == SurrogateKind::fast_sigmoid ? 1 : 0;
      ties[i] += m.test_acc == best[i]->test_acc;
    }
    o.note(fmt("%zu arctangent and %zu fast_sigmoid scales tie at their best accuracy", ties[0],
               ties[1]));
    o.note(fmt("REPORTED: best-accuracy arctangent %s acc %.4f fire %.5f FPS/W %.1f",
               best[0]->point_key.c_str(), best[0]->test_acc, best[0]->mean_fire_rate,
               best[0]->fps_per_w));
    o.note(fmt("REPORTED: best-accuracy fast_sigmoid %s acc %.4f fire %.5f FPS/W %.1f",
               best[1]->point_key.c_str(), best[1]->test_acc, best[1]->mean_fire_rate,
               best[1]->fps_per_w));
    o.note(fmt("REPORTED: fast sigmoid fires %s than arctangent at their best-accuracy points "
               "(%.5f vs %.5f; reference finding: fast sigmoid fires less)",
               best[1]->mean_fire_rate < best[0]->mean_fire_rate ? "less" : "more or equal",
               best[1]->mean_fire_rate, best[0]->mean_fire_rate));
  }
  return o;
}

// ---- AC10 ------------------------------------------------------------------

// Starts snnkit in the background, kills it with SIGKILL once `journal` holds
// at least `rows` data rows, and returns the number of rows seen at the kill.
std::size_t run_and_kill(const std::vector<std::string>& args, const fs::path& journal,
                         std::size_t rows) {
  const pid_t pid = fork();
  if (pid == 0) {
    const int fd = ::open("/dev/null", O_WRONLY);
    if (fd >= 0) {
      dup2(fd, 1);
      dup2(fd, 2);
    }
    std::vector<char*> argv;
    std::string bin = SNNKIT_PATH;
    argv.push_back(bin.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    execv(bin.c_str(), argv.data());
    _exit(127);
  }
  std::size_t seen = 0;
  for (int i = 0; i < 60000; ++i) {
    // Complete (newline-terminated) run rows only.
    const auto text = slurp(journal);
    std::size_t n = 0;
    for (std::size_t pos = 0, eol; (eol = text.find('\n', pos)) != std::string::npos; pos = eol + 1)
      n += text.compare(pos, 2, "p0") == 0;
    seen = n;
    if (seen >= rows) break;
    int status = 0;
    if (waitpid(pid, &status, WNOHANG) == pid) return seen;  // finished before the kill
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  kill(pid, SIGKILL);
  int status = 0;
  waitpid(pid, &status, 0);
  return seen;
}

Outcome ac10() {
  Outcome o;
  const auto dir = work_root() / "determinism";
  fs::create_directories(dir);

  // Two identical seeded CLI training runs.
  const std::string train = "train --epochs 25 --seed 3";
  for (const char* tag : {"a", "b"}) {
    const int code = run_cli(train + " --out " + (dir / (std::string(tag) + ".snnb")).string() +
                                 " --metrics " + (dir / (std::string(tag) + ".csv")).string(),
                             dir / (std::string(tag) + ".log"));
    o.require(code == 0, fmt("train run %s exited %d", tag, code));
  }
  const auto ma = slurp(dir / "a.csv"), mb = slurp(dir / "b.csv");
  o.require(!ma.empty() && strip_last_column(ma) == strip_last_column(mb),
            "metrics CSVs differ outside the wall-clock column");
  o.require(slurp(dir / "a.snnb") == slurp(dir / "b.snnb"), "checkpoints differ");
  o.note(fmt("two seeded 25-epoch runs: metrics CSVs identical apart from wallclock_s (%zu "
             "bytes), checkpoints byte-identical",
             ma.size()));

  // Kill a sweep mid-run, resume it, compare with an uninterrupted run.
  const auto grid = dir / "grid.cfg";
  std::ofstream(grid) << "name = resume_check\narch = 8C3-MP2-32-10\ntimesteps = 10\nepochs = 6\n"
                         "axis.beta = 0.25,0.5\naxis.theta = 1.0,1.5\nrepeats = 2\n"
                         "hw_config = " SNN_CONFIG_DIR "/hw_default.cfg\n";
  const std::string common = "sweep --grid " + grid.string() + " --workers 1 --out-dir ";
  o.require(run_cli(common + (dir / "full").string(), dir / "full.log") == 0,
            "uninterrupted sweep failed");
  const auto killed = run_and_kill(
      {"sweep", "--grid", grid.string(), "--workers", "1", "--out-dir", (dir / "cut").string()},
      dir / "cut" / "journal.csv", 3);
  o.require(!fs::exists(dir / "cut" / "sweep.csv"), "killed sweep already finished");
  o.require(run_cli(common + (dir / "cut").string() + " --resume", dir / "resume.log") == 0,
            "resumed sweep failed");
  const auto resume_log = slurp(dir / "resume.log");
  const auto full = slurp(dir / "full" / "sweep.csv"), cut = slurp(dir / "cut" / "sweep.csv");
  o.require(!full.empty() && strip_last_column(full) == strip_last_column(cut),
            "resumed sweep CSV differs from the uninterrupted one");
  const auto pos = resume_log.find(" new runs");
  const auto start = resume_log.rfind('\n', pos) + 1;
  o.note(fmt("sweep killed (SIGKILL) with %zu complete journal rows of 8; resume reported \"%s\"; final "
             "CSVs identical apart from wallclock_s",
             killed, resume_log.substr(start, pos + 9 - start).c_str()));
  return o;
}

// ---- AC11 ------------------------------------------------------------------

Outcome ac11() {
  Outcome o;
  const auto dir = work_root() / "formats";
  fs::create_directories(dir);

  const auto spec = desk_spec();
  const Checkpoint ck{spec, initial_state(spec, 77), 77};
  const auto p1 = (dir / "one.snnb").string(), p2 = (dir / "two.snnb").string();
  save_checkpoint(p1, ck);
  const auto back = load_checkpoint(p1);
  save_checkpoint(p2, back);
  o.require(back.spec == spec && back.state == ck.state && back.seed == 77,
            "checkpoint contents changed on reload");
  o.require(slurp(p1) == slurp(p2), "checkpoint bytes changed on re-save");

  const int code = run_cli("gen-data --out " + (dir / "idx").string(), dir / "gen.log");
  o.require(code == 0, fmt("gen-data exited %d", code));
  const DataSource src;
  const auto ds = load_idx((dir / "idx" / kIdxImagesFile).string(),
                           (dir / "idx" / kIdxLabelsFile).string(), src.classes);
  o.require(ds == src.load(), "gen-data IDX files do not reload to the generated dataset");

  // Corrupt the label magic.
  auto bytes = slurp(dir / "idx" / kIdxLabelsFile);
  bytes[3] = 0x03;
  std::ofstream(dir / "bad.idx1", std::ios::binary) << bytes;
  std::string msg;
  try {
    load_idx((dir / "idx" / kIdxImagesFile).string(), (dir / "bad.idx1").string());
  } catch (const DataError& e) {
    msg = e.what();
  }
  o.require(msg.find("magic") != std::string::npos, "bad IDX magic was not rejected");
  o.note(fmt("checkpoint %zu bytes round-trips bit-exactly; %zu-sample IDX pair reloads "
             "identically; corrupted magic rejected: %s",
             slurp(p1).size(), ds.size(), msg.c_str()));
  return o;
}

struct Criterion {
  const char* id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"AC1", "LIF oracle equivalence", 10, ac1},
      {"AC2", "surrogate derivative correctness", 1, ac2},
      {"AC3", "BPTT gradient check, smooth regime", 30, ac3},
      {"AC4", "desk-scale learning", 600, ac4},
      {"AC5", "theta monotonicity", 1, ac5},
      {"AC6", "beta effect", 1, ac6},
      {"AC7", "cost-model properties", 1, ac7},
      {"AC8", "beta x theta sweep", 5400, ac8},
      {"AC9", "surrogate scale comparison", 5400, ac9},
      {"AC10", "determinism and resumability", 1200, ac10},
      {"AC11", "format round-trips", 5, ac11},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.budget_s, fmt("runtime %.1f s exceeds the %.0f s budget", secs, c.budget_s));
    for (const auto& n : o.notes) std::printf("       %s: %s\n", c.id, n.c_str());
    std::printf("[%s] %s %s (%.2f s, budget %.0f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                secs, c.budget_s);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
