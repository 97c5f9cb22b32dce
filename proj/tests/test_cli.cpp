// SPDX-License-Identifier: Apache-2.0
// Runs the snnkit binary as a subprocess.
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snn/data.hpp"
#include "snn/learning.hpp"
#include "snn/network.hpp"

using namespace snn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "snnkit_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

Run snnkit(const std::string& args) {
  const auto log = path("last_output.txt");
  const std::string cmd = std::string("\"") + SNNKIT_PATH + "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small data so each training run takes well under a second.
const std::string kData =
    " --synth-per-class 6 --synth-classes 3 --synth-side 6 --synth-noise 0.2 --data-seed 2";

std::string cost_line(const std::string& out) {
  const auto h = out.find("total_cycles,latency_s");
  REQUIRE(h != std::string::npos);
  const auto start = out.find('\n', h) + 1;
  return out.substr(start, out.find('\n', start) - start);
}

double csv_field(const std::string& row, std::size_t i) {
  std::stringstream ss(row);
  std::string f;
  for (std::size_t k = 0; k <= i; ++k) std::getline(ss, f, ',');
  return std::stod(f);
}

}  // namespace

TEST_CASE("usage errors exit with 2, help with 0") {
  CHECK(snnkit("").code == 2);
  CHECK(snnkit("frobnicate").code == 2);
  CHECK(snnkit("train --no-such-flag").code == 2);
  CHECK(snnkit("--help").code == 0);
  const auto bad_theta = snnkit("train --theta -1" + kData + " --out " + path("x.snnb"));
  CHECK(bad_theta.code == 2);
  CHECK(bad_theta.out.find("theta") != std::string::npos);
  CHECK(snnkit("train --arch 8Q3-10" + kData).code == 2);
  CHECK(snnkit("sweep").code == 2);
}

TEST_CASE("data and io errors exit with 3") {
  CHECK(snnkit("eval --checkpoint " + path("missing.snnb") + kData).code == 3);
  CHECK(snnkit("train --data " + path("no_such_dir") + " --out " + path("x.snnb")).code == 3);
  std::ofstream(path("garbage.snnb")) << "not a checkpoint";
  const auto r = snnkit("cost --checkpoint " + path("garbage.snnb") + kData);
  CHECK(r.code == 3);
  CHECK(r.out.find("magic") != std::string::npos);
}

TEST_CASE("zero epochs writes the initial weights") {
  const auto r = snnkit("train --arch 4-3 --epochs 0 --seed 9 --timesteps 3" + kData + " --out " +
                        path("init.snnb") + " --metrics " + path("init.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# train configuration") != std::string::npos);
  const auto ck = load_checkpoint(path("init.snnb"));
  CHECK(ck.seed == 9);
  CHECK(ck.state == initial_state(ck.spec, 9));
  CHECK(ck.spec.timesteps == 3);
}

TEST_CASE("a silent network costs only the update floor") {
  NetworkSpec spec;
  spec.layers = parse_arch("2C3-MP2-3");
  spec.input = {1, 6, 6};
  spec.timesteps = 4;
  save_checkpoint(path("zero.snnb"), {spec, zero_state(spec), 1});
  const auto r = snnkit("cost --checkpoint " + path("zero.snnb") + kData);
  REQUIRE(r.code == 0);
  // Only the input pixels arrive as events; no layer emits anything.
  DataSource src;
  src.per_class = 6;
  src.classes = 3;
  src.side = 6;
  src.noise = 0.2;
  src.seed = 2;
  const auto test = src.load_split().test;
  double events = 0.0;
  for (double v : test.images.data()) events += v != 0.0 ? 4.0 : 0.0;  // T=4, direct current
  events /= static_cast<double>(test.size());
  // conv: 2x4x4 neurons, fanout 2*9*16/36 = 8; dense: 3 neurons + 32 pooled slots; 16 lanes.
  const double floor = (32 * 4) / 16.0 + (35 * 4) / 16.0;
  CHECK(csv_field(cost_line(r.out), 0) == std::ceil(events * 8 / 16) + floor);
  CHECK(r.out.find("aggregate firing rate 0.00000") != std::string::npos);
}

TEST_CASE("train, eval and cost are reproducible") {
  const std::string train = "train --arch 4C3-MP2-3 --epochs 3 --timesteps 4 --lr 0.01" + kData;
  REQUIRE(snnkit(train + " --out " + path("a.snnb") + " --metrics " + path("a.csv")).code == 0);
  REQUIRE(snnkit(train + " --out " + path("b.snnb") + " --metrics " + path("b.csv")).code == 0);
  CHECK(slurp(path("a.snnb")) == slurp(path("b.snnb")));
  const auto strip_wallclock = [](const std::string& text) {
    std::stringstream in(text), out;
    for (std::string line; std::getline(in, line);) out << line.substr(0, line.rfind(',')) << "\n";
    return out.str();
  };
  CHECK(strip_wallclock(slurp(path("a.csv"))) == strip_wallclock(slurp(path("b.csv"))));

  const auto c1 = snnkit("cost --checkpoint " + path("a.snnb") + kData + " --csv " + path("cost.csv"));
  const auto c2 = snnkit("cost --checkpoint " + path("a.snnb") + kData + " --csv " + path("cost.csv"));
  REQUIRE(c1.code == 0);
  CHECK(cost_line(c1.out) == cost_line(c2.out));
  std::stringstream rows(slurp(path("cost.csv")));
  std::string header, r1, r2;
  std::getline(rows, header);
  std::getline(rows, r1);
  std::getline(rows, r2);
  CHECK(header.rfind("total_cycles", 0) == 0);
  CHECK(r1 == r2);
  CHECK(snnkit("eval --checkpoint " + path("a.snnb") + kData).code == 0);
}

TEST_CASE("a higher threshold fires less and costs less") {
  const std::string base = "train --arch 4C3-MP2-3 --epochs 2 --timesteps 5 --beta 0.5" + kData;
  REQUIRE(snnkit(base + " --theta 1.0 --out " + path("t10.snnb") + " --metrics " + path("t10.csv")).code == 0);
  REQUIRE(snnkit(base + " --theta 1.5 --out " + path("t15.snnb") + " --metrics " + path("t15.csv")).code == 0);
  const auto lo = snnkit("cost --checkpoint " + path("t10.snnb") + kData);
  const auto hi = snnkit("cost --checkpoint " + path("t15.snnb") + kData);
  const auto rate = [](const std::string& out) {
    const auto p = out.find("aggregate firing rate ");
    return std::stod(out.substr(p + 22));
  };
  const double rate_lo = rate(lo.out), rate_hi = rate(hi.out);
  const double lat_lo = csv_field(cost_line(lo.out), 1), lat_hi = csv_field(cost_line(hi.out), 1);
  // Cost ordering follows firing ordering.
  if (rate_hi < rate_lo) CHECK(lat_hi <= lat_lo);
  if (rate_hi > rate_lo) CHECK(lat_hi >= lat_lo);
  CHECK(rate_hi <= rate_lo);
}

TEST_CASE("gen-data writes loadable IDX files") {
  const auto r = snnkit("gen-data --out " + path("idx") + kData);
  REQUIRE(r.code == 0);
  const auto ds = load_idx(path("idx/images.idx3"), path("idx/labels.idx1"), 3);
  CHECK(ds == synth_digits(6, 3, 6, 0.2, 2));
  const auto t = snnkit("train --arch 3 --epochs 1 --timesteps 2 --data " + path("idx") +
                        " --out " + path("idx.snnb") + " --metrics " + path("idx.csv"));
  CHECK(t.code == 0);
}

TEST_CASE("sweep: interrupted and resumed equals uninterrupted, and export works") {
  std::ofstream(path("grid.cfg")) << "name = cli\narch = 4-3\ntimesteps = 3\nepochs = 2\n"
                                     "synth_per_class = 6\nsynth_classes = 3\nsynth_side = 6\n"
                                     "axis.theta = 0.5,1.0\nrepeats = 2\n";
  const std::string grid = " --grid " + path("grid.cfg") + " --workers 1";
  REQUIRE(snnkit("sweep" + grid + " --out-dir " + path("full")).code == 0);
  const auto part = snnkit("sweep" + grid + " --out-dir " + path("part") + " --stop-after 3");
  REQUIRE(part.code == 0);
  CHECK(part.out.find("incomplete") != std::string::npos);
  CHECK_FALSE(fs::exists(path("part/sweep.csv")));
  const auto rest = snnkit("sweep" + grid + " --out-dir " + path("part") + " --resume");
  REQUIRE(rest.code == 0);
  CHECK(rest.out.find("1 new runs") != std::string::npos);
  const auto strip = [](const std::string& text) {
    std::stringstream in(text), out;
    for (std::string line; std::getline(in, line);) out << line.substr(0, line.rfind(',')) << "\n";
    return out.str();
  };
  CHECK(strip(slurp(path("full/sweep.csv"))) == strip(slurp(path("part/sweep.csv"))));

  const auto x = snnkit("export-plots --in " + path("full/sweep.csv") + " --out-dir " + path("plots"));
  CHECK(x.code == 0);
  CHECK(fs::exists(path("plots/points.tsv")));
  CHECK(fs::exists(path("plots/frontier.tsv")));
  CHECK(snnkit("export-plots --in " + path("nothing.csv")).code == 3);
}
