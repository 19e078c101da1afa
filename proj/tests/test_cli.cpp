#include <doctest.h>

#include <chrono>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "helpers.hpp"
#include "imputeinr/checkpoint.hpp"
#include "imputeinr/rng.hpp"
#include "imputeinr/timeseries.hpp"

using namespace imputeinr;
using testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "imputeinr");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// A small model so the CLI tests stay quick.
void write_small_config(const std::filesystem::path& p) {
  testing::write_file(p,
                      "d_model=8\nchannels_per_scale=2\nn_blocks=1\nn_heads=2\nwindow=48\nstride=48\n"
                      "epochs=3\nbatch_size=4\n");
}

std::string strip_blanks(const std::string& csv, double every) {
  std::istringstream in(csv);
  std::string line, out;
  std::getline(in, line);
  out = line + "\n";
  std::size_t cell = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string c, row;
    bool first = true;
    while (std::getline(ss, c, ',')) {
      if (static_cast<double>(cell++ % 100) < every * 100) c.clear();
      row += (first ? "" : ",") + c;
      first = false;
    }
    out += row + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("synth, cluster-inspect and grad-check") {
  TempDir dir;
  Run r = invoke({"synth", "two-distribution", (dir / "td.csv").string(), "--seed", "2"});
  REQUIRE(r.code == 0);
  const TimeSeries td = load_csv(dir / "td.csv");
  CHECK(td.n_vars() == 4);
  r = invoke({"cluster-inspect", (dir / "td.csv").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["K"] == 2);
  CHECK(j["assignment"] == nlohmann::json::array({0, 0, 1, 1}));
  CHECK(j["pi"].size() == 4);
  r = invoke({"grad-check"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max relative error") != std::string::npos);
}

TEST_CASE("train then impute") {
  TempDir dir;
  write_small_config(dir / "small.cfg");
  REQUIRE(invoke({"synth", "trend-sinusoid", (dir / "ts.csv").string()}).code == 0);
  testing::write_file(dir / "holes.csv", strip_blanks(testing::read_file(dir / "ts.csv"), 0.2));
  const std::string cfg = (dir / "small.cfg").string();
  const std::string ckpt = (dir / "m.ckpt").string();

  Run r = invoke({"train", (dir / "holes.csv").string(), ckpt, "--config", cfg, "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(std::filesystem::exists(ckpt + ".loss.csv"));
  CHECK(std::filesystem::exists(ckpt + ".loss.svg"));
  REQUIRE(invoke({"train", (dir / "holes.csv").string(), (dir / "m2.ckpt").string(), "--config", cfg, "--seed", "3"}).code == 0);
  CHECK(testing::read_file(ckpt) == testing::read_file(dir / "m2.ckpt"));

  const std::string out = (dir / "out.csv").string();
  r = invoke({"impute", (dir / "holes.csv").string(), ckpt, out, "--plot", (dir / "o.svg").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const TimeSeries holes = load_csv(dir / "holes.csv");
  const TimeSeries filled = load_csv(out);
  CHECK(filled.observed_count() == filled.n_vars() * filled.length());
  const auto side = nlohmann::json::parse(testing::read_file(out + ".json"));
  CHECK(side["total_filled"] == holes.n_vars() * holes.length() - holes.observed_count());

  // observed cells are copied as text
  std::istringstream a(testing::read_file(dir / "holes.csv")), b(testing::read_file(out));
  std::string la, lb;
  while (std::getline(a, la) && std::getline(b, lb)) {
    std::stringstream sa(la), sb(lb);
    std::string ca, cb;
    while (std::getline(sa, ca, ',') && std::getline(sb, cb, ','))
      if (!ca.empty()) CHECK(ca == cb);
  }

  const std::string again = (dir / "again.csv").string();
  REQUIRE(invoke({"impute", out, ckpt, again}).code == 0);
  CHECK(testing::read_file(again) == testing::read_file(out));
  CHECK(nlohmann::json::parse(testing::read_file(again + ".json"))["total_filled"] == 0);
}

TEST_CASE("benchmark writes a row per mask rate") {
  TempDir dir;
  write_small_config(dir / "small.cfg");
  REQUIRE(invoke({"synth", "trend-sinusoid", (dir / "ts.csv").string()}).code == 0);
  const Run r = invoke({"benchmark", (dir / "ts.csv").string(), "--config", (dir / "small.cfg").string(),
                     "--epochs", "1", "--out-dir", (dir / "bench").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string csv = testing::read_file(dir / "bench" / "summary.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(std::filesystem::exists(dir / "bench" / "report.json"));
  CHECK(std::filesystem::exists(dir / "bench" / "timings.json"));
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"--help"}).code == 0);
  CHECK(invoke({"train", (dir / "absent.csv").string(), (dir / "m.ckpt").string()}).code == 1);
  testing::write_file(dir / "bad.csv", "a,b\n1\n");
  CHECK(invoke({"cluster-inspect", (dir / "bad.csv").string()}).code == 1);
  testing::write_file(dir / "ok.csv", "a,b\n1,2\n3,4\n");
  testing::write_file(dir / "fake.ckpt", "not a checkpoint");
  const Run r = invoke({"impute", (dir / "ok.csv").string(), (dir / "fake.ckpt").string(), (dir / "o.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") == 0);
  CHECK(invoke({"train", (dir / "ok.csv").string(), (dir / "m.ckpt").string(), "--metrics-scale", "log"}).code == 1);
  testing::write_file(dir / "bad.cfg", "unknown_key=1\n");
  CHECK(invoke({"grad-check", "--config", (dir / "bad.cfg").string()}).code == 1);
}

TEST_CASE("training on the synthetic fixture with defaults stays under five minutes") {
  TempDir dir;
  REQUIRE(invoke({"synth", "trend-sinusoid", (dir / "ts.csv").string()}).code == 0);
  const auto t0 = std::chrono::steady_clock::now();
  const Run r = invoke({"train", (dir / "ts.csv").string(), (dir / "m.ckpt").string()});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(secs < 300.0);
  const std::string curve = testing::read_file(dir / "m.ckpt.loss.csv");
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 301);
}

TEST_CASE("zero epochs saves the initialization") {
  TempDir dir;
  write_small_config(dir / "small.cfg");
  REQUIRE(invoke({"synth", "trend-sinusoid", (dir / "ts.csv").string()}).code == 0);
  REQUIRE(invoke({"train", (dir / "ts.csv").string(), (dir / "m.ckpt").string(), "--config",
                  (dir / "small.cfg").string(), "--epochs", "0", "--seed", "7"})
              .code == 0);
  const LoadedCheckpoint ck = load_checkpoint(dir / "m.ckpt");
  const ImputeInrModel fresh(ck.model.config(), ck.model.n_vars(), ck.model.partition(), mix_seed(7, 1));
  CHECK(ck.model.params().values() == fresh.params().values());
}
