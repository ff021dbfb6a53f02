#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "macf/cli.hpp"

using namespace macf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "macf_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "macf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json desk() {
  return json::parse(R"({"scheme": {"d": 1, "N": 64, "T": 0.25, "n": 16, "m": 4, "eta": 0.001, "ell": 10}})");
}

json linear_reference() {
  return json::parse(R"({
    "scheme": {"d": 1, "N": 8, "T": 0.05, "n": 1, "m": 256, "eta": 0.0, "ell": 10},
    "initial": {"type": "zero"}, "potential": {"type": "zero"},
    "mobility": {"type": "constant", "value": 1.0},
    "mgtest": {"replicates": 1000, "intervals": 4}})");
}

}  // namespace

TEST_CASE("missing key is a config error naming the key") {
  const fs::path dir = scratch("missing");
  json j = desk();
  j["scheme"].erase("N");
  const Result r = invoke({"--config", write_config(dir, j).string(), "--out", (dir / "o").string(), "simulate"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("scheme.N") != std::string::npos);
  CHECK(invoke({"--config", (dir / "absent.json").string(), "simulate"}).code == kExitConfig);
  CHECK(invoke({"--config", write_config(dir, desk()).string(), "frobnicate"}).code == kExitConfig);
}

TEST_CASE("simulate writes one record per sample and is reproducible") {
  const fs::path dir = scratch("simulate");
  const std::string cfg = write_config(dir, desk()).string();
  const Result a = invoke({"--config", cfg, "--out", (dir / "a").string(), "--quiet", "simulate"});
  REQUIRE(a.code == kExitOk);
  const std::string ndjson = slurp(dir / "a" / "trajectory.ndjson");
  std::istringstream lines(ndjson);
  std::string line;
  int count = 0;
  double last_t = -1.0;
  while (std::getline(lines, line)) {
    const json rec = json::parse(line);
    CHECK(rec.contains("F"));
    CHECK(rec.contains("willmore"));
    CHECK(rec["t"].get<double>() > last_t);
    last_t = rec["t"];
    ++count;
  }
  CHECK(count == 17);

  const Result b = invoke({"--config", cfg, "--out", (dir / "b").string(), "--quiet", "simulate"});
  REQUIRE(b.code == kExitOk);
  CHECK(slurp(dir / "b" / "trajectory.ndjson") == ndjson);

  // rerunning from the manifest gives the same output
  const json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["manifest"]["status"] == "ok");
  const Result c = invoke({"--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "c").string(),
                           "--quiet", "simulate"});
  REQUIRE(c.code == kExitOk);
  CHECK(slurp(dir / "c" / "trajectory.ndjson") == ndjson);

  const Result d = invoke({"--config", cfg, "--out", (dir / "d").string(), "--seed", "5", "--quiet", "simulate"});
  REQUIRE(d.code == kExitOk);
  CHECK(slurp(dir / "d" / "trajectory.ndjson") != ndjson);
}

TEST_CASE("blow-up exits with its own code") {
  const fs::path dir = scratch("blowup");
  json j = json::parse(R"({"scheme": {"d": 1, "N": 32, "T": 1, "n": 1, "m": 4, "eta": 0, "ell": 2},
                           "sampling": {"times": 4}, "initial": {"amplitude": 1}, "kernel": {"amplitude": 100}})");
  const Result r = invoke({"--config", write_config(dir, j).string(), "--out", (dir / "o").string(), "simulate"});
  CHECK(r.code == kExitBlowUp);
  CHECK(r.err.find("t=") != std::string::npos);
  CHECK(json::parse(slurp(dir / "o" / "manifest.json"))["manifest"]["status"] == "blowup");
}

TEST_CASE("check-model passes on the default model") {
  const fs::path dir = scratch("check");
  const Result r = invoke({"--config", write_config(dir, desk()).string(), "--out", dir.string(), "check-model"});
  CHECK(r.code == kExitOk);
  const std::regex verdict(R"(^VERDICT (\S+) (PASS|FAIL) (\S+)=(\S+)$)");
  std::istringstream lines(r.out);
  std::string line;
  int passes = 0;
  while (std::getline(lines, line)) {
    std::smatch m;
    REQUIRE(std::regex_match(line, m, verdict));
    if (m[1].str().rfind("assumption_", 0) == 0 && m[2] == "PASS") ++passes;
  }
  CHECK(passes == 6);
  CHECK(fs::exists(dir / "check_model.csv"));
}

TEST_CASE("converge along ell above the visited range") {
  const fs::path dir = scratch("converge");
  json j = desk();
  j["converge"] = {{"axis", "ell"}, {"levels", {10, 20, 40}}};
  const Result r = invoke({"--config", write_config(dir, j).string(), "--out", dir.string(), "converge"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("VERDICT converge_ell PASS max_distance=0") != std::string::npos);

  // a subcommand without its section is a config error
  CHECK(invoke({"--config", write_config(dir, desk()).string(), "--out", dir.string(), "ensemble"}).code ==
        kExitConfig);
}

TEST_CASE("mgtest: reference passes, reused noise fails") {
  const fs::path dir = scratch("mgtest");
  json j = linear_reference();
  const Result ok = invoke({"--config", write_config(dir, j).string(), "--out", (dir / "ok").string(), "mgtest"});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("VERDICT mgtest PASS") != std::string::npos);
  j["mgtest"]["reuse_noise"] = true;
  const Result bad = invoke({"--config", write_config(dir, j).string(), "--out", (dir / "bad").string(), "mgtest"});
  CHECK(bad.code == kExitFail);
  CHECK(bad.out.find("VERDICT mgtest FAIL") != std::string::npos);
}

TEST_CASE("version flag") {
  const Result r = invoke({"--version"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("1.0.0") != std::string::npos);
}
