#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using contact_kam::cli::execute;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = execute(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("contact_kam_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[e.path().filename().string()] = s.str();
  }
  return files;
}

const char* kMonotone = R"j({"model": {"kind": "separable", "alpha": 1, "V": "-0.25", "lambda": "1"}, "grid": {"n": 64}})j";
const char* kEx63 = R"j({"model": {"kind": "example63"}, "grid": {"n": 64}})j";

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"no-such-command"}).code == 1);
  const auto d = scratch("usage");
  const auto cfg = write_config(d, kMonotone);
  CHECK(run({"evolve", "--config", cfg.string(), "--out", (d / "o").string()}).code == 1);  // --t missing
  CHECK(run({"evolve", "--config", cfg.string(), "--t", "abc", "--out", (d / "o").string()}).code == 1);
  CHECK(run({"solve", "--config", cfg.string(), "--direction", "sideways", "--out", (d / "o").string()}).code == 1);
}

TEST_CASE("config and parse errors exit 2") {
  const auto d = scratch("config");
  CHECK(run({"fixed-points", "--config", (d / "missing.json").string()}).code == 2);
  CHECK(run({"fixed-points", "--config", write_config(d, "{not json").string()}).code == 2);
  CHECK(run({"fixed-points", "--config", write_config(d, R"j({"model": {"kind": "example63"}, "grid": {"n": 63}})j").string()}).code == 2);
  CHECK(run({"fixed-points", "--config", write_config(d, R"j({"model": {"kind": "example63"}, "colour": 1})j").string()}).code == 2);
  CHECK(run({"fixed-points", "--config", write_config(d, R"j({"model": {"kind": "general", "H": "p^2 + foo"}})j").string()}).code == 2);
  const auto cfg = write_config(d, kMonotone);
  const auto r = run({"solve", "--config", cfg.string(), "--phi", "sin(", "--out", (d / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("--phi") != std::string::npos);
}

TEST_CASE("precondition failures exit 4") {
  const auto d = scratch("precondition");
  const auto cfg = write_config(d, kEx63);
  // The two-piece subsolution leaves no gap below the forward limit.
  std::ofstream f(d / "phi.csv");
  f.precision(17);
  f << "x,value\n";
  for (int i = 0; i < 64; ++i) {
    const double x = -M_PI + 2 * M_PI * i / 64;
    f << x << "," << (x < 0 ? 0.5 * std::sin(x) + 0.25 : 0.25) << "\n";
  }
  f.close();
  CHECK(run({"connect", "--config", cfg.string(), "--phi", "@" + (d / "phi.csv").string(), "--out", (d / "o").string()}).code == 4);
}

TEST_CASE("successful commands write a manifest") {
  const auto d = scratch("manifest");
  const auto cfg = write_config(d, kMonotone);
  const auto out = d / "o";
  const auto r = run({"solve", "--config", cfg.string(), "--phi", "sin(x)", "--out", out.string()});
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(out / "manifest.json"));
  std::ifstream in(out / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  CHECK(m["command"] == "solve");
  CHECK(m["exit_code"] == 0);
  CHECK(m["inputs"]["phi"] == "sin(x)");
  CHECK(m["inputs"]["config_fnv1a64"].get<std::string>().size() == 16);
  bool listed = false;
  for (const auto& f : m["files"]) listed = listed || f["name"] == "u_minus.csv";
  CHECK(listed);
  CHECK(fs::exists(out / "u_minus.csv"));
}

TEST_CASE("reruns are byte identical") {
  const auto d = scratch("determinism");
  const auto cfg = write_config(d, kEx63);
  const auto out = d / "o";
  for (const char* cmd : {"fixed-points", "evolve", "action", "orbit"}) {
    std::vector<std::string> args{cmd, "--config", cfg.string(), "--out", out.string()};
    if (std::string(cmd) == "evolve") args.insert(args.end(), {"--phi", "sin(x)", "--t", "1"});
    if (std::string(cmd) == "action") args.insert(args.end(), {"--x0", "0.5", "--u0", "0.1", "--t", "1"});
    if (std::string(cmd) == "orbit") args.insert(args.end(), {"--x0", "0", "--u0", "0", "--p0", "1", "--t", "2"});
    fs::remove_all(out);
    REQUIRE_MESSAGE(run(args).code == 0, cmd);
    const auto first = snapshot(out);
    fs::remove_all(out);
    REQUIRE(run(args).code == 0);
    CHECK_MESSAGE(snapshot(out) == first, cmd);
  }
}

TEST_CASE("time step shrinks for large u-Lipschitz bounds") {
  const auto cfg = contact_kam::cli::parse_config(
      R"j({"model": {"kind": "separable", "alpha": 1, "V": "-0.25", "lambda": "20*sin(x)"}, "numerics": {"tau": 0.0625}})j", "inline");
  CHECK(cfg.num.lax.tau * cfg.model->lambda_bound() <= 0.5);
  CHECK(cfg.num.lax.tau < 0.0625);
  REQUIRE_FALSE(cfg.notices.empty());
  CHECK(cfg.notices.front().find("tau") != std::string::npos);

  const auto d = scratch("shrink");
  const auto path = write_config(d, R"j({"model": {"kind": "separable", "alpha": 1, "V": "-0.25", "lambda": "20*sin(x)"}, "grid": {"n": 64}})j");
  const auto r = run({"fixed-points", "--config", path.string(), "--out", (d / "o").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("notice") != std::string::npos);
}

TEST_CASE("config defaults") {
  const auto cfg = contact_kam::cli::parse_config(R"j({"model": {"kind": "example63"}})j", "inline");
  CHECK(cfg.n == 512);
  CHECK(cfg.num.lax.tau == 0.125);
  CHECK(cfg.num.lax.v_max == 8.0);
  CHECK(cfg.out == fs::path("out"));
  CHECK(contact_kam::cli::fnv1a_hex("") == "cbf29ce484222325");
}
