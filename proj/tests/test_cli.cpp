#include <doctest.h>

#include <sys/wait.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "npp/cli.hpp"
#include "npp/driver.hpp"

using namespace npp;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "npp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("npp_cli_" + name)).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("find-projection on B2 and B1") {
  Run r = cli({"find-projection", "lq", "n=32", "q=2", "--seed", "7"});
  CHECK(r.code == kExitPass);
  json j = json::parse(r.out);
  CHECK(j.at("branch") == "l2");
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("seeds").at("seed") == 7);
  CHECK(j.at("config").at("command") == "find-projection");
  CHECK(j.at("params").at("C_desk") == 16.0);

  r = cli({"find-projection", "lq", "n=32", "q=1", "--seed", "7"});
  CHECK(r.code == kExitPass);
  CHECK(json::parse(r.out).at("branch") == "l1");
}

TEST_CASE("find-projection input errors") {
  CHECK(cli({"find-projection", "/nonexistent/body.json"}).code == kExitInputError);
  CHECK(cli({"find-projection", "lq", "n=8"}).code == kExitInputError);
  CHECK(cli({"find-projection", "lq", "n=1", "q=2"}).code == kExitInputError);
  CHECK(cli({"find-projection", "cube", "n=8"}).code == kExitInputError);
  CHECK(cli({"find-projection"}).code == kExitInputError);
  CHECK(cli({"no-such-command"}).code == kExitInputError);
  CHECK(cli({}).code == kExitInputError);
}

TEST_CASE("malformed JSON reports line and column") {
  const std::string path = temp_path("broken.json");
  write_file(path, "{\n  \"type\": \"lq\",\n  \"n\": 4,\n  \"q\": ]\n}\n");
  Run r = cli({"find-projection", path});
  CHECK(r.code == kExitInputError);
  CHECK(r.err.find(path + ":4:") != std::string::npos);
}

TEST_CASE("body JSON files are accepted") {
  const std::string path = temp_path("body.json");
  write_file(path, GaugeBody::lq(8, 1.0).to_json().dump());
  Run file = cli({"find-projection", path, "--seed", "3"});
  Run inline_ = cli({"find-projection", "lq", "n=8", "q=1", "--seed", "3"});
  CHECK(file.code == kExitPass);
  json a = json::parse(file.out), b = json::parse(inline_.out);
  a.erase("config");
  b.erase("config");
  CHECK(a == b);
}

TEST_CASE("verify exit codes") {
  const std::string cert = temp_path("cert.json");
  REQUIRE(cli({"find-projection", "ball", "n=8", "--out", cert}).code == kExitPass);
  Run ok = cli({"verify", "ball", "n=8", "--cert", cert});
  CHECK(ok.code == kExitPass);
  CHECK(json::parse(ok.out).at("passed") == true);

  json j = json::parse(std::ifstream(cert));
  json half = j;
  half["P"] = matrix_to_json(0.5 * Matrix::Identity(8, 8));
  const std::string bad = temp_path("cert_half.json");
  write_file(bad, half.dump());
  Run fail = cli({"verify", "ball", "n=8", "--cert", bad});
  CHECK(fail.code == kExitCertifiedFail);
  CHECK(json::parse(fail.out).at("passed") == false);

  const std::string text = j.dump();
  const std::string cut = temp_path("cert_cut.json");
  write_file(cut, text.substr(0, text.size() / 2));
  CHECK(cli({"verify", "ball", "n=8", "--cert", cut}).code == kExitInputError);

  json other = j;
  other["schema_version"] = kSchemaVersion + 1;
  const std::string ver = temp_path("cert_version.json");
  write_file(ver, other.dump());
  CHECK(cli({"verify", "ball", "n=8", "--cert", ver}).code == kExitInputError);

  CHECK(cli({"verify", "ball", "n=9", "--cert", cert}).code == kExitInputError);
  CHECK(cli({"verify", "ball", "n=8"}).code == kExitInputError);
}

TEST_CASE("ell of B2 in dimension 16") {
  Run r = cli({"ell", "lq", "n=16", "q=2", "--samples", "100000"});
  REQUIRE(r.code == kExitPass);
  json j = json::parse(r.out);
  const double v = j.at("value"), se = j.at("stderr");
  CHECK(std::abs(v - 4.0) <= 3 * se + 1e-12);
  CHECK(j.at("config").at("samples") == 100000);
  CHECK(cli({"ell", "lq", "n=16", "q=2", "--samples", "0"}).code == kExitInputError);
}

TEST_CASE("position writes a PositionResult") {
  Run r = cli({"position", "lq", "n=4", "q=1", "--samples", "500", "--budget", "5"});
  REQUIRE(r.code == kExitPass);
  json j = json::parse(r.out);
  CHECK(j.at("map").size() == 4);
  CHECK(j.at("product").get<double>() >= 4.0 * (1 - 0.1));
  CHECK(j.contains("schema_version"));
}

TEST_CASE("section CSV for B1 in dimension 32") {
  Run r = cli({"section", "lq", "n=32", "q=1", "--m", "2", "--trials", "100"});
  REQUIRE(r.code == kExitPass);
  auto lines = split(r.out, '\n');
  REQUIRE(lines.size() == 103);
  CHECK(lines[0].rfind("# schema_version:", 0) == 0);
  CHECK(lines[1].rfind("# config:", 0) == 0);
  CHECK(lines[2] == "seed,m,r,R,ratio,pf_norm");
  int good = 0;
  for (std::size_t i = 3; i < lines.size(); ++i) {
    auto f = split(lines[i], ',');
    REQUIRE(f.size() == 6);
    CHECK(f[1] == "2");
    for (std::size_t c = 2; c < 6; ++c) {
      double v = 0;
      std::from_chars(f[c].data(), f[c].data() + f[c].size(), v);
      CHECK(format_double(v) == f[c]);
    }
    good += std::stod(f[4]) <= 2.0;
  }
  CHECK(good >= 90);
  CHECK(cli({"section", "lq", "n=4", "q=1", "--m", "5"}).code == kExitInputError);
}

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_double(1e-300) == "1e-300");
}

TEST_CASE("bench gamma and near-opt") {
  Run r = cli({"bench", "gamma", "--q", "4", "--k", "16"});
  REQUIRE(r.code == kExitPass);
  CHECK(json::parse(r.out).at("b1") == 2.0);
  r = cli({"bench", "gamma", "--q", "inf", "--k", "9"});
  REQUIRE(r.code == kExitPass);
  const double b4 = json::parse(r.out).at("b4");
  CHECK(b4 > 3 * std::sqrt(2 / M_PI));
  CHECK(b4 <= 3.0);
  CHECK(cli({"bench", "gamma", "--q", "1.5", "--k", "4"}).code == kExitInputError);
  CHECK(cli({"bench", "gamma", "--q", "x", "--k", "4"}).code == kExitInputError);
  CHECK(cli({"bench", "gamma", "--k", "4"}).code == kExitInputError);

  r = cli({"bench", "near-opt", "--k-grid", "1e3,1e6,1e9"});
  REQUIRE(r.code == kExitPass);
  json j = json::parse(r.out);
  REQUIRE(j.at("rows").size() == 3);
  for (const auto& row : j.at("rows")) CHECK(row.at("rel_err").get<double>() <= 1e-9);
  CHECK(cli({"bench", "near-opt", "--k-grid", "8"}).code == kExitInputError);
  CHECK(cli({"bench"}).code == kExitInputError);
}

TEST_CASE("outputs do not depend on the thread count") {
  const std::vector<std::string> base = {"find-projection", "lq", "n=8", "q=1.5", "--seed", "9"};
  auto with = [&](const std::string& t) {
    auto a = base;
    a.push_back("--threads");
    a.push_back(t);
    return cli(a).out;
  };
  const std::string one = with("1");
  CHECK(one == with("4"));
  CHECK(one == cli(base).out);
}

#ifdef NPP_CLI_PATH
TEST_CASE("installed binary exit codes") {
  auto status = [](const std::string& args) {
    const int s = std::system((std::string(NPP_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status("bench gamma --q 4 --k 16") == 0);
  CHECK(status("find-projection /nonexistent/body.json") == 1);
  CHECK(status("--help") == 0);
  const std::string cert = temp_path("bin_cert.json");
  CHECK(status("find-projection ball n=6 --out " + cert) == 0);
  json j = json::parse(std::ifstream(cert));
  j["P"] = matrix_to_json(0.5 * Matrix::Identity(6, 6));
  write_file(cert, j.dump());
  CHECK(status("verify ball n=6 --cert " + cert) == 2);
  CHECK(std::system((std::string("NPP_THREADS=3 ") + NPP_CLI_PATH + " ell ball n=4 > /dev/null").c_str()) == 0);
}
#endif
