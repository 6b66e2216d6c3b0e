#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qlab/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
};

// Run the driver in-process with stdout captured.
CliResult run(const std::vector<std::string>& args) {
  std::ostringstream captured;
  std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
  CliResult r;
  r.code = qlab::cli::run_cli(args);
  std::cout.rdbuf(old);
  r.out = captured.str();
  return r;
}

class TempDir {
 public:
  TempDir() {
    root_ = fs::temp_directory_path() / fs::path("qlab_cli_" + std::to_string(++counter()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(root_, ec);
  }
  fs::path path(const std::string& name) const { return root_ / name; }
  std::string str(const std::string& name) const { return (root_ / name).string(); }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path root_;
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(bool(out));
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* kFull22 = "2 2\n0 0\n0 1\n1 0\n1 1\n";
const char* kUniform2 = "0.5\n0.5\n";

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version flag and argument errors") {
  const CliResult v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("qlab 0.1.0") != std::string::npos);

  CHECK(run({}).code == 2);
  CHECK(run({"no-such-command"}).code == 2);
  CHECK(run({"dims"}).code == 2);  // subcommand required
  CHECK(run({"dims", "compute", "--class", "x.cls"}).code == 2);  // missing --dim
}

TEST_CASE("dimension computation writes a verifiable certificate") {
  TempDir dir;
  write_file(dir.path("h.cls"), kFull22);

  const CliResult r = run({"dims", "compute", "--class", dir.str("h.cls"), "--dim", "vc",
                           "--out", dir.str("out")});
  CHECK(r.code == 0);
  CHECK(r.out == "2\n");
  REQUIRE(fs::exists(dir.path("out") / "certificate.txt"));
  REQUIRE(fs::exists(dir.path("out") / "manifest.json"));

  // Manifest hashes match the bytes on disk.
  const json manifest = json::parse(read_file(dir.path("out") / "manifest.json"));
  CHECK(manifest.at("artifact") == "qlab");
  REQUIRE(manifest.at("outputs").size() == 1);
  const json& entry = manifest.at("outputs")[0];
  CHECK(entry.at("file") == "certificate.txt");
  const std::string cert = read_file(dir.path("out") / "certificate.txt");
  CHECK(entry.at("bytes").get<std::size_t>() == cert.size());
  CHECK(entry.at("fnv1a64").get<std::string>() == hex64(fnv1a64(cert)));

  const CliResult ok = run({"dims", "verify", "--class", dir.str("h.cls"), "--dim", "vc",
                            "--cert", (dir.path("out") / "certificate.txt").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out == "valid\n");

  // The same witness set is not shattered by a 3-member subclass.
  write_file(dir.path("three.cls"), "2 2\n0 0\n0 1\n1 0\n");
  const CliResult bad = run({"dims", "verify", "--class", dir.str("three.cls"), "--dim",
                             "vc", "--cert", (dir.path("out") / "certificate.txt").string()});
  CHECK(bad.code == 3);
  CHECK(bad.out == "invalid\n");

  CHECK(run({"dims", "compute", "--class", dir.str("h.cls"), "--dim", "frobnitz",
             "--out", dir.str("o2")})
            .code == 2);
  CHECK(run({"dims", "compute", "--class", dir.str("missing.cls"), "--dim", "vc",
             "--out", dir.str("o3")})
            .code == 2);
}

TEST_CASE("tree certificates drive the online tree adversary") {
  TempDir dir;
  write_file(dir.path("h.cls"), kFull22);
  const CliResult c = run({"dims", "compute", "--class", dir.str("h.cls"), "--dim", "ldim",
                           "--out", dir.str("cert")});
  REQUIRE(c.code == 0);
  CHECK(c.out == "2\n");

  const CliResult o = run({"online", "run", "--model", "input", "--class", dir.str("h.cls"),
                           "--learner", "soa", "--adversary", "tree", "--tree",
                           (dir.path("cert") / "certificate.txt").string(), "--T", "5",
                           "--trials", "2", "--seed", "4", "--out", dir.str("run")});
  REQUIRE(o.code == 0);

  const auto lines = csv_lines(read_file(dir.path("run") / "online_summary.csv"));
  REQUIRE(lines.size() == 4);  // magic, header, 2 trials
  CHECK(lines[0] == "# qlab-csv v1 online-summary");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cells = split_row(lines[i]);
    REQUIRE(cells.size() == 14);
    CHECK(cells[7] == "2");  // forced mistakes == dimension
    CHECK(cells[11] == "2");
  }
  const auto rounds = csv_lines(read_file(dir.path("run") / "online_rounds.csv"));
  CHECK(rounds.size() == 2 + 2 * 5);
}

TEST_CASE("chain output is stable across reruns") {
  TempDir dir;
  write_file(dir.path("h.cls"), "1 3\n0\n1\n2\n");

  const CliResult a =
      run({"lossclass", "chain", "--class", dir.str("h.cls"), "--out", dir.str("a")});
  CHECK(a.code == 0);
  CHECK(a.out == "ldim_loss=1 bldim=2 mcldim=1 bound_4klogk=19.0196\n");

  const CliResult b =
      run({"lossclass", "chain", "--class", dir.str("h.cls"), "--out", dir.str("b")});
  CHECK(b.code == 0);
  CHECK(read_file(dir.path("a") / "chain.csv") == read_file(dir.path("b") / "chain.csv"));

  // Console-only mode writes nothing.
  const CliResult c = run({"lossclass", "chain", "--class", dir.str("h.cls")});
  CHECK(c.code == 0);
}

TEST_CASE("circuit test reports exact translation") {
  const CliResult r = run({"quantum", "circuit-test", "--n", "1", "--k", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("cases=24") != std::string::npos);
  REQUIRE(r.out.find("max_amplitude_deviation=") != std::string::npos);

  const std::string dev_key = "max_amplitude_deviation=";
  const double dev = std::atof(r.out.substr(r.out.find(dev_key) + dev_key.size()).c_str());
  CHECK(dev <= 1e-12);
  const std::string res_key = "ancilla_residual=";
  const double res = std::atof(r.out.substr(r.out.find(res_key) + res_key.size()).c_str());
  CHECK(res <= 1e-12);

  CHECK(run({"quantum", "circuit-test", "--n", "0", "--k", "3"}).code == 3);
  CHECK(run({"quantum", "circuit-test", "--n", "2", "--k", "9"}).code == 3);
  CHECK(run({"quantum", "circuit-test", "--n", "8", "--k", "4", "--exhaustive"}).code == 3);
}

TEST_CASE("quantum sampling is deterministic and on-support") {
  TempDir dir;
  write_file(dir.path("d.dist"), kUniform2);
  write_file(dir.path("h.cls"), kFull22);

  const std::vector<std::string> args = {
      "quantum", "sample", "--dist", dir.str("d.dist"), "--target", dir.str("h.cls"),
      "--target-row", "1", "--shots", "200", "--seed", "9", "--out", dir.str("s1")};
  const CliResult r = run(args);
  CHECK(r.code == 0);
  CHECK(r.out.find("shots=200") != std::string::npos);

  const auto lines = csv_lines(read_file(dir.path("s1") / "sample_counts.csv"));
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "# qlab-csv v1 sample-counts");
  long long total = 0;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cells = split_row(lines[i]);
    REQUIRE(cells.size() == 3);
    // Target row 1 is [0, 1]: only (0,0) and (1,1) can appear.
    CHECK(cells[0] == cells[1]);
    total += std::atoll(cells[2].c_str());
  }
  CHECK(total == 200);

  std::vector<std::string> args2 = args;
  args2.back() = dir.str("s2");
  CHECK(run(args2).code == 0);
  CHECK(read_file(dir.path("s1") / "sample_counts.csv") ==
        read_file(dir.path("s2") / "sample_counts.csv"));

  std::vector<std::string> bad = args;
  bad[6] = "--target-row";
  bad[7] = "7";
  CHECK(run(bad).code == 2);
}

TEST_CASE("batch experiments write trial and summary tables") {
  TempDir dir;
  write_file(dir.path("h.cls"), kFull22);
  write_file(dir.path("d.dist"), kUniform2);

  const CliResult r = run({"batch", "pac", "--class", dir.str("h.cls"), "--dist",
                           dir.str("d.dist"), "--target", "1", "--eps", "0.2", "--delta",
                           "0.2", "--m", "12", "--trials", "5", "--seed", "3", "--out",
                           dir.str("out")});
  CHECK(r.code == 0);
  CHECK(r.out.find("success_rate=") != std::string::npos);

  const auto trials = csv_lines(read_file(dir.path("out") / "batch_trials.csv"));
  CHECK(trials.size() == 2 + 5);
  const auto summary = csv_lines(read_file(dir.path("out") / "batch_summary.csv"));
  REQUIRE(summary.size() == 3);
  const auto cells = split_row(summary[2]);
  REQUIRE(cells.size() == 9);
  CHECK(cells[0] == "pac");
  CHECK(cells[3] == "12");

  // Agnostic mode on a joint distribution over X x Y.
  write_file(dir.path("j.dist"), "0.4\n0.1\n0.1\n0.4\n");
  const CliResult ag = run({"batch", "agnostic", "--class", dir.str("h.cls"), "--dist",
                            dir.str("j.dist"), "--eps", "0.3", "--delta", "0.2", "--m",
                            "40", "--trials", "5", "--seed", "8", "--out", dir.str("ag")});
  CHECK(ag.code == 0);

  // A failing run leaves no partial outputs behind.
  const CliResult bad = run({"batch", "pac", "--class", dir.str("h.cls"), "--dist",
                             dir.str("d.dist"), "--target", "9", "--eps", "0.2", "--delta",
                             "0.2", "--m", "4", "--trials", "2", "--seed", "1", "--out",
                             dir.str("broken")});
  CHECK(bad.code == 2);
  CHECK_FALSE(fs::exists(dir.path("broken")));
}

TEST_CASE("online run and sweep produce consistent summaries") {
  TempDir dir;
  write_file(dir.path("h.cls"), kFull22);
  write_file(dir.path("e.seq"), "0 0\n1 1\n");

  const CliResult r = run({"online", "run", "--model", "input", "--class", dir.str("h.cls"),
                           "--learner", "soa", "--adversary", "point", "--seq",
                           dir.str("e.seq"), "--T", "4", "--trials", "2", "--seed", "5",
                           "--out", dir.str("run")});
  CHECK(r.code == 0);
  CHECK(r.out.find("trials=2") != std::string::npos);

  const auto summary = csv_lines(read_file(dir.path("run") / "online_summary.csv"));
  REQUIRE(summary.size() == 4);
  const auto head = split_row(summary[1]);
  CHECK(head[0] == "trial");
  CHECK(head[13] == "exceeded_delta1");

  const CliResult sw = run({"online", "sweep", "--model", "dist", "--class",
                            dir.str("h.cls"), "--learner", "mw", "--adversary",
                            "stochastic", "--target", "1", "--T-grid", "2,4", "--trials",
                            "3", "--seed", "6", "--out", dir.str("sweep")});
  CHECK(sw.code == 0);

  const auto sweep = csv_lines(read_file(dir.path("sweep") / "online_sweep.csv"));
  REQUIRE(sweep.size() == 4);
  {
    const auto row2 = split_row(sweep[2]);
    REQUIRE(row2.size() == 5);
    CHECK(row2[0] == "2");
    CHECK(row2[4] == "");  // no previous horizon yet
  }
  const auto ssum = csv_lines(read_file(dir.path("sweep") / "online_summary.csv"));
  REQUIRE(ssum.size() == 2 + 6);
  for (std::size_t i = 2; i < ssum.size(); ++i) {
    const auto cells = split_row(ssum[i]);
    REQUIRE(cells.size() == 14);
    if (cells[5] == "2") CHECK(cells[12] == "");  // bound defined only for T >= 4
    if (cells[5] == "4") CHECK(cells[12] != "");
  }

  // Point adversary needs a sequence file.
  CHECK(run({"online", "run", "--model", "input", "--class", dir.str("h.cls"),
             "--learner", "soa", "--adversary", "point", "--T", "2", "--seed", "1",
             "--out", dir.str("x")})
            .code == 2);
  // Quantum model wraps the learner automatically.
  CHECK(run({"online", "run", "--model", "quantum", "--class", dir.str("h.cls"),
             "--learner", "mw", "--adversary", "stochastic", "--target", "1", "--T", "3",
             "--seed", "2", "--out", dir.str("q")})
            .code == 0);
}

TEST_CASE("report aggregates summaries by scenario") {
  TempDir dir;
  write_file(dir.path("h.cls"), kFull22);
  write_file(dir.path("e.seq"), "0 0\n1 1\n");
  REQUIRE(run({"online", "run", "--model", "input", "--class", dir.str("h.cls"),
               "--learner", "soa", "--adversary", "point", "--seq", dir.str("e.seq"),
               "--T", "4", "--trials", "3", "--seed", "5", "--out", dir.str("r1")})
              .code == 0);
  REQUIRE(run({"online", "run", "--model", "input", "--class", dir.str("h.cls"),
               "--learner", "mw", "--adversary", "point", "--seq", dir.str("e.seq"),
               "--T", "4", "--trials", "3", "--seed", "5", "--out", dir.str("r2")})
              .code == 0);

  const CliResult rep = run({"report", (dir.path("r1") / "online_summary.csv").string(),
                             (dir.path("r2") / "online_summary.csv").string(), "--out",
                             dir.str("rep")});
  CHECK(rep.code == 0);
  const auto lines = csv_lines(read_file(dir.path("rep") / "report.csv"));
  REQUIRE(lines.size() == 4);  // magic, header, 2 groups
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cells = split_row(lines[i]);
    REQUIRE(cells.size() == 14);
    CHECK(cells[5] == "3");  // runs per group
  }

  const CliResult empty = run({"report", "--out", dir.str("rep0")});
  CHECK(empty.code == 0);
  CHECK(empty.out == "empty report\n");
  const auto empty_lines = csv_lines(read_file(dir.path("rep0") / "report.csv"));
  REQUIRE(empty_lines.size() == 3);
  CHECK(split_row(empty_lines[2])[0] == "-");

  write_file(dir.path("junk.csv"), "not,a,summary\n");
  CHECK(run({"report", dir.str("junk.csv"), "--out", dir.str("repx")}).code == 2);
}

TEST_CASE("config files drive complete runs") {
  TempDir dir;
  write_file(dir.path("h.cls"), "1 3\n0\n1\n2\n");

  json config;
  config["scenario"] = "chain";
  config["class_file"] = dir.str("h.cls");
  config["out_dir"] = dir.str("out");
  write_file(dir.path("run.json"), config.dump(2));

  const CliResult r = run({"run-config", dir.str("run.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("ldim_loss=1") != std::string::npos);

  // The manifest echoes the config file, not synthesized flags.
  const json manifest = json::parse(read_file(dir.path("out") / "manifest.json"));
  CHECK(manifest.at("config").contains("scenario"));
  CHECK(manifest.at("config").at("scenario") == "chain");

  json online_cfg;
  online_cfg["scenario"] = "online";
  online_cfg["mode"] = "run";
  online_cfg["model"] = "input";
  online_cfg["class_file"] = dir.str("h.cls");
  online_cfg["learner"] = "mw";
  online_cfg["adversary"] = "stochastic";
  online_cfg["target_row"] = 0;
  online_cfg["T"] = 3;
  online_cfg["out_dir"] = dir.str("on");
  // seed intentionally omitted
  write_file(dir.path("bad.json"), online_cfg.dump(2));
  CHECK(run({"run-config", dir.str("bad.json")}).code == 2);

  online_cfg["seed"] = 11;
  write_file(dir.path("good.json"), online_cfg.dump(2));
  CHECK(run({"run-config", dir.str("good.json")}).code == 0);
  CHECK(fs::exists(dir.path("on") / "online_summary.csv"));

  json unknown;
  unknown["scenario"] = "warp-drive";
  write_file(dir.path("unknown.json"), unknown.dump());
  CHECK(run({"run-config", dir.str("unknown.json")}).code == 2);

  write_file(dir.path("broken.json"), "{ not json");
  CHECK(run({"run-config", dir.str("broken.json")}).code == 2);
  CHECK(run({"run-config", dir.str("absent.json")}).code == 2);
}

}  // TEST_SUITE
