#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() /
               ("archdse_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

RunResult run_cli(const fs::path& cwd, const std::string& args) {
  const fs::path out = cwd / "stdout.txt";
  const fs::path err = cwd / "stderr.txt";
  const std::string cmd = "cd '" + cwd.string() + "' && '" + ARCHDSE_CLI_PATH + "' " + args +
                          " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string toy_config_text() {
  return R"json({
  "design_space": {
    "parameters": [
      {"name": "Decode Width", "unit": "insts", "values": [1, 2, 3, 4]},
      {"name": "ROB Entry", "unit": "entries", "values": [32, 64, 96, 128]},
      {"name": "Issue Queue Entry", "unit": "entries", "values": [2, 4, 8, 16]}
    ],
    "groups": [
      {"name": "Decode", "members": ["Decode Width"], "combine": "single"},
      {"name": "ROB", "members": ["ROB Entry"], "combine": "single"},
      {"name": "IQ", "members": ["Issue Queue Entry"], "combine": "single"}
    ]
  },
  "workloads": {
    "dijkstra": {
      "f_int": 0.55, "f_mem": 0.43, "f_fp": 0.02,
      "footprint_bytes": 524288, "ilp_cap": 2.5, "mlp_cap": 4.0
    }
  },
  "model": {
    "role_fixed": {"l1_set": 64, "l1_way": 8, "l2_set": 1024, "l2_way": 8,
                   "mshr": 8, "mem_fu": 2, "int_fu": 3, "fp_fu": 2}
  },
  "area": {"limit": 16.0},
  "hf": {"kind": "synthetic", "budget": 6},
  "experiment": {"workloads": ["dijkstra"], "seeds": [0]},
  "output_dir": "out"
})json";
}

fs::path write_toy_config(const fs::path& dir) {
  const fs::path p = dir / "toy.json";
  std::ofstream f(p);
  f << toy_config_text();
  return p;
}

/// The stderr contract: exactly one line, a JSON object with error + message.
ordered_json parsed_error(const RunResult& r) {
  REQUIRE(!r.err.empty());
  const auto first_newline = r.err.find('\n');
  REQUIRE(first_newline == r.err.size() - 1);  // one line, trailing newline
  ordered_json j = ordered_json::parse(r.err.substr(0, first_newline));
  REQUIRE(j.contains("error"));
  REQUIRE(j.contains("message"));
  return j;
}

}  // namespace

TEST_CASE("explore runs the experiment and writes every artifact") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);
  RunResult r = run_cli(dir, "explore --config toy.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("workload dijkstra") != std::string::npos);
  CHECK(r.out.find("oracle: cpi") != std::string::npos);
  for (const char* name :
       {"report.txt", "report.jsonl", "effective_config.json", "dijkstra_seed0_log.jsonl",
        "dijkstra_seed0_checkpoint.json", "dijkstra_seed0_rules.txt"})
    CHECK(fs::exists(dir / "out" / name));
  CHECK(slurp(dir / "out" / "report.txt") == r.out);
  fs::remove_all(dir);
}

TEST_CASE("config problems exit 2 with one machine-parsable stderr line") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);

  RunResult r = run_cli(dir, "explore --config toy.json --override workloads.dijkstra.f_fp=0.1");
  CHECK(r.exit_code == 2);
  ordered_json j = parsed_error(r);
  CHECK(j["error"] == "config");
  CHECK(j["message"].get<std::string>().find("sum to 1") != std::string::npos);

  r = run_cli(dir, "explore");
  CHECK(r.exit_code == 2);
  CHECK(parsed_error(r)["error"] == "config");

  r = run_cli(dir, "explore --config nonexistent.json");
  CHECK(r.exit_code == 2);

  r = run_cli(dir, "--config toy.json");  // missing subcommand
  CHECK(r.exit_code == 2);

  r = run_cli(dir, "explore --config toy.json --no-such-flag");
  CHECK(r.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("seed and out overrides narrow the run without touching the file") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);
  RunResult r = run_cli(dir, "explore --config toy.json --seed 1 --out elsewhere");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("seeds: 1\n") != std::string::npos);
  CHECK(fs::exists(dir / "elsewhere" / "dijkstra_seed1_log.jsonl"));
  CHECK(!fs::exists(dir / "elsewhere" / "dijkstra_seed0_log.jsonl"));
  CHECK(!fs::exists(dir / "out"));
  CHECK(slurp(dir / "toy.json") == toy_config_text());
  fs::remove_all(dir);
}

TEST_CASE("rules reads checkpoints, writes reports, and thresholds act monotonically") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);
  REQUIRE(run_cli(dir, "explore --config toy.json").exit_code == 0);
  const std::string ckpt = "out/dijkstra_seed0_checkpoint.json";

  RunResult r = run_cli(dir, "rules --checkpoint " + ckpt + " --out low");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("rule report") != std::string::npos);
  CHECK(fs::exists(dir / "low" / "rules.txt"));
  CHECK(fs::exists(dir / "low" / "rules.jsonl"));

  auto rule_count = [&](const std::string& extra, const std::string& out_name) {
    RunResult rr =
        run_cli(dir, "rules --checkpoint " + ckpt + " " + extra + " --out " + out_name);
    REQUIRE(rr.exit_code == 0);
    std::istringstream in(slurp(dir / out_name / "rules.jsonl"));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++n;
    return n;
  };
  // Lowering theta_c never decreases the rule count.
  const std::size_t loose = rule_count("--theta-c -1e9 --theta-norm 0", "loose");
  const std::size_t mid = rule_count("--theta-c 0.1 --theta-norm 0", "mid");
  const std::size_t tight = rule_count("--theta-c 1e9 --theta-norm 0", "tight");
  CHECK(loose >= mid);
  CHECK(mid >= tight);
  CHECK(tight == 0);
  CHECK(loose > 0);

  std::ofstream(dir / "bad.ckpt") << "not a checkpoint";
  r = run_cli(dir, "rules --checkpoint bad.ckpt");
  CHECK(r.exit_code != 0);
  fs::remove_all(dir);
}

TEST_CASE("eval prints the analytical breakdown and rejects illegal candidates") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);

  RunResult r = run_cli(dir, "eval --config toy.json --design 1,32,2");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("area: 14.326 mm^2") != std::string::npos);
  CHECK(r.out.find("bounds:") != std::string::npos);
  CHECK(r.out.find("decode: 1") != std::string::npos);

  r = run_cli(dir, "eval --config toy.json --design 1,33,2");
  CHECK(r.exit_code == 2);
  ordered_json j = parsed_error(r);
  CHECK(j["message"].get<std::string>().find("legal values: 32, 64, 96, 128") !=
        std::string::npos);

  r = run_cli(dir, "eval --config toy.json --design 1,32,2 --fidelity hf");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("hf cpi") != std::string::npos);

  r = run_cli(dir, "eval --config toy.json --design 1,32");
  CHECK(r.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("oracle and compare write their tables and merge external baselines") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);

  RunResult r = run_cli(dir, "oracle --config toy.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("exhaustive") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "oracle.txt"));

  std::ofstream(dir / "ext.jsonl")
      << R"({"method": "ext-bo", "seed": 0, "best_cpi": 0.52})" << "\n";
  r = run_cli(dir, "compare --config toy.json --override "
                   "harness.baseline_files=[\\\"ext.jsonl\\\"]");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("hill-climb") != std::string::npos);
  CHECK(r.out.find("random-search seed 0") != std::string::npos);
  CHECK(r.out.find("external ext-bo seed 0: cpi 0.52") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "compare.txt"));
  fs::remove_all(dir);
}

TEST_CASE("evaluator failures exit 4 with the evaluator error class") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);
  RunResult r = run_cli(dir,
                        "eval --config toy.json --design 1,32,2 --fidelity hf "
                        "--override hf.kind=subprocess "
                        "--override hf.subprocess.command=/bin/false");
  CHECK(r.exit_code == 4);
  CHECK(parsed_error(r)["error"] == "evaluator");
  fs::remove_all(dir);
}

TEST_CASE("the same config and seed reproduce byte-identical outputs") {
  const fs::path dir = scratch_dir();
  write_toy_config(dir);
  REQUIRE(run_cli(dir, "explore --config toy.json --out a").exit_code == 0);
  REQUIRE(run_cli(dir, "explore --config toy.json --out b").exit_code == 0);
  for (const char* name : {"report.txt", "report.jsonl", "dijkstra_seed0_log.jsonl",
                           "dijkstra_seed0_checkpoint.json", "dijkstra_seed0_rules.txt"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  fs::remove_all(dir);
}
