// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <vector>

#include "lis/cli.hpp"
#include "lis/rates.hpp"
#include "test_support.hpp"

using namespace lis;
using lis::testing::TempFile;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> words{"lis"};
  words.insert(words.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& w : words) argv.push_back(w.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kHeadline = R"(antennas = 1024
modules = 256
terminals = 32
bandwidth_hz = 20e6
adc_bits = 10
oversampling = 1
beamf_bits = 15
chains = 8
energy_pj_per_bit = 1
grid_rows = 16
grid_cols = 16
)";

const char* kSmall = R"(antennas = 32
modules = 8
terminals = 4
bandwidth_hz = 20e6
adc_bits = 10
beamf_bits = 15
chains = 2
grid_rows = 2
grid_cols = 4
)";

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("rates") {
  TempFile cfg(kHeadline);
  SUBCASE("headline chain") {
    const auto r = run_cli({"rates", "--config", cfg.path()});
    CHECK(r.code == cli::kExitOk);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == report_csv_header());
    const auto row = parse_report_row(rows[1]);
    CHECK(row.scheme == Scheme::CentralizedChained);
    CHECK(row.r_max_central == 409'600'000'000);
    CHECK(row.r_aggregate == 6'758'400'000'000);
    CHECK(r.err.find("381.47 Gib/s") != std::string::npos);
    CHECK(r.err.find("6758.4 mW") != std::string::npos);
  }
  SUBCASE("parallel and distributed") {
    const auto p = run_cli({"rates", "--config", cfg.path(), "--topology", "parallel"});
    CHECK(parse_report_row(lines(p.out)[1]).scheme == Scheme::CentralizedParallel);
    CHECK(p.err.find("409.6 mW") != std::string::npos);
    const auto d = run_cli({"rates", "--config", cfg.path(), "--scheme", "distributed"});
    CHECK(parse_report_row(lines(d.out)[1]).r_max_central == 19'200'000'000);
  }
  SUBCASE("indivisible modules are a config error") {
    TempFile bad("antennas = 1024\nmodules = 250\nterminals = 32\nbandwidth_hz = 20e6\nadc_bits = 10\n"
                 "beamf_bits = 15\nchains = 10\n");
    const auto r = run_cli({"rates", "--config", bad.path()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("error:") != std::string::npos);
  }
  SUBCASE("missing file and unknown option") {
    CHECK(run_cli({"rates", "--config", "/nonexistent.cfg"}).code == cli::kExitUsage);
    CHECK(run_cli({"rates", "--config", cfg.path(), "--bogus"}).code == cli::kExitUsage);
    CHECK(run_cli({}).code == cli::kExitUsage);
  }
}

TEST_CASE("scan") {
  SUBCASE("doubling sweep at M/K = 32") {
    TempFile sweep("sweep_m = 64:4096:x2\nratio_m_over_k = 32\nmodules_per = 4\nbandwidth_hz = 20e6\n"
                   "adc_bits = 10\noversampling = 1\nbeamf_bits = 15\nchains = 10\n");
    const auto r = run_cli({"scan", sweep.path()});
    CHECK(r.code == cli::kExitOk);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 1 + 7 * 2);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto row = parse_report_row(rows[i]);
      CHECK(row.antennas == row.terminals * 32);
      CHECK(row.modules * 4 == row.antennas);
      CHECK(row.modules % row.chains == 0);
      CHECK(row.chains <= 10);
    }
    CHECK(r.err.find("chains=10 does not divide") != std::string::npos);
  }
  SUBCASE("single point agrees with rates") {
    TempFile sweep("sweep_m = 1024:1024:x2\nratio_m_over_k = 32\nmodules_per = 4\nbandwidth_hz = 20e6\n"
                   "adc_bits = 10\nbeamf_bits = 15\nchains = 8\n");
    TempFile cfg("antennas = 1024\nmodules = 256\nterminals = 32\nbandwidth_hz = 20e6\nadc_bits = 10\n"
                 "beamf_bits = 15\nchains = 8\n");
    const auto scan = lines(run_cli({"scan", "--config", sweep.path()}).out);
    const auto chained = lines(run_cli({"rates", "--config", cfg.path()}).out);
    const auto dist = lines(run_cli({"rates", "--config", cfg.path(), "--scheme", "distributed"}).out);
    REQUIRE(scan.size() == 3);
    CHECK(scan[1] == chained[1]);
    CHECK(scan[2] == dist[1]);
  }
  SUBCASE("additive sweep and skipped points") {
    TempFile sweep("sweep_m = 32:96:+16\nratio_m_over_k = 32\nmodules_per = 8\nbandwidth_hz = 20e6\n"
                   "adc_bits = 10\nbeamf_bits = 15\n");
    const auto r = run_cli({"scan", sweep.path()});
    CHECK(r.code == cli::kExitOk);
    // 48 and 80 leave K fractional.
    CHECK(lines(r.out).size() == 1 + 3 * 2);
    CHECK(r.err.find("skipping M=48") != std::string::npos);
  }
  SUBCASE("derived keys are rejected") {
    TempFile sweep("sweep_m = 64:128:x2\nratio_m_over_k = 32\nmodules_per = 4\nbandwidth_hz = 20e6\n"
                   "adc_bits = 10\nbeamf_bits = 15\nantennas = 64\n");
    CHECK(run_cli({"scan", sweep.path()}).code == cli::kExitUsage);
  }
}

TEST_CASE("verify") {
  TempFile cfg(kSmall);
  SUBCASE("all topologies pass") {
    const auto r = run_cli({"verify", "--config", cfg.path(), "--seed", "3"});
    CHECK(r.code == cli::kExitOk);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].rfind("topology=parallel", 0) == 0);
    CHECK(rows[3].rfind("max_deviation=", 0) == 0);
    CHECK(rows[3].find("PASS") != std::string::npos);
  }
  SUBCASE("corrupted weights are caught") {
    const auto r = run_cli({"verify", "--config", cfg.path(), "--topology", "mesh", "--corrupt-weights"});
    CHECK(r.code == cli::kExitFailed);
    CHECK(r.out.find("FAIL") != std::string::npos);
  }
  SUBCASE("golden block round trip") {
    TempFile block("", ".bin");
    CHECK(run_cli({"verify", "--config", cfg.path(), "--seed", "4", "--out", block.path()}).code == cli::kExitOk);
    const auto same = run_cli({"verify", "--config", cfg.path(), "--seed", "4", "--golden", block.path()});
    CHECK(same.code == cli::kExitOk);
    CHECK(same.out.find("golden_max_dev") != std::string::npos);
    const auto other = run_cli({"verify", "--config", cfg.path(), "--seed", "5", "--golden", block.path()});
    CHECK(other.code == cli::kExitFailed);
  }
  SUBCASE("bad method") {
    CHECK(run_cli({"verify", "--config", cfg.path(), "--method", "mmse"}).code == cli::kExitUsage);
  }
}

TEST_CASE("simulate") {
  TempFile cfg(kSmall);
  SUBCASE("centralized chain agrees with the closed form") {
    const auto r = run_cli({"simulate", "--config", cfg.path(), "--topology", "chain", "--scheme", "centralized",
                            "--duration", "20"});
    CHECK(r.code == cli::kExitOk);
    CHECK(lines(r.out)[0] == "link_src,link_dst,total_bits,peak_bits_per_step");
    CHECK(lines(r.out).size() == 1 + 8);
    CHECK(r.err.find("agreement: PASS") != std::string::npos);
  }
  SUBCASE("mesh failure and output files") {
    const auto dir = std::filesystem::temp_directory_path() / "lis_cli_sim";
    std::filesystem::create_directories(dir);
    const std::string prefix = (dir / "run").string();
    const auto r = run_cli({"simulate", "--config", cfg.path(), "--fail-link", "1-2", "--fail-step", "5",
                            "--duration", "30", "--out", prefix});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("rerouted_symbols=") != std::string::npos);
    CHECK(r.out.find("agreement: PASS") != std::string::npos);
    std::ifstream trace(prefix + ".trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "step,link_src,link_dst,payload_kind,bits");
    CHECK(std::filesystem::exists(prefix + ".loads.csv"));
    std::filesystem::remove_all(dir);
  }
  SUBCASE("attachment failure disconnects") {
    const auto r = run_cli({"simulate", "--config", cfg.path(), "--fail-link", "0-cp"});
    CHECK(r.code == cli::kExitFailed);
    CHECK(r.err.find("Disconnected") != std::string::npos);
  }
  SUBCASE("bad arguments") {
    CHECK(run_cli({"simulate", "--config", cfg.path(), "--direction", "sideways"}).code == cli::kExitUsage);
    CHECK(run_cli({"simulate", "--config", cfg.path(), "--fail-link", "0-7"}).code == cli::kExitUsage);
    CHECK(run_cli({"simulate", "--config", cfg.path(), "--topology", "chain", "--fail-link", "0-cp"}).code ==
          cli::kExitUsage);
  }
}

TEST_CASE("export-topology") {
  TempFile cfg("antennas = 4\nmodules = 4\nterminals = 1\nbandwidth_hz = 1e6\nadc_bits = 8\nbeamf_bits = 8\n"
               "grid_rows = 2\ngrid_cols = 2\n");
  const auto r = run_cli({"export-topology", "--config", cfg.path()});
  CHECK(r.code == cli::kExitOk);
  int edges = 0;
  for (const auto& l : lines(r.out)) {
    if (l == "# routes") break;
    ++edges;
  }
  CHECK(edges == 5);

  TempFile file("", ".txt");
  CHECK(run_cli({"export-topology", "--config", cfg.path(), "--topology", "chain", "--out", file.path()}).code ==
        cli::kExitOk);
  std::ifstream in(file.path());
  std::string first;
  std::getline(in, first);
  CHECK_FALSE(first.empty());
}
