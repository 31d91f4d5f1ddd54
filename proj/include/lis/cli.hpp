// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the `lis` tool.  Each command writes to the
// given streams and returns the process exit status:
//   0 success, 1 verification or agreement failure, 2 usage or config error.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lis/core.hpp"
#include "lis/rates.hpp"

namespace lis::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

struct RatesArgs {
  std::string config;
  std::string topology{"chain"};
  std::string scheme{"centralized"};
};

/// Header plus one report row on `out`; decimal and binary renderings of
/// the central and aggregate rates on `err`.
int cmd_rates(const RatesArgs& args, std::ostream& out, std::ostream& err);

/// Sweep over the antenna count M with M/K held fixed and N = M / modules_per.
struct SweepSpec {
  std::int64_t m_start{};
  std::int64_t m_stop{};
  std::int64_t m_step{};           // factor when multiplicative, increment otherwise
  bool multiplicative{true};
  std::int64_t ratio_m_over_k{};
  std::int64_t modules_per{};
  std::vector<Scheme> schemes{Scheme::CentralizedChained, Scheme::DistributedBeamforming};
  KeyValues base;                  // remaining configuration keys
};

SweepSpec parse_sweep(const KeyValues& kv);

struct SweepPoint {
  SurfaceConfig config;
  std::int64_t requested_chains{};
};

/// Expands the sweep into valid configurations.  Points whose K or N is not
/// a whole number, or that fail validation, are skipped with a warning on
/// `warnings`.  When the requested chain count does not divide N, the point
/// uses the largest divisor of N below it and says so on `warnings`.
std::vector<SweepPoint> expand_sweep(const SweepSpec& spec, std::ostream& warnings);

int cmd_scan(const std::string& sweep_path, std::ostream& out, std::ostream& err);

struct VerifyArgs {
  std::string config;
  std::uint64_t seed{0};
  std::optional<std::string> topology;  // all three when empty
  std::string method{"zf"};
  std::int64_t symbols{16};
  std::int64_t subcarriers{2};
  bool corrupt_weights{false};          // negative control
  std::string out;                      // write the distributed uplink block here
  std::string golden;                   // compare the distributed uplink block against this file
};

inline constexpr double kVerifyTolerance = 1e-9;

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err);

struct SimulateArgs {
  std::string config;
  std::string topology{"mesh"};
  std::string scheme{"distributed"};
  std::string direction{"uplink"};
  std::int64_t duration{100};
  std::string fail_link;                // "src-dst", e.g. "0-cp"
  std::int64_t fail_step{0};
  std::string out;                      // prefix for <out>.trace.csv and <out>.loads.csv
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

struct ExportArgs {
  std::string config;
  std::string topology{"mesh"};
  std::string out;
};

int cmd_export_topology(const ExportArgs& args, std::ostream& out, std::ostream& err);

/// Parses a full command line and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lis::cli
