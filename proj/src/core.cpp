// SPDX-License-Identifier: Apache-2.0

#include "lis/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lis {

namespace {

std::string trim(const std::string& s) {
  auto begin = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  auto end = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  return begin < end ? std::string(begin, end) : std::string{};
}

std::int64_t parse_plain_int(const std::string& text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("not an integer: '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw ParseError("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': not a number: '" + text + "'");
  }
}

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "antennas",       "modules",           "terminals",  "bandwidth_hz",
      "adc_bits",       "oversampling",      "beamf_bits", "chains",
      "energy_pj_per_bit", "grid_rows",      "grid_cols",  "module_pitch_m",
      "cp_position"};
  return keys;
}

}  // namespace

Ratio Ratio::parse(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) throw ParseError("empty ratio");
  Ratio r;
  if (auto slash = text.find('/'); slash != std::string::npos) {
    r.num = parse_plain_int(trim(text.substr(0, slash)));
    r.den = parse_plain_int(trim(text.substr(slash + 1)));
  } else if (auto dot = text.find('.'); dot != std::string::npos) {
    const std::string whole = text.substr(0, dot);
    const std::string frac = text.substr(dot + 1);
    if (frac.size() > 12) throw ParseError("too many decimals in '" + text + "'");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_plain_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_plain_int(frac);
    if (w < 0 || f < 0) throw ParseError("negative ratio '" + text + "'");
    r.num = w * scale + f;
    r.den = scale;
  } else {
    r.num = parse_plain_int(text);
    r.den = 1;
  }
  if (r.den <= 0) throw ParseError("ratio denominator must be positive: '" + text + "'");
  return r.reduced();
}

Ratio Ratio::reduced() const {
  const std::int64_t g = std::gcd(num, den);
  if (g == 0) return *this;
  return Ratio{num / g, den / g};
}

std::string Ratio::str() const {
  const Ratio r = reduced();
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

const SurfaceConfig& validate(const SurfaceConfig& c) {
  auto positive = [](const char* name, std::int64_t v) {
    if (v < 1) throw RangeError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive("antennas", c.antennas);
  positive("modules", c.modules);
  positive("terminals", c.terminals);
  positive("bandwidth_hz", c.bandwidth_hz);
  positive("adc_bits", c.adc_bits);
  positive("beamf_bits", c.beamf_bits);
  positive("chains", c.chains);
  positive("grid_rows", c.grid.rows);
  positive("grid_cols", c.grid.cols);
  if (c.oversampling.den < 1 || c.oversampling.num < c.oversampling.den) {
    throw RangeError("oversampling must be a ratio >= 1, got " + c.oversampling.str());
  }
  if (!(c.energy_per_bit > 0.0) || !std::isfinite(c.energy_per_bit)) {
    throw RangeError("energy per bit must be positive");
  }
  if (!(c.module_pitch_m > 0.0) || !std::isfinite(c.module_pitch_m)) {
    throw RangeError("module pitch must be positive");
  }
  if (c.antennas % c.modules != 0) {
    throw DivisibilityError("modules (" + std::to_string(c.modules) + ") must divide antennas (" +
                            std::to_string(c.antennas) + ")");
  }
  if (c.modules % c.chains != 0) {
    throw DivisibilityError("chains (" + std::to_string(c.chains) + ") must divide modules (" +
                            std::to_string(c.modules) + ")");
  }
  if (c.grid.rows * c.grid.cols != c.modules) {
    throw GeometryError("grid " + std::to_string(c.grid.rows) + "x" + std::to_string(c.grid.cols) +
                        " does not hold " + std::to_string(c.modules) + " modules");
  }
  const Ratio os = c.oversampling.reduced();
  if ((2 * c.adc_bits * os.num) % os.den != 0) {
    throw RangeError("2 * adc_bits * oversampling must be a whole number of bits, got 2*" +
                     std::to_string(c.adc_bits) + "*" + os.str());
  }
  return c;
}

GridShape default_grid(std::int64_t n) {
  if (n < 1) throw RangeError("grid needs at least one module");
  std::int64_t rows = 1;
  for (std::int64_t r = 1; r * r <= n; ++r) {
    if (n % r == 0) rows = r;
  }
  return GridShape{rows, n / rows};
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_key_values(in);
}

std::int64_t parse_integer(const std::string& key, const std::string& text) {
  if (text.find_first_of(".eE") == std::string::npos) {
    try {
      return parse_plain_int(text);
    } catch (const ParseError&) {
      throw ParseError("key '" + key + "': not an integer: '" + text + "'");
    }
  }
  const double v = parse_real(key, text);
  if (std::abs(v) > 9.0e15 || v != std::floor(v)) {
    throw ParseError("key '" + key + "': not an exact integer: '" + text + "'");
  }
  return static_cast<std::int64_t>(v);
}

SurfaceConfig config_from_key_values(const KeyValues& kv, const std::set<std::string>& extra_keys) {
  for (const auto& [key, value] : kv) {
    if (!config_keys().contains(key) && !extra_keys.contains(key)) {
      throw ParseError("unknown key '" + key + "'");
    }
  }
  auto required = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing required key '" + key + "'");
    return parse_integer(key, it->second);
  };
  auto optional_int = [&](const std::string& key, std::int64_t fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : parse_integer(key, it->second);
  };

  SurfaceConfig c;
  c.antennas = required("antennas");
  c.modules = required("modules");
  c.terminals = required("terminals");
  c.bandwidth_hz = required("bandwidth_hz");
  c.adc_bits = required("adc_bits");
  c.beamf_bits = required("beamf_bits");
  c.chains = optional_int("chains", 1);
  if (auto it = kv.find("oversampling"); it != kv.end()) c.oversampling = Ratio::parse(it->second);
  if (auto it = kv.find("energy_pj_per_bit"); it != kv.end()) {
    c.energy_per_bit = parse_real(it->first, it->second) * 1.0e-12;
  }
  if (auto it = kv.find("module_pitch_m"); it != kv.end()) {
    c.module_pitch_m = parse_real(it->first, it->second);
  }
  if (auto it = kv.find("cp_position"); it != kv.end()) {
    if (it->second == "center") {
      c.cp_position = CpPosition::Center;
    } else if (it->second == "corner") {
      c.cp_position = CpPosition::Corner;
    } else {
      throw ParseError("cp_position must be 'center' or 'corner'");
    }
  }
  const bool has_rows = kv.contains("grid_rows");
  const bool has_cols = kv.contains("grid_cols");
  if (has_rows != has_cols) throw ParseError("grid_rows and grid_cols must be given together");
  if (has_rows) {
    c.grid = GridShape{required("grid_rows"), required("grid_cols")};
  } else if (c.modules >= 1) {
    c.grid = default_grid(c.modules);
  }
  validate(c);
  return c;
}

SurfaceConfig load_config(const std::string& path) {
  return config_from_key_values(read_key_values_file(path));
}

std::string to_key_values(const SurfaceConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "antennas = " << c.antennas << '\n'
      << "modules = " << c.modules << '\n'
      << "terminals = " << c.terminals << '\n'
      << "bandwidth_hz = " << c.bandwidth_hz << '\n'
      << "adc_bits = " << c.adc_bits << '\n'
      << "oversampling = " << c.oversampling.str() << '\n'
      << "beamf_bits = " << c.beamf_bits << '\n'
      << "chains = " << c.chains << '\n'
      << "energy_pj_per_bit = " << c.energy_per_bit * 1.0e12 << '\n'
      << "grid_rows = " << c.grid.rows << '\n'
      << "grid_cols = " << c.grid.cols << '\n'
      << "module_pitch_m = " << c.module_pitch_m << '\n'
      << "cp_position = " << (c.cp_position == CpPosition::Center ? "center" : "corner") << '\n';
  return out.str();
}

}  // namespace lis
