// SPDX-License-Identifier: Apache-2.0

#include "lis/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace lis {

namespace {

void require_same_subcarriers(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": subcarrier counts differ (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

void require_domain(const SampleBlock& block, SampleDomain domain, Index dimension, const char* what) {
  if (block.domain != domain) {
    throw DimensionError(std::string(what) + ": expected " +
                         (domain == SampleDomain::Antenna ? "antenna" : "terminal") + "-domain samples");
  }
  if (block.dimension() != dimension) {
    throw DimensionError(std::string(what) + ": block has " + std::to_string(block.dimension()) +
                         " rows, expected " + std::to_string(dimension));
  }
}

// Every module id in [0, N) exactly once, antenna runs tiling [0, M).
void check_modules(std::span<const ModuleState> modules, Index antennas, const Topology& topology) {
  std::vector<bool> seen(static_cast<std::size_t>(topology.module_count()), false);
  for (const auto& m : modules) {
    if (m.id < 0 || m.id >= topology.module_count()) {
      throw TopologyError("module " + std::to_string(m.id) + " has no route in the topology");
    }
    if (seen[static_cast<std::size_t>(m.id)]) {
      throw PartitionError("module " + std::to_string(m.id) + " appears twice");
    }
    seen[static_cast<std::size_t>(m.id)] = true;
  }
  if (static_cast<std::int64_t>(modules.size()) != topology.module_count()) {
    throw TopologyError("topology routes " + std::to_string(topology.module_count()) + " modules but " +
                        std::to_string(modules.size()) + " were supplied");
  }

  std::vector<std::pair<Index, Index>> runs;
  for (const auto& m : modules) runs.emplace_back(m.first_antenna, m.antenna_count);
  std::sort(runs.begin(), runs.end());
  Index next = 0;
  for (auto [first, count] : runs) {
    if (count < 1 || first != next) {
      throw PartitionError("module antenna ranges overlap or leave a gap at antenna " + std::to_string(next));
    }
    next = first + count;
  }
  if (next != antennas) {
    throw PartitionError("module antenna ranges cover " + std::to_string(next) + " of " +
                         std::to_string(antennas) + " antennas");
  }
}

}  // namespace

SampleBlock SampleBlock::zeros(SampleDomain domain, Index dimension, Index symbols, std::size_t subcarriers) {
  SampleBlock b;
  b.domain = domain;
  b.subcarriers.assign(subcarriers, CMatrix::Zero(dimension, symbols));
  return b;
}

double max_abs_deviation(const SampleBlock& a, const SampleBlock& b) {
  require_same_subcarriers(a.subcarrier_count(), b.subcarrier_count(), "max_abs_deviation");
  double worst = 0.0;
  for (std::size_t s = 0; s < a.subcarriers.size(); ++s) {
    const auto& x = a.subcarriers[s];
    const auto& y = b.subcarriers[s];
    if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionError("max_abs_deviation: shape mismatch");
    if (x.size() == 0) continue;
    worst = std::max(worst, (x.real() - y.real()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (x.imag() - y.imag()).cwiseAbs().maxCoeff());
  }
  return worst;
}

ChannelMatrix generate_channel(Index antennas, Index terminals, std::size_t subcarriers, std::uint64_t seed) {
  if (terminals < 1 || antennas < 1) throw DimensionError("channel needs at least one antenna and terminal");
  if (terminals > antennas) {
    throw DimensionError("cannot serve " + std::to_string(terminals) + " terminals with " +
                         std::to_string(antennas) + " antennas");
  }
  if (subcarriers < 1) throw DimensionError("channel needs at least one subcarrier");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> component(0.0, std::sqrt(0.5));
  ChannelMatrix h;
  h.subcarriers.reserve(subcarriers);
  for (std::size_t s = 0; s < subcarriers; ++s) {
    CMatrix m(antennas, terminals);
    for (Index k = 0; k < terminals; ++k) {
      for (Index a = 0; a < antennas; ++a) {
        const double re = component(rng);
        const double im = component(rng);
        m(a, k) = Complex(re, im);
      }
    }
    h.subcarriers.push_back(std::move(m));
  }
  return h;
}

SampleBlock random_symbols(Index terminals, Index symbols, std::size_t subcarriers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(0.5);
  const double a = std::numbers::sqrt2 / 2.0;
  SampleBlock x = SampleBlock::zeros(SampleDomain::Terminal, terminals, symbols, subcarriers);
  for (auto& m : x.subcarriers) {
    for (Index j = 0; j < symbols; ++j) {
      for (Index k = 0; k < terminals; ++k) {
        const double re = bit(rng) ? a : -a;
        const double im = bit(rng) ? a : -a;
        m(k, j) = Complex(re, im);
      }
    }
  }
  return x;
}

SampleBlock dft_pilots(Index terminals, Index length, std::size_t subcarriers) {
  if (length < terminals) throw RankError("pilot length must be at least the number of terminals");
  SampleBlock p = SampleBlock::zeros(SampleDomain::Terminal, terminals, length, subcarriers);
  for (auto& m : p.subcarriers) {
    for (Index k = 0; k < terminals; ++k) {
      for (Index t = 0; t < length; ++t) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * t) % length) /
                             static_cast<double>(length);
        m(k, t) = std::polar(1.0, phase);
      }
    }
  }
  return p;
}

SampleBlock propagate(const ChannelMatrix& h, const SampleBlock& x) {
  require_same_subcarriers(h.subcarrier_count(), x.subcarrier_count(), "propagate");
  require_domain(x, SampleDomain::Terminal, h.terminals(), "propagate");
  SampleBlock y;
  y.domain = SampleDomain::Antenna;
  for (std::size_t s = 0; s < h.subcarriers.size(); ++s) {
    y.subcarriers.push_back(h.subcarriers[s] * x.subcarriers[s]);
  }
  return y;
}

void add_noise(SampleBlock& block, double snr_db, std::uint64_t seed) {
  double power = 0.0;
  Index count = 0;
  for (const auto& m : block.subcarriers) {
    power += m.squaredNorm();
    count += m.size();
  }
  if (count == 0) return;
  const double noise_var = (power / static_cast<double>(count)) / std::pow(10.0, snr_db / 10.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> component(0.0, std::sqrt(noise_var / 2.0));
  for (auto& m : block.subcarriers) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) {
        const double re = component(rng);
        const double im = component(rng);
        m(i, j) += Complex(re, im);
      }
    }
  }
}

ChannelMatrix estimate_channel(const SampleBlock& pilots, const SampleBlock& received) {
  require_same_subcarriers(pilots.subcarrier_count(), received.subcarrier_count(), "estimate_channel");
  if (pilots.domain != SampleDomain::Terminal || received.domain != SampleDomain::Antenna) {
    throw DimensionError("estimate_channel: expects terminal-domain pilots and antenna-domain reception");
  }
  ChannelMatrix h;
  for (std::size_t s = 0; s < pilots.subcarriers.size(); ++s) {
    const CMatrix& p = pilots.subcarriers[s];
    const CMatrix& y = received.subcarriers[s];
    if (p.cols() != y.cols()) throw DimensionError("estimate_channel: pilot and reception lengths differ");
    const Index k = p.rows();
    if (p.cols() < k) throw RankError("pilot length shorter than the number of terminals");
    Eigen::ColPivHouseholderQR<CMatrix> qr(p.adjoint());
    if (qr.rank() < k) {
      throw RankError("pilot matrix has rank " + std::to_string(qr.rank()) + " < " + std::to_string(k));
    }
    // H (P P^H) = Y P^H; the Gram matrix is Hermitian positive definite.
    const CMatrix gram = p * p.adjoint();
    const CMatrix rhs = y * p.adjoint();
    h.subcarriers.push_back(gram.llt().solve(rhs.adjoint()).adjoint());
  }
  return h;
}

BeamformingWeights compute_weights(const ChannelMatrix& h, BeamformingMethod method) {
  BeamformingWeights w;
  w.method = method;
  for (const auto& hs : h.subcarriers) {
    if (method == BeamformingMethod::MRC) {
      w.subcarriers.push_back(hs);
      continue;
    }
    const Index m = hs.rows();
    const Index k = hs.cols();
    if (k > m) throw SingularMatrix("zero forcing needs at least as many antennas as terminals");
    Eigen::ColPivHouseholderQR<CMatrix> rank_check(hs);
    if (rank_check.rank() < k) {
      throw SingularMatrix("channel has rank " + std::to_string(rank_check.rank()) + " < " + std::to_string(k));
    }
    // H = Q R  =>  W = Q R^-H and W^H H = R^-1 Q^H Q R = I.
    Eigen::HouseholderQR<CMatrix> qr(hs);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(m, k);
    const CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const CMatrix wh = r.triangularView<Eigen::Upper>().solve(q.adjoint());
    w.subcarriers.push_back(wh.adjoint());
  }
  return w;
}

double subspace_residual(const ChannelMatrix& h, const SampleBlock& y) {
  require_same_subcarriers(h.subcarrier_count(), y.subcarrier_count(), "subspace_residual");
  require_domain(y, SampleDomain::Antenna, h.antennas(), "subspace_residual");
  double residual = 0.0;
  double total = 0.0;
  for (std::size_t s = 0; s < h.subcarriers.size(); ++s) {
    const CMatrix& hs = h.subcarriers[s];
    Eigen::HouseholderQR<CMatrix> qr(hs);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(hs.rows(), hs.cols());
    const CMatrix& ys = y.subcarriers[s];
    residual += (ys - q * (q.adjoint() * ys)).squaredNorm();
    total += ys.squaredNorm();
  }
  return total > 0.0 ? std::sqrt(residual / total) : 0.0;
}

SampleBlock centralized_uplink(const BeamformingWeights& w, const SampleBlock& y) {
  require_same_subcarriers(w.subcarrier_count(), y.subcarrier_count(), "centralized_uplink");
  require_domain(y, SampleDomain::Antenna, w.antennas(), "centralized_uplink");
  SampleBlock out;
  out.domain = SampleDomain::Terminal;
  for (std::size_t s = 0; s < w.subcarriers.size(); ++s) {
    out.subcarriers.push_back(w.subcarriers[s].adjoint() * y.subcarriers[s]);
  }
  return out;
}

SampleBlock centralized_downlink(const BeamformingWeights& w, const SampleBlock& x) {
  require_same_subcarriers(w.subcarrier_count(), x.subcarrier_count(), "centralized_downlink");
  require_domain(x, SampleDomain::Terminal, w.terminals(), "centralized_downlink");
  SampleBlock out;
  out.domain = SampleDomain::Antenna;
  for (std::size_t s = 0; s < w.subcarriers.size(); ++s) {
    out.subcarriers.push_back(w.subcarriers[s] * x.subcarriers[s]);
  }
  return out;
}

std::vector<ModuleState> make_modules(const BeamformingWeights& w, const Topology& topology,
                                      std::span<const std::int64_t> buffer_depths) {
  const std::int64_t n = topology.module_count();
  const Index antennas = w.antennas();
  if (antennas % n != 0) {
    throw PartitionError(std::to_string(n) + " modules cannot split " + std::to_string(antennas) + " antennas evenly");
  }
  if (!buffer_depths.empty() && static_cast<std::int64_t>(buffer_depths.size()) != n) {
    throw DimensionError("need one buffer depth per module");
  }
  const Index per = antennas / n;
  std::vector<ModuleState> modules;
  modules.reserve(static_cast<std::size_t>(n));
  for (NodeId id = 0; id < n; ++id) {
    ModuleState m;
    m.id = id;
    m.first_antenna = id * per;
    m.antenna_count = per;
    for (const auto& ws : w.subcarriers) m.weights.push_back(ws.middleRows(m.first_antenna, per));
    m.buffer_depth = buffer_depths.empty() ? 0 : buffer_depths[static_cast<std::size_t>(id)];
    if (m.buffer_depth < 0) throw DimensionError("buffer depth must be >= 0");
    modules.push_back(std::move(m));
  }
  return modules;
}

std::vector<CMatrix> module_partial_sum(const ModuleState& module, const SampleBlock& y) {
  require_same_subcarriers(module.weights.size(), y.subcarrier_count(), "module_partial_sum");
  std::vector<CMatrix> out;
  out.reserve(module.weights.size());
  for (std::size_t s = 0; s < module.weights.size(); ++s) {
    const CMatrix& local_w = module.weights[s];
    if (local_w.rows() != module.antenna_count) throw DimensionError("module weight rows do not match its antennas");
    out.push_back(local_w.adjoint() * y.subcarriers[s].middleRows(module.first_antenna, module.antenna_count));
  }
  return out;
}

UplinkResult distributed_uplink(std::span<ModuleState> modules, const SampleBlock& y, const Topology& topology,
                                std::optional<PartialSumQuantizer> quantizer) {
  if (y.domain != SampleDomain::Antenna) throw DimensionError("distributed_uplink: expected antenna-domain samples");
  check_modules(modules, y.dimension(), topology);
  if (modules.empty()) throw DimensionError("distributed_uplink: no modules");
  const Index k = modules.front().weights.empty() ? 0 : modules.front().weights.front().cols();

  std::vector<ModuleState*> by_id(modules.size());
  for (auto& m : modules) {
    m.accumulator = module_partial_sum(m, y);
    by_id[static_cast<std::size_t>(m.id)] = &m;
  }

  UplinkResult result;
  result.estimate = SampleBlock::zeros(SampleDomain::Terminal, k, y.symbol_count(), y.subcarrier_count());
  for (NodeId id : topology.children_first_order()) {
    ModuleState& m = *by_id[static_cast<std::size_t>(id)];
    if (quantizer) {
      for (auto& acc : m.accumulator) {
        for (Index i = 0; i < acc.size(); ++i) {
          bool clip_re = false;
          bool clip_im = false;
          const double re = quantize_component(acc(i).real(), quantizer->bits, quantizer->full_scale, &clip_re);
          const double im = quantize_component(acc(i).imag(), quantizer->bits, quantizer->full_scale, &clip_im);
          acc(i) = Complex(re, im);
          result.saturations += static_cast<std::size_t>(clip_re) + static_cast<std::size_t>(clip_im);
        }
      }
    }
    const NodeId parent = topology.next_hop(id);
    auto& target = parent == topology.central() ? result.estimate.subcarriers
                                                : by_id[static_cast<std::size_t>(parent)]->accumulator;
    for (std::size_t s = 0; s < target.size(); ++s) target[s] += m.accumulator[s];
  }
  if (quantizer) result.estimate.quantized_bits = quantizer->bits;
  return result;
}

SampleBlock distributed_downlink(std::span<const ModuleState> modules, const SampleBlock& x,
                                 const Topology& topology) {
  if (x.domain != SampleDomain::Terminal) throw DimensionError("distributed_downlink: expected terminal-domain samples");
  Index antennas = 0;
  for (const auto& m : modules) antennas += m.antenna_count;
  check_modules(modules, antennas, topology);

  std::vector<const ModuleState*> by_id(modules.size());
  for (const auto& m : modules) by_id[static_cast<std::size_t>(m.id)] = &m;

  // Walk parents before children; a module only precodes what its parent
  // handed down.
  auto order = topology.children_first_order();
  std::reverse(order.begin(), order.end());
  std::vector<const std::vector<CMatrix>*> received(modules.size(), nullptr);
  SampleBlock out = SampleBlock::zeros(SampleDomain::Antenna, antennas, x.symbol_count(), x.subcarrier_count());
  for (NodeId id : order) {
    const NodeId parent = topology.next_hop(id);
    const auto* stream = parent == topology.central() ? &x.subcarriers : received[static_cast<std::size_t>(parent)];
    if (stream == nullptr) throw TopologyError("module " + std::to_string(id) + " was reached before its parent");
    received[static_cast<std::size_t>(id)] = stream;

    const ModuleState& m = *by_id[static_cast<std::size_t>(id)];
    require_same_subcarriers(m.weights.size(), stream->size(), "distributed_downlink");
    for (std::size_t s = 0; s < stream->size(); ++s) {
      if (m.weights[s].cols() != (*stream)[s].rows()) throw DimensionError("distributed_downlink: terminal count mismatch");
      out.subcarriers[s].middleRows(m.first_antenna, m.antenna_count) = m.weights[s] * (*stream)[s];
    }
  }
  return out;
}

double quantize_component(double value, int bits, double full_scale, bool* clipped) {
  if (bits < 1 || bits > 52) throw RangeError("quantizer bits must be in [1, 52]");
  if (!(full_scale > 0.0)) throw RangeError("quantizer full scale must be positive");
  const double levels = std::ldexp(1.0, bits);
  const double step = 2.0 * full_scale / levels;
  const double top = levels / 2.0 - 1.0;
  double code = std::floor(value / step);
  bool clip = false;
  if (code > top) {
    code = top;
    clip = true;
  } else if (code < -top - 1.0) {
    code = -top - 1.0;
    clip = true;
  }
  if (clipped) *clipped = clip;
  return (code + 0.5) * step;
}

QuantizeResult quantize(const SampleBlock& block, int bits, double full_scale) {
  QuantizeResult r;
  r.block = block;
  for (auto& m : r.block.subcarriers) {
    for (Index i = 0; i < m.size(); ++i) {
      bool clip_re = false;
      bool clip_im = false;
      const double re = quantize_component(m(i).real(), bits, full_scale, &clip_re);
      const double im = quantize_component(m(i).imag(), bits, full_scale, &clip_im);
      m(i) = Complex(re, im);
      r.saturations += static_cast<std::size_t>(clip_re) + static_cast<std::size_t>(clip_im);
    }
  }
  r.block.quantized_bits = bits;
  return r;
}

SampleBlock per_subcarrier_process(const ChannelMatrix& h, BeamformingMethod method, const SampleBlock& in,
                                   Direction direction, const Topology* topology) {
  require_same_subcarriers(h.subcarrier_count(), in.subcarrier_count(), "per_subcarrier_process");
  SampleBlock out;
  out.domain = direction == Direction::Uplink ? SampleDomain::Terminal : SampleDomain::Antenna;
  for (std::size_t s = 0; s < h.subcarriers.size(); ++s) {
    ChannelMatrix one{{h.subcarriers[s]}};
    SampleBlock slice;
    slice.domain = in.domain;
    slice.subcarriers = {in.subcarriers[s]};
    const BeamformingWeights w = compute_weights(one, method);
    SampleBlock result;
    if (topology == nullptr) {
      result = direction == Direction::Uplink ? centralized_uplink(w, slice) : centralized_downlink(w, slice);
    } else {
      auto modules = make_modules(w, *topology);
      result = direction == Direction::Uplink ? distributed_uplink(modules, slice, *topology).estimate
                                              : distributed_downlink(modules, slice, *topology);
    }
    out.subcarriers.push_back(std::move(result.subcarriers.front()));
  }
  return out;
}

}  // namespace lis
