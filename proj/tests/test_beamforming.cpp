// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lis/beamforming.hpp"
#include "lis/netsim.hpp"
#include "test_support.hpp"

using namespace lis;
using lis::testing::make_config;

namespace {

// Triple loop with explicit conjugation; shares nothing with Eigen's products.
CMatrix naive_hermitian_product(const CMatrix& w, const CMatrix& y) {
  CMatrix out(w.cols(), y.cols());
  for (Index k = 0; k < w.cols(); ++k) {
    for (Index s = 0; s < y.cols(); ++s) {
      Complex acc{0.0, 0.0};
      for (Index m = 0; m < w.rows(); ++m) acc += std::conj(w(m, k)) * y(m, s);
      out(k, s) = acc;
    }
  }
  return out;
}

CMatrix naive_product(const CMatrix& w, const CMatrix& x) {
  CMatrix out(w.rows(), x.cols());
  for (Index m = 0; m < w.rows(); ++m) {
    for (Index s = 0; s < x.cols(); ++s) {
      Complex acc{0.0, 0.0};
      for (Index k = 0; k < w.cols(); ++k) acc += w(m, k) * x(k, s);
      out(m, s) = acc;
    }
  }
  return out;
}

double max_abs(const CMatrix& a, const CMatrix& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      worst = std::max({worst, std::abs(a(i, j).real() - b(i, j).real()), std::abs(a(i, j).imag() - b(i, j).imag())});
    }
  }
  return worst;
}

Topology topology_for(TopologyKind kind, std::int64_t m, std::int64_t rows, std::int64_t cols, std::int64_t chains) {
  return build_topology(make_config(m, rows * cols, 1, rows, cols, chains), kind);
}

constexpr TopologyKind kAllKinds[] = {TopologyKind::FullyParallel, TopologyKind::DaisyChain, TopologyKind::Mesh};

}  // namespace

TEST_CASE("channel generation") {
  SUBCASE("seeded and reproducible") {
    const auto a = generate_channel(16, 4, 3, 99);
    const auto b = generate_channel(16, 4, 3, 99);
    const auto c = generate_channel(16, 4, 3, 100);
    REQUIRE(a.subcarrier_count() == 3);
    for (std::size_t f = 0; f < 3; ++f) CHECK(a.subcarriers[f] == b.subcarriers[f]);
    CHECK(a.subcarriers[0] != c.subcarriers[0]);
  }
  SUBCASE("column energies concentrate around M") {
    int within = 0;
    int total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto h = generate_channel(64, 4, 1, seed);
      for (Index k = 0; k < 4; ++k) {
        const double norm2 = h.subcarriers[0].col(k).squaredNorm();
        ++total;
        if (std::abs(norm2 / 64.0 - 1.0) < 0.25) ++within;
      }
    }
    CHECK(within >= total * 95 / 100);
  }
  SUBCASE("more terminals than antennas") { CHECK_THROWS_AS(generate_channel(4, 8, 1, 0), DimensionError); }
}

TEST_CASE("least-squares channel estimation") {
  SUBCASE("noiseless pilots recover H") {
    const auto h = generate_channel(32, 4, 2, 7);
    const auto p = dft_pilots(4, 8, 2);
    const auto est = estimate_channel(p, propagate(h, p));
    for (std::size_t f = 0; f < 2; ++f) CHECK(max_abs(est.subcarriers[f], h.subcarriers[f]) < 1e-10);
  }
  SUBCASE("repeated pilot rows are rank deficient") {
    auto p = dft_pilots(3, 6, 1);
    p.subcarriers[0].row(2) = p.subcarriers[0].row(1);
    const auto h = generate_channel(8, 3, 1, 1);
    CHECK_THROWS_AS(estimate_channel(p, propagate(h, p)), RankError);
  }
  SUBCASE("too few pilots") {
    CHECK_THROWS_AS(dft_pilots(4, 3, 1), RankError);
    const auto h = generate_channel(8, 4, 1, 1);
    auto p = SampleBlock::zeros(SampleDomain::Terminal, 4, 3, 1);
    p.subcarriers[0].setRandom();
    CHECK_THROWS_AS(estimate_channel(p, propagate(h, p)), RankError);
  }
  SUBCASE("20 dB pilots with P = 4K") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto h = generate_channel(32, 4, 1, seed);
      const auto p = dft_pilots(4, 16, 1);
      auto y = propagate(h, p);
      add_noise(y, 20.0, seed + 1000);
      const auto est = estimate_channel(p, y);
      const double rel = (est.subcarriers[0] - h.subcarriers[0]).norm() / h.subcarriers[0].norm();
      CHECK(rel < 0.15);
    }
  }
}

TEST_CASE("weights") {
  SUBCASE("zero forcing inverts the channel") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto h = generate_channel(24, 6, 2, seed);
      const auto w = compute_weights(h, BeamformingMethod::ZF);
      for (std::size_t f = 0; f < 2; ++f) {
        const CMatrix g = naive_hermitian_product(w.subcarriers[f], h.subcarriers[f]);
        CHECK(max_abs(g, CMatrix::Identity(6, 6)) < 1e-9);
      }
    }
  }
  SUBCASE("MRC is the channel itself") {
    const auto h = generate_channel(8, 2, 1, 3);
    CHECK(compute_weights(h, BeamformingMethod::MRC).subcarriers[0] == h.subcarriers[0]);
  }
  SUBCASE("duplicated columns are singular") {
    auto h = generate_channel(8, 3, 1, 3);
    h.subcarriers[0].col(2) = h.subcarriers[0].col(0);
    CHECK_THROWS_AS(compute_weights(h, BeamformingMethod::ZF), SingularMatrix);
  }
  SUBCASE("orthogonal columns make MRC and ZF proportional") {
    ChannelMatrix h;
    CMatrix ortho = CMatrix::Zero(8, 2);
    for (Index m = 0; m < 8; ++m) {
      ortho(m, 0) = Complex{1.0, 0.0};
      ortho(m, 1) = std::polar(1.0, M_PI * static_cast<double>(m));  // +-1 alternating
    }
    h.subcarriers.push_back(ortho);
    const auto mrc = compute_weights(h, BeamformingMethod::MRC).subcarriers[0];
    const auto zf = compute_weights(h, BeamformingMethod::ZF).subcarriers[0];
    CHECK(max_abs(zf * 8.0, mrc) < 1e-12);
  }
}

TEST_CASE("received samples lie in the channel's column space") {
  const auto h = generate_channel(32, 4, 2, 17);
  const auto y = propagate(h, random_symbols(4, 10, 2, 18));
  CHECK(subspace_residual(h, y) < 1e-10);
  auto noisy = y;
  add_noise(noisy, 0.0, 19);
  CHECK(subspace_residual(h, noisy) > 0.1);
}

TEST_CASE("distributed uplink equals the direct product on every topology") {
  struct Shape {
    std::int64_t m, k, rows, cols, chains;
  };
  const Shape shapes[] = {{64, 8, 4, 4, 4}, {48, 6, 2, 3, 2}, {8, 2, 1, 1, 1}, {32, 4, 1, 8, 1}, {128, 16, 4, 8, 8}};
  for (const auto& s : shapes) {
    for (const auto kind : kAllKinds) {
      const auto t = topology_for(kind, s.m, s.rows, s.cols, s.chains);
      const auto h = generate_channel(s.m, s.k, 2, static_cast<std::uint64_t>(s.m + s.k));
      for (const auto method : {BeamformingMethod::MRC, BeamformingMethod::ZF}) {
        const auto w = compute_weights(h, method);
        const auto y = propagate(h, random_symbols(s.k, 12, 2, 5));
        auto modules = make_modules(w, t);
        const auto result = distributed_uplink(modules, y, t);
        CHECK(result.estimate.domain == SampleDomain::Terminal);
        CHECK(result.saturations == 0);
        for (std::size_t f = 0; f < 2; ++f) {
          CHECK(max_abs(result.estimate.subcarriers[f], naive_hermitian_product(w.subcarriers[f], y.subcarriers[f])) <
                1e-10);
        }
      }
    }
  }
}

TEST_CASE("uplink result does not depend on the module list order") {
  const auto t = topology_for(TopologyKind::Mesh, 64, 4, 4, 1);
  const auto h = generate_channel(64, 8, 1, 41);
  const auto w = compute_weights(h, BeamformingMethod::ZF);
  const auto y = propagate(h, random_symbols(8, 4, 1, 42));
  auto modules = make_modules(w, t);
  const auto reference = distributed_uplink(modules, y, t).estimate;
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto shuffled = make_modules(w, t);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(max_abs_deviation(distributed_uplink(shuffled, y, t).estimate, reference) < 1e-12);
  }
}

TEST_CASE("module accumulators hold the forwarded sums") {
  // 1x3 chain: module 2 forwards its own sum, module 1 adds its own, module 0
  // forwards everything.
  const auto t = topology_for(TopologyKind::DaisyChain, 6, 1, 3, 1);
  const auto h = generate_channel(6, 2, 1, 8);
  const auto w = compute_weights(h, BeamformingMethod::MRC);
  const auto y = propagate(h, random_symbols(2, 3, 1, 9));
  auto modules = make_modules(w, t);
  const auto result = distributed_uplink(modules, y, t);
  const CMatrix& wf = w.subcarriers[0];
  const CMatrix& yf = y.subcarriers[0];
  const CMatrix own2 = naive_hermitian_product(wf.middleRows(4, 2), yf.middleRows(4, 2));
  const CMatrix own1 = naive_hermitian_product(wf.middleRows(2, 2), yf.middleRows(2, 2));
  CHECK(max_abs(modules[2].accumulator[0], own2) < 1e-12);
  CHECK(max_abs(modules[1].accumulator[0], own1 + own2) < 1e-12);
  CHECK(max_abs(modules[0].accumulator[0], result.estimate.subcarriers[0]) < 1e-12);
}

TEST_CASE("distributed downlink broadcasts and precodes locally") {
  for (const auto kind : kAllKinds) {
    const auto t = topology_for(kind, 32, 2, 4, 2);
    const auto h = generate_channel(32, 4, 2, 11);
    const auto w = compute_weights(h, BeamformingMethod::ZF);
    const auto x = random_symbols(4, 6, 2, 12);
    const auto modules = make_modules(w, t);
    const auto tx = distributed_downlink(modules, x, t);
    CHECK(tx.domain == SampleDomain::Antenna);
    for (std::size_t f = 0; f < 2; ++f) {
      CHECK(max_abs(tx.subcarriers[f], naive_product(w.subcarriers[f], x.subcarriers[f])) < 1e-12);
    }
    CHECK(max_abs_deviation(tx, centralized_downlink(w, x)) < 1e-12);

    // Uplink after downlink through the same weights gives W^H W x.
    auto up_modules = make_modules(w, t);
    const auto round_trip = distributed_uplink(up_modules, tx, t).estimate;
    for (std::size_t f = 0; f < 2; ++f) {
      const CMatrix gram = naive_hermitian_product(w.subcarriers[f], w.subcarriers[f]);
      CHECK(max_abs(round_trip.subcarriers[f], naive_product(gram, x.subcarriers[f])) < 1e-10);
    }
  }
}

TEST_CASE("module bookkeeping errors") {
  const auto t = topology_for(TopologyKind::Mesh, 16, 2, 2, 1);
  const auto h = generate_channel(16, 2, 1, 1);
  const auto w = compute_weights(h, BeamformingMethod::MRC);
  const auto y = propagate(h, random_symbols(2, 2, 1, 2));

  SUBCASE("uneven split") {
    const auto three = topology_for(TopologyKind::Mesh, 12, 1, 3, 1);
    const auto h10 = generate_channel(10, 2, 1, 1);
    CHECK_THROWS_AS(make_modules(compute_weights(h10, BeamformingMethod::MRC), three), PartitionError);
  }
  SUBCASE("overlapping antenna ranges") {
    auto modules = make_modules(w, t);
    modules[1].first_antenna = 2;
    CHECK_THROWS_AS(distributed_uplink(modules, y, t), PartitionError);
  }
  SUBCASE("missing module") {
    auto modules = make_modules(w, t);
    modules.pop_back();
    CHECK_THROWS(distributed_uplink(modules, y, t));
  }
  SUBCASE("unknown module id") {
    auto modules = make_modules(w, t);
    modules[3].id = 7;
    CHECK_THROWS_AS(distributed_uplink(modules, y, t), TopologyError);
  }
  SUBCASE("buffer depths must cover every module") {
    const std::vector<std::int64_t> depths{0, 1};
    CHECK_THROWS(make_modules(w, t, depths));
  }
}

TEST_CASE("quantizer") {
  SUBCASE("error within half a step inside the range") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const int bits : {4, 8, 15}) {
      const double step = 2.0 / std::ldexp(1.0, bits);
      for (int i = 0; i < 2000; ++i) {
        const double v = u(rng) * (1.0 - 1e-12);
        bool clipped = true;
        const double q = quantize_component(v, bits, 1.0, &clipped);
        CHECK_FALSE(clipped);
        CHECK(std::abs(q - v) <= step / 2 + 1e-15);
      }
    }
  }
  SUBCASE("outer codes") {
    // 3 bits over [-1, 1): step 0.25, levels -0.875 ... 0.875.
    bool clipped = false;
    CHECK(quantize_component(5.0, 3, 1.0, &clipped) == doctest::Approx(0.875));
    CHECK(clipped);
    CHECK(quantize_component(-5.0, 3, 1.0, &clipped) == doctest::Approx(-0.875));
    CHECK(clipped);
    CHECK(quantize_component(0.0, 3, 1.0) == doctest::Approx(0.125));
    CHECK(quantize_component(-0.01, 3, 1.0) == doctest::Approx(-0.125));
  }
  SUBCASE("monotone and idempotent") {
    double previous = -1e9;
    for (int i = -3000; i <= 3000; ++i) {
      const double v = i / 1000.0;
      const double q = quantize_component(v, 6, 2.0);
      CHECK(q >= previous);
      CHECK(quantize_component(q, 6, 2.0) == q);
      previous = q;
    }
  }
  SUBCASE("block quantization counts saturations per component") {
    auto block = SampleBlock::zeros(SampleDomain::Terminal, 2, 1, 1);
    block.subcarriers[0](0, 0) = Complex{3.0, 0.1};
    block.subcarriers[0](1, 0) = Complex{-3.0, -3.0};
    const auto q = quantize(block, 8, 1.0);
    CHECK(q.saturations == 3);
    REQUIRE(q.block.quantized_bits.has_value());
    CHECK(*q.block.quantized_bits == 8);
  }
}

TEST_CASE("quantized uplink stays close to exact") {
  const auto t = topology_for(TopologyKind::DaisyChain, 64, 4, 4, 2);
  const auto h = generate_channel(64, 4, 1, 21);
  const auto w = compute_weights(h, BeamformingMethod::ZF);
  const auto y = propagate(h, random_symbols(4, 8, 1, 22));
  auto exact_modules = make_modules(w, t);
  const auto exact = distributed_uplink(exact_modules, y, t).estimate;
  auto modules = make_modules(w, t);
  const auto q = distributed_uplink(modules, y, t, PartialSumQuantizer{15, 4.0});
  CHECK(q.saturations == 0);
  CHECK(max_abs_deviation(q.estimate, exact) <= 16 * (4.0 / std::ldexp(1.0, 15)));
  CHECK(max_abs_deviation(q.estimate, exact) > 0.0);
}

TEST_CASE("subcarriers are processed independently") {
  const auto t = topology_for(TopologyKind::Mesh, 32, 2, 4, 1);
  SUBCASE("swapping two subcarriers swaps the outputs") {
    auto h = generate_channel(32, 4, 3, 31);
    auto y = propagate(h, random_symbols(4, 5, 3, 32));
    const auto out = per_subcarrier_process(h, BeamformingMethod::ZF, y, Direction::Uplink, &t);
    std::swap(h.subcarriers[0], h.subcarriers[2]);
    std::swap(y.subcarriers[0], y.subcarriers[2]);
    const auto swapped = per_subcarrier_process(h, BeamformingMethod::ZF, y, Direction::Uplink, &t);
    CHECK(swapped.subcarriers[0] == out.subcarriers[2]);
    CHECK(swapped.subcarriers[2] == out.subcarriers[0]);
    CHECK(swapped.subcarriers[1] == out.subcarriers[1]);
  }
  SUBCASE("64 subcarriers match 64 separate runs bit for bit") {
    const auto h = generate_channel(32, 4, 64, 33);
    const auto x = random_symbols(4, 3, 64, 34);
    for (const auto dir : {Direction::Uplink, Direction::Downlink}) {
      const SampleBlock in = dir == Direction::Uplink ? propagate(h, x) : x;
      const auto all = per_subcarrier_process(h, BeamformingMethod::ZF, in, dir, &t);
      for (std::size_t f = 0; f < 64; ++f) {
        ChannelMatrix hf;
        hf.subcarriers.push_back(h.subcarriers[f]);
        SampleBlock inf{in.domain, {in.subcarriers[f]}, std::nullopt};
        const auto one = per_subcarrier_process(hf, BeamformingMethod::ZF, inf, dir, &t);
        CHECK(one.subcarriers[0] == all.subcarriers[f]);
      }
    }
  }
  SUBCASE("centralized and distributed agree") {
    const auto h = generate_channel(32, 4, 4, 35);
    const auto y = propagate(h, random_symbols(4, 6, 4, 36));
    const auto central = per_subcarrier_process(h, BeamformingMethod::MRC, y, Direction::Uplink);
    const auto dist = per_subcarrier_process(h, BeamformingMethod::MRC, y, Direction::Uplink, &t);
    CHECK(max_abs_deviation(central, dist) < 1e-10);
  }
  SUBCASE("mismatched shapes") {
    const auto h = generate_channel(32, 4, 2, 37);
    const auto y = propagate(generate_channel(32, 4, 3, 38), random_symbols(4, 2, 3, 39));
    CHECK_THROWS_AS(per_subcarrier_process(h, BeamformingMethod::ZF, y, Direction::Uplink), DimensionError);
  }
}
