#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "npp/parallel.hpp"
#include "npp/rng.hpp"

using namespace npp;

TEST_CASE("philox4x32-10 known answers") {
  auto r = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(r[0] == 0x6627e8d5u);
  CHECK(r[1] == 0xe169c58du);
  CHECK(r[2] == 0xbc57ac4cu);
  CHECK(r[3] == 0x9b00dbd8u);
  r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(r[0] == 0x408f276du);
  CHECK(r[1] == 0x41c83b0eu);
  CHECK(r[2] == 0xa20bc7c6u);
  CHECK(r[3] == 0x6d5451fdu);
  r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(r[0] == 0xd16cfe09u);
  CHECK(r[1] == 0x94fdccebu);
  CHECK(r[2] == 0x5001e420u);
  CHECK(r[3] == 0x24126ea1u);
}

TEST_CASE("normal quantile inverts the erfc-based cdf") {
  // Lower tail only: p = Phi(x) is representable to full relative precision there.
  for (double x = -8.0; x <= 0.5; x += 0.0173) {
    double p = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(normal_quantile(p) == doctest::Approx(x).epsilon(1e-12));
  }
  for (double p : {0.01, 0.2, 0.4375, 0.75, 0.9}) CHECK(normal_quantile(1 - p) == doctest::Approx(-normal_quantile(p)).epsilon(1e-13));
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
}

TEST_CASE("streams are pure functions of seed, tag and index") {
  Stream a(7, stream_tag("x"), 3), b(7, stream_tag("x"), 3), c(7, stream_tag("x"), 4), d(7, stream_tag("y"), 3);
  for (int i = 0; i < 100; ++i) {
    double va = a.normal();
    CHECK(va == b.normal());
    CHECK(va != c.normal());
    CHECK(va != d.normal());
  }
}

TEST_CASE("uniforms lie in the open unit interval with the right mean") {
  Stream s(1, stream_tag("u"), 0);
  double sum = 0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // mean 1/2, sd of mean sqrt(1/12/N)
  CHECK(std::abs(sum / N - 0.5) < 4 * std::sqrt(1.0 / 12 / N));
}

TEST_CASE("normal moments") {
  Stream s(2, stream_tag("n"), 0);
  const int N = 200000;
  double m1 = 0, m2 = 0;
  for (int i = 0; i < N; ++i) {
    double g = s.normal();
    m1 += g;
    m2 += g * g;
  }
  m1 /= N;
  m2 /= N;
  CHECK(std::abs(m1) < 4 / std::sqrt(N));
  CHECK(std::abs(m2 - 1) < 4 * std::sqrt(2.0 / N));
}

TEST_CASE("below is in range and hits every value") {
  Stream s(3, stream_tag("b"), 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    auto v = s.below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("parallel_for fills every slot regardless of thread count") {
  for (int threads : {1, 3, 8}) {
    set_thread_count(threads);
    std::vector<int> out(1000, 0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i % 97));
  }
  set_thread_count(1);
}

TEST_CASE("parallel_for propagates the lowest-index exception") {
  set_thread_count(4);
  CHECK_THROWS_WITH(parallel_for(100,
                                 [](std::size_t i) {
                                   if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
                                 }),
                    "17");
  set_thread_count(1);
}
