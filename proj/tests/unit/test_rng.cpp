#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "poisonlab/rng.hpp"

using poisonlab::Rng;

TEST_SUITE("rng") {

TEST_CASE("engine is the standard 64-bit Mersenne Twister") {
  // The standard fixes the 10000th output for the default seed.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("derived streams differ and are reproducible") {
  Rng a = Rng::derive(1, 0), b = Rng::derive(1, 1), c = Rng::derive(1, 0);
  const auto x = a.next_u64();
  CHECK(x != b.next_u64());
  CHECK(x == c.next_u64());
}

TEST_CASE("uniform lies in [0, 1) and has mean one half") {
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_index covers its range without bias") {
  Rng rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("normal has zero mean and unit variance") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("permutation and sampling") {
  Rng rng(5);
  auto p = rng.permutation(50);
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> id(50);
  std::iota(id.begin(), id.end(), 0);
  CHECK(sorted == id);

  const auto s = rng.sample_without_replacement(30, 30);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 30);

  const auto w = rng.sample_with_replacement(3, 40);
  CHECK(w.size() == 40);
  CHECK(std::all_of(w.begin(), w.end(), [](std::size_t i) { return i < 3; }));
}

}  // TEST_SUITE
