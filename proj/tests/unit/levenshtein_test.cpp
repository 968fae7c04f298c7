#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "evorl/evo/levenshtein.hpp"
#include "evorl/random.hpp"

using namespace evorl;
using evo::edit_distance;
using evo::lev_distance_norm;

namespace {

// Full-table Wagner-Fischer.
std::size_t oracle(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

std::string random_string(Rng& rng, std::size_t max_len, int alphabet) {
  std::string s(rng() % (max_len + 1), 'a');
  for (char& c : s) c = static_cast<char>('a' + rng() % static_cast<unsigned>(alphabet));
  return s;
}

}  // namespace

TEST_SUITE("formulas") {
  TEST_CASE("worked distances") {
    CHECK(lev_distance_norm("update", "update") == 0.0);
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(lev_distance_norm("kitten", "sitting") == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
    CHECK(lev_distance_norm("", "abc") == 1.0);
    CHECK(lev_distance_norm("", "") == 0.0);
  }
}

TEST_SUITE("levenshtein") {
  TEST_CASE("matches the full-table oracle on random pairs") {
    Rng rng(2024);
    std::size_t mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
      const int alphabet = 2 + i % 6;
      const std::string a = random_string(rng, 64, alphabet), b = random_string(rng, 64, alphabet);
      const std::size_t want = oracle(a, b);
      const double want_norm =
          a.empty() && b.empty() ? 0.0 : static_cast<double>(want) / static_cast<double>(std::max(a.size(), b.size()));
      if (edit_distance(a, b) != want || lev_distance_norm(a, b) != want_norm) ++mismatches;
    }
    CHECK(mismatches == 0);
  }

  TEST_CASE("metric properties") {
    Rng rng(7);
    for (int i = 0; i < 3000; ++i) {
      const std::string a = random_string(rng, 64, 3), b = random_string(rng, 64, 3), c = random_string(rng, 64, 3);
      const double ab = lev_distance_norm(a, b);
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
      CHECK(ab == lev_distance_norm(b, a));
      CHECK(lev_distance_norm(a, a) == 0.0);
      CHECK((ab == 0.0) == (a == b));
      CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    }
  }
}
