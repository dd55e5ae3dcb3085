#include "bandlab/band.hpp"

#include "doctest.h"

using namespace bandlab;

namespace {

// Brute-force oracle: the index set straight from the support predicate.
IndexSet brute_row_set(const BandShape& shape, int row) {
  IndexSet out;
  for (int col = 1; col <= shape.n; ++col) {
    const int d = std::abs(row - col);
    const bool in_band = d <= shape.bandwidth;
    const bool wraps = shape.periodic && d >= shape.n - shape.bandwidth;
    if (in_band || wraps) out.push_back(col);
  }
  return out;
}

}  // namespace

TEST_CASE("band shape construction") {
  CHECK_THROWS_AS(BandShape::make(0, 0, true), std::invalid_argument);
  CHECK_THROWS_AS(BandShape::make(5, -1, true), std::invalid_argument);
  CHECK_THROWS_AS(BandShape::make(5, 3, true), std::invalid_argument);  // 2b+1 = 7 > 5
  const BandShape s = BandShape::make(5, 2, true);
  CHECK(s.row_budget() == 5);
  CHECK(BandShape::make(1, 0, false).row_budget() == 1);
}

TEST_CASE("row index sets match the worked examples") {
  CHECK(row_index_set(BandShape::make(5, 1, true), 1) == IndexSet{1, 2, 5});
  CHECK(row_index_set(BandShape::make(5, 1, true), 1).size() == 3);
  CHECK(row_index_set(BandShape::make(5, 1, false), 1) == IndexSet{1, 2});
  CHECK(row_index_set(BandShape::make(3, 1, true), 2) == IndexSet{1, 2, 3});
}

TEST_CASE("column index sets mirror rows") {
  CHECK(column_index_set(BandShape::make(5, 1, true), 1) == IndexSet{1, 2, 5});
  CHECK(column_index_set(BandShape::make(5, 1, false), 5) == IndexSet{4, 5});
  CHECK(column_index_set(BandShape::make(4, 0, false), 3) == IndexSet{3});
}

TEST_CASE("index positions are range checked") {
  const BandShape s = BandShape::make(5, 1, true);
  CHECK_THROWS_AS(row_index_set(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(row_index_set(s, 6), std::invalid_argument);
  CHECK_THROWS_AS(column_index_set(s, -2), std::invalid_argument);
}

TEST_CASE("index sets agree with the brute-force predicate everywhere") {
  for (int n = 1; n <= 50; ++n)
    for (int b = 0; 2 * b + 1 <= n; ++b)
      for (bool periodic : {true, false}) {
        const BandShape shape = BandShape::make(n, b, periodic);
        long total = 0;
        for (int row = 1; row <= n; ++row) {
          const IndexSet got = row_index_set(shape, row);
          REQUIRE(got == brute_row_set(shape, row));
          total += static_cast<long>(got.size());
          if (periodic) REQUIRE(static_cast<int>(got.size()) == shape.row_budget());
        }
        if (periodic) REQUIRE(total == static_cast<long>(n) * shape.row_budget());
      }
}

TEST_CASE("non-periodic closed-form row count") {
  for (int n = 1; n <= 50; ++n)
    for (int b = 0; 2 * b < n; ++b) {
      const BandShape shape = BandShape::make(n, b, false);
      for (int row = 1; row <= n; ++row) {
        const int actual = static_cast<int>(row_index_set(shape, row).size());
        const int formula = nonperiodic_row_count(shape, row);
        if (2 * b + 1 < n)
          CHECK(actual == formula);  // exact away from the full-band degenerate case
        else
          CHECK(actual <= formula);
      }
    }
}

TEST_CASE("validate reports exactly the off-band support") {
  const BandShape shape = BandShape::make(5, 1, false);

  CHECK(validate(BandMatrix::zero(shape)).empty());

  const BandShape diag_shape = BandShape::make(4, 0, false);
  BandMatrix identity{diag_shape, ComplexMatrix::Identity(4, 4)};
  CHECK(validate(identity).empty());

  BandMatrix bad = BandMatrix::zero(shape);
  bad.entries(0, 2) = 1.0;  // position (1, 3): |1-3| = 2 > b
  const auto violations = validate(bad);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == BandViolation{1, 3});
}

TEST_CASE("validate accepts every in-band entry and flags every off-band one") {
  for (int n : {6, 9})
    for (int b = 0; 2 * b + 1 <= n; ++b)
      for (bool periodic : {true, false}) {
        const BandShape shape = BandShape::make(n, b, periodic);
        BandMatrix all_ones{shape, ComplexMatrix::Ones(n, n)};
        const auto violations = validate(all_ones);
        long allowed = 0;
        for (int row = 1; row <= n; ++row) allowed += static_cast<long>(row_index_set(shape, row).size());
        CHECK(static_cast<long>(violations.size()) == static_cast<long>(n) * n - allowed);
      }
}
