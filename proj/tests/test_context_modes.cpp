#include <set>

#include "doctest.h"
#include "resicomp/context_modes.hpp"
#include "resicomp/errors.hpp"

using namespace resicomp;

namespace {

ContextMode from_rows(const std::vector<std::string>& rows) {
  std::vector<uint8_t> m;
  for (const auto& r : rows)
    for (char ch : r) m.push_back(ch == '1');
  return ContextMode(static_cast<int>(rows.size()), m);
}

std::vector<std::string> rows_of(const ContextMode& mode) {
  std::vector<std::string> out;
  for (int l = 0; l < mode.slices(); ++l) {
    std::string r;
    for (int k = 0; k < mode.slices(); ++k) r += mode.depends(l, k) ? '1' : '0';
    out.push_back(r);
  }
  return out;
}

// Boolean closure by repeated squaring until fixed point.
bool is_closed(const ContextMode& m) {
  const int n = m.slices();
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        if (m.depends(l, k) && m.depends(k, j) && !m.depends(l, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("LC is the full chain") {
  CHECK(rows_of(make_mode(ModeKind::kLc, 3)) == std::vector<std::string>{"000", "100", "110"});
}

TEST_CASE("ISC has no contexts") {
  for (int L : {1, 2, 7, 32}) {
    const auto m = make_mode(ModeKind::kIsc, L);
    for (uint8_t v : m.matrix()) CHECK(v == 0);
  }
}

TEST_CASE("MDC with two descriptions on four slices") {
  const auto m = make_mode(ModeKind::kMdc, 4, 2);
  CHECK(rows_of(m) == std::vector<std::string>{"0000", "0000", "1000", "0100"});
}

TEST_CASE("SLC with one enhancement layer is a star on the base") {
  const auto m = make_mode(ModeKind::kSlc, 5, 1);
  CHECK(rows_of(m) == std::vector<std::string>{"00000", "10000", "10000", "10000", "10000"});
  const auto two = make_mode(ModeKind::kSlc, 5, 2);
  CHECK(rows_of(two) == std::vector<std::string>{"00000", "10000", "10000", "11100", "11100"});
}

TEST_CASE("every preset is valid and closed") {
  for (int L = 1; L <= 32; ++L) {
    std::vector<ContextMode> modes{make_mode(ModeKind::kIsc, L), make_mode(ModeKind::kLc, L)};
    for (int nd = 1; nd <= L; ++nd) modes.push_back(make_mode(ModeKind::kMdc, L, nd));
    for (int e = 1; e <= std::max(1, L - 1); ++e) modes.push_back(make_mode(ModeKind::kSlc, L, e));
    for (const auto& m : modes) {
      INFO(m.describe());
      CHECK_FALSE(validate(m).has_value());
      CHECK(is_closed(m));
    }
  }
}

TEST_CASE("validation diagnoses violations") {
  CHECK_FALSE(validate(from_rows({"000", "100", "110"})).has_value());

  const auto upper = validate(from_rows({"010", "000", "000"}));
  REQUIRE(upper.has_value());
  CHECK(upper->rule == ModeViolation::Rule::kRecoverability);
  CHECK(upper->message() == "recoverability at (1,2)");

  const auto diag = validate(from_rows({"000", "010", "000"}));
  REQUIRE(diag.has_value());
  CHECK(diag->rule == ModeViolation::Rule::kRecoverability);

  const auto inh = validate(from_rows({"000", "100", "010"}));
  REQUIRE(inh.has_value());
  CHECK(inh->rule == ModeViolation::Rule::kInheritance);
  CHECK(inh->message() == "inheritance at (3,2,1)");
}

TEST_CASE("context counts are row sums") {
  CHECK(context_counts(make_mode(ModeKind::kLc, 4)) == std::vector<int>{0, 1, 2, 3});
  CHECK(context_counts(make_mode(ModeKind::kIsc, 4)) == std::vector<int>{0, 0, 0, 0});
  CHECK(context_counts(make_mode(ModeKind::kMdc, 10, 2)) ==
        std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4});
}

TEST_CASE("iteration counts") {
  CHECK(iteration_schedule(make_mode(ModeKind::kLc, 10)).iterations() == 9);
  CHECK(iteration_schedule(make_mode(ModeKind::kIsc, 10)).iterations() == 0);
  CHECK(iteration_schedule(make_mode(ModeKind::kMdc, 10, 2)).iterations() == 4);
  CHECK(iteration_schedule(make_mode(ModeKind::kSlc, 10, 1)).iterations() == 1);
  CHECK(iteration_schedule(make_mode(ModeKind::kLc, 1)).iterations() == 0);
  for (int L = 2; L <= 32; ++L)
    for (int nd : {2, 4, 5}) {
      if (nd > L) continue;
      CHECK(iteration_schedule(make_mode(ModeKind::kMdc, L, nd)).iterations() == L / nd - 1);
    }
}

TEST_CASE("schedules respect dependencies and cover each slice once") {
  std::vector<ContextMode> modes{make_mode(ModeKind::kLc, 9), make_mode(ModeKind::kMdc, 11, 3),
                                 make_mode(ModeKind::kSlc, 12, 3), make_mode(ModeKind::kIsc, 6),
                                 from_rows({"0000", "1000", "0000", "1010"})};
  for (const auto& m : modes) {
    INFO(m.describe());
    const Schedule s = iteration_schedule(m);
    std::set<int> seen;
    for (size_t d = 0; d < s.passes.size(); ++d)
      for (const auto& g : s.passes[d])
        for (int l : g.slices) {
          CHECK(seen.insert(l).second);
          CHECK(s.depth[l] == static_cast<int>(d));
          CHECK(g.contexts == m.contexts(l));
          for (int k : m.contexts(l)) CHECK(s.depth[k] < s.depth[l]);
        }
    CHECK(seen.size() == static_cast<size_t>(m.slices()));
  }
}

TEST_CASE("MDC descriptions share passes") {
  const Schedule s = iteration_schedule(make_mode(ModeKind::kMdc, 10, 2));
  REQUIRE(s.passes.size() == 5);
  for (const auto& pass : s.passes) {
    size_t n = 0;
    for (const auto& g : pass) n += g.slices.size();
    CHECK(n == 2);
  }
  CHECK(s.passes[0].size() == 1);  // both chain heads share the empty context set
  CHECK(s.passes[1].size() == 2);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(make_mode(ModeKind::kLc, 0), InvalidArgument);
  CHECK_THROWS_AS(make_mode(ModeKind::kLc, 256), InvalidArgument);
  CHECK_THROWS_AS(make_mode(ModeKind::kMdc, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(make_mode(ModeKind::kMdc, 4, 5), InvalidArgument);
  CHECK_THROWS_AS(make_mode(ModeKind::kSlc, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(make_mode(ModeKind::kCustom, 4), InvalidArgument);
  CHECK_THROWS_AS(iteration_schedule(from_rows({"01", "00"})), InvalidArgument);
  CHECK_THROWS_AS(ContextMode(3, std::vector<uint8_t>(4, 0)), InvalidArgument);
}

TEST_CASE("mode names round-trip") {
  for (auto k : {ModeKind::kIsc, ModeKind::kLc, ModeKind::kMdc, ModeKind::kSlc, ModeKind::kCustom})
    CHECK(parse_mode_kind(mode_name(k)) == k);
  CHECK(parse_mode_kind("mdc") == ModeKind::kMdc);
  CHECK_FALSE(parse_mode_kind("XYZ").has_value());
  CHECK(default_beta(ModeKind::kIsc) == 0.0);
  CHECK(default_beta(ModeKind::kLc) == 1.0);
  CHECK(default_beta(ModeKind::kMdc) == 0.5);
  CHECK(default_beta(ModeKind::kSlc) == 1.0);
  CHECK(static_cast<int>(ModeKind::kCustom) == 255);
}
