#include <gtest/gtest.h>

#include "support.hpp"
#include "tocheck/dsl.hpp"
#include "tocheck/model.hpp"

using namespace tocheck;
using tocheck::testing::load_model;

namespace {

const std::string kModels = TOCHECK_MODELS_DIR;

Model parse(const std::string& text) {
  ParseResult r = parse_model(text, "t.ttm");
  if (!r.model) ADD_FAILURE() << format_parse_error(r.errors.front());
  return r.model ? *r.model : Model{};
}

std::vector<std::int64_t> interval_bounds(const FlatModel& fm, int p, int src, int dst) {
  for (const auto& e : fm.processes[static_cast<std::size_t>(p)].edges)
    if (e.source == src && e.target == dst) return {e.update.lo, e.update.hi};
  return {};
}

int loc(const FlatModel& fm, int p, const std::string& name) {
  const auto& ls = fm.processes[static_cast<std::size_t>(p)].locations;
  for (std::size_t i = 0; i < ls.size(); ++i)
    if (ls[i].name == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST(Validate, FischerIsClean) {
  Model m = load_model(kModels + "/fischer.ttm");
  EXPECT_TRUE(validate(m).empty());
}

TEST(Validate, UndeclaredTargetLocation) {
  Model m = parse("model t; max_timeout 2; process P { location a; entry a; a -> b update in [1, 2]; }");
  auto d = validate(m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].severity, Severity::Error);
  EXPECT_NE(d[0].message.find("unknown target location 'b'"), std::string::npos);
  EXPECT_EQ(d[0].span.line, 1u);
}

TEST(Validate, CalendarSendWithZeroCapacity) {
  Model m = parse(R"(model t; max_timeout 2; calendar 0; message m;
process P { location a; entry a; a -> a send m to {(Q, 1)} update in [1, 2]; }
process Q { location b; entry b; b -> b recv m from * update in [1, 2]; })");
  auto d = validate(m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].message.find("calendar capacity"), std::string::npos);
}

TEST(Validate, ConstantAboveMaxTimeout) {
  Model m = parse("model t; max_timeout 2; process P { location a; entry a; a -> a update in [1, 3]; }");
  auto d = validate(m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].message.find("exceeds max_timeout"), std::string::npos);
}

TEST(Validate, CommittedPairOnOneSync) {
  Model m = parse(R"(model t; max_timeout 2; chan c;
process A { location a, ca committed; entry a; a -> ca sync c! update in [1, 2]; ca -> a update in [1, 2]; }
process B { location b, cb committed; entry b; b -> cb sync c? update in [1, 2]; cb -> b update in [1, 2]; })");
  auto d = validate(m);
  ASSERT_FALSE(d.empty());
  EXPECT_NE(d[0].message.find("two committed locations"), std::string::npos);
}

TEST(Flatten, FischerFamilyOfThree) {
  FlatModel fm = flatten(load_model(kModels + "/fischer.ttm"), {{"N", 3}});
  ASSERT_EQ(fm.processes.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(fm.processes[static_cast<std::size_t>(i)].name, "P[" + std::to_string(i + 1) + "]");
    EXPECT_EQ(fm.processes[static_cast<std::size_t>(i)].family_index, i + 1);
    EXPECT_EQ(fm.processes[static_cast<std::size_t>(i)].timeout_init, std::vector<std::int64_t>{1});
  }
  EXPECT_EQ(fm.vars[static_cast<std::size_t>(fm.find_var("lock"))].hi, 3);
}

TEST(Flatten, FamilyOfOneMatchesSingleton) {
  const char* fam = R"(model t; const N = 1; max_timeout 3; var x : [0, 3] = 0;
process P(i : N) { location a, b; entry a; a -> b update in [1, 3] do { x := i }; b -> a update maxM; })";
  const char* single = R"(model t; max_timeout 3; var x : [0, 3] = 0;
process P { location a, b; entry a; a -> b update in [1, 3] do { x := 1 }; b -> a update maxM; })";
  FlatModel f1 = flatten(parse(fam)), f2 = flatten(parse(single));
  ASSERT_EQ(f1.processes.size(), 1u);
  EXPECT_EQ(f1.processes[0].edges.size(), f2.processes[0].edges.size());
  EXPECT_EQ(f1.processes[0].locations.size(), f2.processes[0].locations.size());
  for (std::size_t k = 0; k < f1.processes[0].edges.size(); ++k)
    EXPECT_EQ(f1.processes[0].edges[k].update, f2.processes[0].edges[k].update);
}

TEST(Flatten, MissingBindingIsAnError) {
  Model m = parse(R"(model t; max_timeout 3;
process P(i : K) { location a; entry a; a -> a update in [1, 3]; })");
  EXPECT_THROW(flatten(m), FlattenError);
  EXPECT_NO_THROW(flatten(m, {{"K", 2}}));
}

TEST(Flatten, TtaTimeoutsPerNode) {
  FlatModel fm = flatten(load_model(kModels + "/tta.ttm"), {{"N", 2}});
  ASSERT_EQ(fm.processes.size(), 2u);
  // Listen timeouts 2 * round + startup, coldstart round + startup.
  const std::vector<std::pair<std::int64_t, std::int64_t>> expect{{4, 2}, {5, 3}};
  for (int p = 0; p < 2; ++p) {
    const auto listen = interval_bounds(fm, p, loc(fm, p, "init"), loc(fm, p, "listen"));
    const auto cs = interval_bounds(fm, p, loc(fm, p, "listen"), loc(fm, p, "coldstart"));
    EXPECT_EQ(listen, (std::vector<std::int64_t>{expect[static_cast<std::size_t>(p)].first,
                                                 expect[static_cast<std::size_t>(p)].first}));
    EXPECT_EQ(cs, (std::vector<std::int64_t>{expect[static_cast<std::size_t>(p)].second,
                                             expect[static_cast<std::size_t>(p)].second}));
  }
}

TEST(Flatten, IdempotentOnFlatModels) {
  for (const char* name : {"fischer", "tgc", "tta"}) {
    FlatModel fm = flatten(load_model(kModels + "/" + name + ".ttm"));
    FlatModel again = flatten(unflatten(fm));
    EXPECT_TRUE(fm == again) << name;
  }
}

TEST(MaxConstant, BundledModels) {
  EXPECT_EQ(max_constant(load_model(kModels + "/fischer.ttm")), 4);
  EXPECT_EQ(max_constant(load_model(kModels + "/tta.ttm"), {{"N", 2}}), 5);
  EXPECT_EQ(max_constant(load_model(kModels + "/fischer.ttm"), {{"d1", 3}, {"d2", 5}}), 5);
}

TEST(MaxConstant, OnlyInfinityUpdates) {
  Model m = parse("model t; max_timeout 7; process P { location a; entry a; a -> a update inf; a -> a update maxM; }");
  EXPECT_EQ(max_constant(m), 0);
  FlatModel fm = flatten(m);
  EXPECT_EQ(fm.max_constant, 0);
  EXPECT_EQ(fm.max_timeout, 7);
}

TEST(Desugar, NoSpecialLocationsIsIdentity) {
  Model m = load_model(kModels + "/fischer.ttm");
  EXPECT_TRUE(desugar_locations(m) == m);
}

TEST(Desugar, CommittedGuardsOtherEdges) {
  Model m = parse(R"(model t; max_timeout 3;
process A { location a, c committed; entry a; a -> c update in [1, 3]; c -> a update in [1, 3]; }
process B { location b; entry b; b -> b update in [1, 3]; })");
  Model d = desugar_locations(m);
  ASSERT_FALSE(d.globals.empty());
  EXPECT_EQ(d.globals.back().name, kCommittedFlag);
  // The edge of B, which does not leave a committed location, must be blocked
  // while the flag is raised.
  const Edge& eb = d.processes[1].edges[0];
  ASSERT_TRUE(eb.guard);
  EXPECT_NE(render_expr(eb.guard).find(std::string(kCommittedFlag) + " != 1"), std::string::npos);
  // The entry edge raises the flag, the exit edge clears it.
  bool raises = false, clears = false;
  for (const auto& a : d.processes[0].edges[0].assign) raises = raises || (a.var == kCommittedFlag);
  for (const auto& a : d.processes[0].edges[1].assign) clears = clears || (a.var == kCommittedFlag);
  EXPECT_TRUE(raises);
  EXPECT_TRUE(clears);
  // The modifier stays for rendering; the zero-delay marker records that it was compiled away.
  EXPECT_FALSE(d.processes[0].locations[0].zero_delay);
  EXPECT_TRUE(d.processes[0].locations[1].zero_delay);
  EXPECT_TRUE(desugar_locations(d) == d);
}
