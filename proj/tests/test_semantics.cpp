#include <algorithm>

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "tocheck/clocked.hpp"
#include "tocheck/clockless.hpp"

using namespace tocheck;
using tocheck::testing::flat_from_text;
using tocheck::testing::load_flat;

namespace {

const std::string kModels = TOCHECK_MODELS_DIR;

// Two single-location processes; A's only edge uses `rule`.
FlatModel two_procs(const std::string& rule, int max_timeout = 9) {
  return flat_from_text("model t; max_timeout " + std::to_string(max_timeout) +
                        ";\nprocess A { location a; entry a; a -> a update " + rule +
                        "; }\nprocess B { location b; entry b; b -> b update in [1, 4]; }");
}

ClocklessState make_state(std::vector<std::int64_t> timeouts) {
  ClocklessState s;
  s.locs.assign(timeouts.size(), 0);
  s.timeouts = std::move(timeouts);
  return s;
}

ClockedState make_clocked(std::int64_t t, std::vector<std::int64_t> timeouts) {
  ClockedState s;
  s.t = Rational(t);
  s.locs.assign(timeouts.size(), 0);
  for (auto x : timeouts) s.timeouts.emplace_back(x);
  return s;
}

std::vector<std::int64_t> timeouts_of(const std::vector<ClocklessSuccessor>& succ, int p) {
  std::vector<std::int64_t> out;
  for (const auto& s : succ) out.push_back(s.state.timeouts[static_cast<std::size_t>(p)]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Clockless

TEST(ClocklessInit, FischerHasOneInitialState) {
  FlatModel fm = load_flat(kModels + "/fischer.ttm");
  auto init = initial_states(fm);
  ASSERT_EQ(init.size(), 1u);
  EXPECT_EQ(init[0].timeouts, (std::vector<std::int64_t>{1, 1}));
}

TEST(ClocklessInit, TimeoutRangeEnumerates) {
  FlatModel fm = flat_from_text("model t; max_timeout 3; process P { location a; entry a; init timeout in 1..2; "
                                "a -> a update in [1, 3]; }");
  auto init = initial_states(fm);
  ASSERT_EQ(init.size(), 2u);
  EXPECT_EQ(init[0].timeouts[0], 1);
  EXPECT_EQ(init[1].timeouts[0], 2);
}

TEST(ClocklessInit, ZeroInitialTimeoutIsAllowed) {
  FlatModel fm = flat_from_text(
      "model t; max_timeout 3; process P { location a; entry a; init timeout = 0; a -> a update in [1, 3]; }");
  auto init = initial_states(fm);
  ASSERT_EQ(init.size(), 1u);
  EXPECT_EQ(init[0].timeouts[0], 0);
}

TEST(ClocklessInit, InitAboveMaxTimeoutIsRejected) {
  EXPECT_THROW(flat_from_text("model t; max_timeout 3; process P { location a; entry a; init timeout = 4; "
                              "a -> a update in [1, 3]; }"),
               FlattenError);
}

TEST(ClocklessStep, TimeProgressSubtractsMinimum) {
  FlatModel fm = two_procs("in [1, 4]");
  auto succ = successors(fm, make_state({3, 5}));
  ASSERT_EQ(succ.size(), 1u);
  EXPECT_EQ(succ[0].label.kind, TransitionLabel::Kind::TimeProgress);
  EXPECT_EQ(succ[0].label.delta, 3);
  EXPECT_EQ(succ[0].state.timeouts, (std::vector<std::int64_t>{0, 2}));
}

TEST(ClocklessStep, ExpiredProcessFiresWithRelativeUpdate) {
  FlatModel fm = two_procs("in (2, 4]");
  auto succ = successors(fm, make_state({0, 2}));
  ASSERT_EQ(succ.size(), 2u);
  for (const auto& s : succ) EXPECT_EQ(s.label.kind, TransitionLabel::Kind::Timeout);
  EXPECT_EQ(timeouts_of(succ, 0), (std::vector<std::int64_t>{3, 4}));
}

TEST(ClocklessStep, CalendarEntryLimitsTimeProgress) {
  FlatModel fm = flat_from_text(R"(model t; max_timeout 4; calendar 2; message m;
process A { location a; entry a; a -> a send m to {(B, 1)} update in [1, 4]; }
process B { location b; entry b; b -> b update in [1, 4]; b -> b recv m from * update in [1, 4]; })");
  ClocklessState s = make_state({2, 3});
  s.calendar.push_back(CalendarEntry{0, 0, 1, 1});
  auto succ = successors(fm, s);
  ASSERT_EQ(succ.size(), 1u);
  EXPECT_EQ(succ[0].label.kind, TransitionLabel::Kind::TimeProgress);
  EXPECT_EQ(succ[0].state.timeouts, (std::vector<std::int64_t>{1, 2}));
  ASSERT_EQ(succ[0].state.calendar.size(), 1u);
  EXPECT_EQ(succ[0].state.calendar[0].remaining, 0);
}

TEST(ClocklessUpdate, IntervalInfinityAndMaxM) {
  // max_timeout 9; B's rule [1, 4] makes the largest constant M = 4.
  FlatModel fm = two_procs("in (2, 5]");
  ClocklessState s = make_state({0, 3});
  const FlatUpdate& interval = fm.processes[0].edges[0].update;
  EXPECT_EQ(eval_update(fm, interval, s), (std::vector<std::int64_t>{3, 4, 5}));

  FlatUpdate inf;
  inf.kind = UpdateRule::Kind::Infinity;
  EXPECT_EQ(eval_update(fm, inf, s), std::vector<std::int64_t>{9});

  FlatUpdate maxm;
  maxm.kind = UpdateRule::Kind::MaxM;
  EXPECT_EQ(fm.max_constant, 5);
  FlatModel fm4 = two_procs("in [1, 4]");
  EXPECT_EQ(fm4.max_constant, 4);
  EXPECT_EQ(eval_update(fm4, maxm, s), (std::vector<std::int64_t>{1, 2, 3, 4, 5}));
}

TEST(ClocklessUpdate, LowerBoundSaturatesAtMaxTimeout) {
  FlatModel fm = two_procs(">= 7");
  EXPECT_EQ(eval_update(fm, fm.processes[0].edges[0].update, make_state({0, 1})),
            (std::vector<std::int64_t>{7, 8, 9}));
}

TEST(ClocklessState, PackRoundTrip) {
  FlatModel fm = load_flat(kModels + "/tta.ttm");
  auto init = initial_states(fm);
  std::vector<std::int32_t> buf(packed_width(fm));
  ClocklessState s = init[0];
  for (int k = 0; k < 6; ++k) {
    pack_state(fm, s, buf.data());
    EXPECT_EQ(unpack_state(fm, buf.data()), s);
    EXPECT_EQ(state_from_json(fm, state_to_json(fm, s)), s);
    auto succ = successors(fm, s);
    ASSERT_FALSE(succ.empty());
    s = succ.back().state;
  }
}

// ---------------------------------------------------------------------------
// Clocked

TEST(Clocked, TimeProgressToEarliestExpiry) {
  FlatModel fm = two_procs("in [1, 4]");
  auto succ = successors_clocked(fm, make_clocked(0, {3, 5}));
  ASSERT_EQ(succ.size(), 1u);
  EXPECT_EQ(succ[0].label.kind, TransitionLabel::Kind::TimeProgress);
  EXPECT_EQ(succ[0].state.t, Rational(3));
}

TEST(Clocked, UpdateRelativeToCurrentTime) {
  FlatModel fm = two_procs("in (3, 5]");
  auto succ = successors_clocked(fm, make_clocked(3, {3, 5}));
  std::vector<Rational> expiries;
  for (const auto& s : succ) expiries.push_back(s.state.timeouts[0]);
  std::sort(expiries.begin(), expiries.end());
  EXPECT_EQ(expiries, (std::vector<Rational>{Rational(7), Rational(8)}));
}

TEST(Clocked, CalendarDueWins) {
  FlatModel fm = flat_from_text(R"(model t; max_timeout 4; calendar 2; message m;
process A { location a; entry a; a -> a send m to {(B, 1)} update in [1, 4]; }
process B { location b; entry b; b -> b update in [1, 4]; b -> b recv m from * update in [1, 4]; })");
  ClockedState s = make_clocked(0, {4, 4});
  s.calendar.push_back(ClockedEntry{0, 0, 1, Rational(2)});
  auto succ = successors_clocked(fm, s);
  ASSERT_EQ(succ.size(), 1u);
  EXPECT_EQ(succ[0].state.t, Rational(2));
}

TEST(Clocked, IncrementRangeModes) {
  FlatModel fm = two_procs("in (0, 1]", 4);
  ClockedState s = make_clocked(0, {0, 1});
  const FlatUpdate& u = fm.processes[0].edges[0].update;
  IncrementRange dense = increment_range(fm, u, s, TimeMode::Dense);
  EXPECT_TRUE(dense.contains(Rational(1, 2)));
  EXPECT_FALSE(dense.contains(Rational(0)));
  IncrementRange integral = increment_range(fm, u, s, TimeMode::Integral);
  EXPECT_EQ(integral.integers(), std::vector<std::int64_t>{1});
}

TEST(Normalize, ShiftsByCurrentTime) {
  ClockedState s = make_clocked(3, {3, 5});
  EXPECT_EQ(normalize_clocked(s).timeouts, (std::vector<std::int64_t>{0, 2}));
  ClockedState z = make_clocked(0, {3, 5});
  EXPECT_EQ(normalize_clocked(z).timeouts, (std::vector<std::int64_t>{3, 5}));
  ClockedState c = make_clocked(2, {3, 5});
  c.calendar.push_back(ClockedEntry{0, 0, 1, Rational(5)});
  ASSERT_EQ(normalize_clocked(c).calendar.size(), 1u);
  EXPECT_EQ(normalize_clocked(c).calendar[0].remaining, 3);
}

TEST(Simulate, TimeStrictlyIncreasesOnTimeSteps) {
  FlatModel fm = load_flat(kModels + "/fischer.ttm");
  TimedTrace tr = simulate_integral(fm, 1, Rational(10));
  ASSERT_GT(tr.labels.size(), 3u);
  for (std::size_t i = 0; i < tr.labels.size(); ++i) {
    if (tr.labels[i].kind == TransitionLabel::Kind::TimeProgress)
      EXPECT_LT(tr.states[i].t, tr.states[i + 1].t);
    else
      EXPECT_EQ(tr.states[i].t, tr.states[i + 1].t);
  }
  EXPECT_TRUE(is_integral_run(fm, tr).ok);
}

TEST(Simulate, SameSeedSameTrace) {
  FlatModel fm = load_flat(kModels + "/fischer.ttm");
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    EXPECT_EQ(trace_to_json(fm, simulate_dense(fm, seed, Rational(15))).dump(),
              trace_to_json(fm, simulate_dense(fm, seed, Rational(15))).dump());
    EXPECT_EQ(trace_to_json(fm, simulate_integral(fm, seed, Rational(15))).dump(),
              trace_to_json(fm, simulate_integral(fm, seed, Rational(15))).dump());
  }
}

TEST(Simulate, DenseFractionalFixtureTakesShortSteps) {
  FlatModel fm = load_flat(kModels + "/fractional.ttm");
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 5 && !found; ++seed) {
    TimedTrace tr = simulate_dense(fm, seed, Rational(10));
    for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) {
      const Rational d = tr.states[i + 1].t - tr.states[i].t;
      found = found || (d > Rational(0) && d < Rational(1));
    }
  }
  EXPECT_TRUE(found);
}

TEST(IntegralRun, DecreasingTimestampIsRejected) {
  FlatModel fm = load_flat(kModels + "/fischer.ttm");
  TimedTrace tr = simulate_integral(fm, 3, Rational(10));
  std::size_t k = 0;
  for (std::size_t i = 1; i < tr.states.size(); ++i)
    if (tr.states[i].t > tr.states[i - 1].t) {
      k = i;
      break;
    }
  ASSERT_GT(k, 0u);
  tr.states[k].t = tr.states[k - 1].t - Rational(1);
  RunCheck rc = is_integral_run(fm, tr);
  EXPECT_FALSE(rc.ok);
  EXPECT_EQ(rc.index, k);
}

TEST(Rng, BelowIsDeterministicAndInRange) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.below(7);
    EXPECT_LT(x, 7u);
    EXPECT_EQ(x, b.below(7));
  }
}
