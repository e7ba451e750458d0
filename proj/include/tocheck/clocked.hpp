#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tocheck/clockless.hpp"
#include "tocheck/model.hpp"
#include "tocheck/rational.hpp"

namespace tocheck {

struct ClockedEntry {
  int message = -1;
  int sender = -1;
  int receiver = -1;
  Rational due;  // absolute delivery time

  bool operator==(const ClockedEntry&) const = default;
};

bool operator<(const ClockedEntry& a, const ClockedEntry& b);

// Clocked state over absolute time. Integral runs keep every time value at
// denominator 1; dense runs use arbitrary rationals.
struct ClockedState {
  Rational t;
  std::vector<int> locs;
  std::vector<Rational> timeouts;  // absolute expiry times
  std::vector<Rational> timing;    // absolute capture times
  std::vector<std::int64_t> vars;
  std::vector<ClockedEntry> calendar;  // sorted

  bool operator==(const ClockedState&) const = default;
};

struct ClockedSuccessor {
  TransitionLabel label;  // delta fields hold relative increments in integral mode
  ClockedState state;
};

enum class TimeMode { Integral, Dense };

// A real interval of admissible relative increments.
struct IncrementRange {
  Rational lo;
  bool lo_strict = false;
  Rational hi;
  bool hi_strict = false;

  bool contains(const Rational& x) const;
  bool empty() const;
  // Integers inside the range, ascending.
  std::vector<std::int64_t> integers() const;
};

// Admissible relative increments of `rule` for a process acting at time s.t.
// Integral mode floors the range at 1, dense mode at "strictly above 0";
// Infinity and MaxM use the integer sets in both modes.
IncrementRange increment_range(const FlatModel& fm, const FlatUpdate& rule, const ClockedState& s, TimeMode mode);

std::vector<ClockedState> initial_states_clocked(const FlatModel& fm);

// Integral-time successors. Discrete moves happen only at t = min of all
// timeouts and dues (or from zero-delay locations); otherwise time advances to
// that minimum. Throws ModelError on calendar overflow, domain violations and
// unsatisfiable updates.
std::vector<ClockedSuccessor> successors_clocked(const FlatModel& fm, const ClockedState& s);

// Clockless image: every timeout and due shifted by -t. Requires integral
// values, t <= every timeout and due, and no timing variables.
ClocklessState normalize_clocked(const ClockedState& cs);

struct ClockedView {
  const ClockedState& s;
  std::int64_t sender_value = 0;
  std::int64_t var(int i) const { return s.vars[static_cast<std::size_t>(i)]; }
  std::int64_t timing(int i) const { return floor_of(s.timing[static_cast<std::size_t>(i)]); }
  std::int64_t timeout(int p) const { return floor_of(s.timeouts[static_cast<std::size_t>(p)] - s.t); }
  int location(int p) const { return s.locs[static_cast<std::size_t>(p)]; }
  std::int64_t sender() const { return sender_value; }
};

struct TimedTrace {
  TimeMode mode = TimeMode::Integral;
  std::vector<ClockedState> states;
  std::vector<TransitionLabel> labels;  // labels[i] leads from states[i] to states[i+1]
  bool deadlock = false;
  std::string deadlock_reason;
};

// Pseudo-random runs up to `max_time`; identical seeds give identical traces.
// Dense increments are rationals with denominator at most 8.
TimedTrace simulate_dense(const FlatModel& fm, std::uint64_t seed, const Rational& max_time,
                          std::size_t max_steps = 100000);
TimedTrace simulate_integral(const FlatModel& fm, std::uint64_t seed, const Rational& max_time,
                             std::size_t max_steps = 100000);

struct RunCheck {
  bool ok = true;
  std::size_t index = 0;  // first offending observation
  std::string reason;
};

// Whether the observations form a prefix of an integral run. Consecutive
// identical observations are accepted as stuttering.
RunCheck is_integral_run(const FlatModel& fm, const TimedTrace& tr);

nlohmann::ordered_json clocked_state_to_json(const FlatModel& fm, const ClockedState& s);
nlohmann::ordered_json trace_to_json(const FlatModel& fm, const TimedTrace& tr);

// Uniform draw in [0, n). The engine's output sequence is fixed by the
// standard; the standard distributions are not, so the reduction is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace tocheck
