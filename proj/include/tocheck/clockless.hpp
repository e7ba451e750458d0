#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tocheck/model.hpp"

namespace tocheck {

struct TransitionLabel {
  enum class Kind : std::uint8_t { TimeProgress, Timeout, Sync, Send, Receive, Stutter };
  Kind kind = Kind::TimeProgress;
  int process = -1;   // acting process (sync: sender)
  int edge = -1;
  std::int64_t delta = 0;  // relative increment; TimeProgress: amount of time elapsed
  int partner = -1;   // sync: receiving process
  int partner_edge = -1;
  std::int64_t partner_delta = 0;
  int message = -1;   // receive: message index and sender of the consumed entry
  int sender = -1;

  bool operator==(const TransitionLabel&) const = default;
};

std::string format_label(const FlatModel& fm, const TransitionLabel& l);
nlohmann::ordered_json label_to_json(const FlatModel& fm, const TransitionLabel& l);

struct CalendarEntry {
  int message = -1;
  int sender = -1;
  int receiver = -1;
  std::int64_t remaining = 0;

  auto operator<=>(const CalendarEntry&) const = default;
};

// A clockless state: timeouts and calendar entries are relative to "now".
// The calendar is kept sorted so equal states compare equal.
struct ClocklessState {
  std::vector<int> locs;
  std::vector<std::int64_t> timeouts;
  std::vector<std::int64_t> timing;
  std::vector<std::int64_t> vars;
  std::vector<CalendarEntry> calendar;

  bool operator==(const ClocklessState&) const = default;
};

struct ClocklessSuccessor {
  TransitionLabel label;
  ClocklessState state;
};

std::vector<ClocklessState> initial_states(const FlatModel& fm);

// All successors of `s`. Time progress is the only move when every timeout
// and calendar entry is positive and no process is in a zero-delay location;
// otherwise only discrete moves are enabled. An empty result is a deadlock.
std::vector<ClocklessSuccessor> successors(const FlatModel& fm, const ClocklessState& s);

// Admissible relative increments of `rule` for process `proc` in state `s`,
// before any "strictly above the old value" filter. Every value lies in
// [1, max_timeout]. Throws ModelError when no value is admissible.
std::vector<std::int64_t> eval_update(const FlatModel& fm, const FlatUpdate& rule, const ClocklessState& s);

// Reads a location / variable / timeout view of a clockless state.
struct ClocklessView {
  const ClocklessState& s;
  std::int64_t sender_value = 0;
  std::int64_t var(int i) const { return s.vars[static_cast<std::size_t>(i)]; }
  std::int64_t timing(int i) const { return s.timing[static_cast<std::size_t>(i)]; }
  std::int64_t timeout(int p) const { return s.timeouts[static_cast<std::size_t>(p)]; }
  int location(int p) const { return s.locs[static_cast<std::size_t>(p)]; }
  std::int64_t sender() const { return sender_value; }
};

nlohmann::ordered_json state_to_json(const FlatModel& fm, const ClocklessState& s);
ClocklessState state_from_json(const FlatModel& fm, const nlohmann::ordered_json& j);

// Fixed-width integer encoding used by the state store.
std::size_t packed_width(const FlatModel& fm);
void pack_state(const FlatModel& fm, const ClocklessState& s, std::int32_t* out);
ClocklessState unpack_state(const FlatModel& fm, const std::int32_t* in);

}  // namespace tocheck
