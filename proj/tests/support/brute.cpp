#include "brute.hpp"

#include <deque>

#include <nlohmann/json.hpp>

#include "tocheck/clocked.hpp"
#include "tocheck/clockless.hpp"

namespace tocheck::testing {

StateSet brute_clockless(const FlatModel& fm, std::size_t cap) {
  StateSet r;
  std::deque<ClocklessState> queue;
  for (const auto& s : initial_states(fm))
    if (r.states.insert(state_to_json(fm, s).dump()).second) queue.push_back(s);
  while (!queue.empty()) {
    const ClocklessState s = std::move(queue.front());
    queue.pop_front();
    for (auto& succ : successors(fm, s)) {
      if (!r.states.insert(state_to_json(fm, succ.state).dump()).second) continue;
      if (r.states.size() >= cap) {
        r.complete = false;
        return r;
      }
      queue.push_back(std::move(succ.state));
    }
  }
  return r;
}

StateSet brute_clocked_images(const FlatModel& fm, std::int64_t horizon, std::size_t cap) {
  StateSet r;
  std::set<std::string> seen;
  std::deque<ClockedState> queue;
  auto visit = [&](ClockedState s) {
    if (s.t > Rational(horizon)) return;
    if (!seen.insert(clocked_state_to_json(fm, s).dump()).second) return;
    r.states.insert(state_to_json(fm, normalize_clocked(s)).dump());
    queue.push_back(std::move(s));
  };
  for (auto& s : initial_states_clocked(fm)) visit(std::move(s));
  while (!queue.empty()) {
    if (seen.size() >= cap) {
      r.complete = false;
      return r;
    }
    const ClockedState s = std::move(queue.front());
    queue.pop_front();
    for (auto& succ : successors_clocked(fm, s)) visit(std::move(succ.state));
  }
  return r;
}

}  // namespace tocheck::testing
