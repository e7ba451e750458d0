#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tocheck/clocked.hpp"
#include "tocheck/clockless.hpp"
#include "tocheck/ltl.hpp"
#include "tocheck/model.hpp"

namespace tocheck {

// Hash set of fixed-width packed states. Indices are dense and assigned in
// insertion order.
class StateStore {
 public:
  explicit StateStore(std::size_t width);

  // Returns (index, inserted).
  std::pair<std::uint32_t, bool> insert(const std::int32_t* packed);
  std::optional<std::uint32_t> find(const std::int32_t* packed) const;
  const std::int32_t* at(std::uint32_t index) const { return arena_.data() + std::size_t{index} * width_; }
  std::size_t size() const { return count_; }
  std::size_t width() const { return width_; }

 private:
  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<std::int32_t> arena_;
  std::vector<std::uint32_t> slots_;  // index + 1, 0 for empty
  std::uint64_t hash(const std::int32_t* packed) const;
  void grow();
};

struct CheckOptions {
  std::size_t state_cap = 5'000'000;
  unsigned workers = 1;
  bool fair = false;  // weak fairness on each process's discrete transitions
};

struct Stats {
  std::size_t states_stored = 0;
  std::size_t transitions = 0;
  std::size_t peak_frontier = 0;
  std::size_t deadlocks = 0;
  double wall_time = 0;  // seconds; reported on stderr only
};

struct Counterexample {
  enum class Kind { Path, Lasso };
  Kind kind = Kind::Path;
  std::vector<ClocklessState> states;
  // labels[i] leads from states[i] to states[i+1]; for a lasso the last label
  // leads from the last state back to states[loop_start].
  std::vector<TransitionLabel> labels;
  std::size_t loop_start = 0;
};

enum class Outcome { Holds, Violated, Inconclusive, Error };

struct Verdict {
  std::string property;
  std::string kind;  // invariant | ltl | timeliness
  Outcome outcome = Outcome::Holds;
  std::optional<Counterexample> counterexample;
  Stats stats;
  std::string message;  // resource limit or model error details
};

Verdict check_invariant(const FlatModel& fm, const ExprPtr& predicate, const CheckOptions& opts = {});
Verdict check_ltl(const FlatModel& fm, const LtlFormula& formula, const CheckOptions& opts = {});

// Adds a time accumulator driven by the two flags and checks that it never
// exceeds `bound`.
Verdict check_timeliness(const FlatModel& fm, const std::string& flag1, const std::string& flag2, std::int64_t bound,
                         const CheckOptions& opts = {});
FlatModel instrument_timeliness(const FlatModel& fm, const std::string& flag1, const std::string& flag2,
                                std::int64_t bound);

// Dispatches on a declared property. Throws FlattenError when it does not
// resolve against the model.
Verdict check_property(const FlatModel& fm, const FlatProperty& prop, const CheckOptions& opts = {});

struct ExploreStats {
  Stats stats;
  bool complete = true;
  double bound = 0;  // analytic bound on the clockless state count
  std::string message;
};

// Upper bound (max_timeout + 1)^(n + k) * D^n * |variable domains| * calendar
// configurations, where D is the largest location count.
double state_bound(const FlatModel& fm);

ExploreStats explore_stats(const FlatModel& fm, const CheckOptions& opts = {});

// Reachable clockless graph with successor lists in compressed form.
struct StateGraph {
  std::vector<ClocklessState> states;
  std::vector<std::uint32_t> offsets;  // size states + 1
  std::vector<std::uint32_t> targets;
  std::vector<std::uint32_t> initial;
  bool complete = true;
};

StateGraph explore_graph(const FlatModel& fm, const CheckOptions& opts = {});

// Replays a counterexample through the clockless successor relation and
// reports whether every state is reproduced exactly.
bool replay(const FlatModel& fm, const Counterexample& cex, std::string* why = nullptr);

struct BisimReport {
  enum class Status { Bisimilar, Mismatch, Inconclusive };
  Status status = Status::Bisimilar;
  std::int64_t horizon = 0;
  std::size_t clocked_states = 0;
  std::size_t clockless_states = 0;
  std::string message;
};

using NormalizeFn = std::function<ClocklessState(const ClockedState&)>;

// Smallest horizon at which every clockless state has a clocked
// representative whose successors all lie within the horizon.
std::int64_t default_horizon(const FlatModel& fm, const CheckOptions& opts = {});

BisimReport bisim_check(const FlatModel& fm, std::int64_t horizon, const CheckOptions& opts = {},
                        const NormalizeFn& normalize = normalize_clocked);

nlohmann::ordered_json verdict_to_json(const FlatModel& fm, const Verdict& v);
nlohmann::ordered_json counterexample_to_json(const FlatModel& fm, const Counterexample& c);
nlohmann::ordered_json explore_stats_to_json(const ExploreStats& s);
nlohmann::ordered_json bisim_report_to_json(const BisimReport& r);

const char* outcome_name(Outcome o);

}  // namespace tocheck
