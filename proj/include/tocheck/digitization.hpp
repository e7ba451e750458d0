#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tocheck/clocked.hpp"
#include "tocheck/model.hpp"
#include "tocheck/rational.hpp"

namespace tocheck {

// floor(x) when x <= floor(x) + eps, ceil(x) otherwise. Requires x >= 0 and
// eps in (0, 1]; throws std::invalid_argument otherwise.
std::int64_t digitize_value(const Rational& x, const Rational& eps);

// Digitizes every time-valued component: t, timeouts, calendar dues and timing
// variables. The result is tagged as an integral trace.
TimedTrace digitize_trace(const TimedTrace& tr, const Rational& eps);

struct OffendingRule {
  std::string process;
  std::string edge;  // "A -> B"
  std::string rule;  // rendered update rule
};

struct IncrementReport {
  bool ok = true;
  std::vector<OffendingRule> offending;
};

// Whether every update rule's smallest admissible dense increment is at least
// 1. A strict bound at l counts as "at least l".
IncrementReport increment_at_least_one(const Model& model, const Bindings& bindings = {});

struct ClosureFailure {
  std::uint64_t seed = 0;
  Rational eps;
  std::size_t index = 0;
  std::string reason;
};

struct ClosureReport {
  std::size_t runs_checked = 0;
  std::vector<Rational> epsilons;
  std::vector<ClosureFailure> failures;
};

// Simulates `n_runs` dense traces (run i uses seed + i) and checks that each
// digitization is an integral run.
ClosureReport closure_check(const FlatModel& fm, std::size_t n_runs, const std::vector<Rational>& epsilons,
                            std::uint64_t seed, const Rational& max_time = Rational(20));

nlohmann::ordered_json closure_report_to_json(const ClosureReport& r);

}  // namespace tocheck
