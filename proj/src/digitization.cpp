#include "tocheck/digitization.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tocheck {

using json = nlohmann::ordered_json;

std::int64_t digitize_value(const Rational& x, const Rational& eps) {
  if (x < 0) throw std::invalid_argument("digitize_value: negative time " + to_string(x));
  if (eps <= 0 || eps > 1) throw std::invalid_argument("digitize_value: epsilon must lie in (0, 1]");
  const std::int64_t f = floor_of(x);
  return x <= Rational(f) + eps ? f : ceil_of(x);
}

TimedTrace digitize_trace(const TimedTrace& tr, const Rational& eps) {
  TimedTrace out = tr;
  out.mode = TimeMode::Integral;
  auto dig = [&](Rational& x) { x = Rational(digitize_value(x, eps)); };
  for (auto& s : out.states) {
    dig(s.t);
    for (auto& x : s.timeouts) dig(x);
    for (auto& x : s.timing) dig(x);
    for (auto& c : s.calendar) dig(c.due);
    std::sort(s.calendar.begin(), s.calendar.end());
  }
  return out;
}

IncrementReport increment_at_least_one(const Model& model, const Bindings& bindings) {
  FlattenOptions opts;
  opts.require_satisfiable_updates = false;
  const FlatModel fm = flatten(model, bindings, opts);
  IncrementReport report;
  for (const auto& proc : fm.processes) {
    for (const auto& e : proc.edges) {
      const FlatUpdate& u = e.update;
      bool ok = true;
      if (u.kind == UpdateRule::Kind::Interval || u.kind == UpdateRule::Kind::LowerBound) {
        // A timing base shifts the bound down by the elapsed time, so nothing
        // is guaranteed for based bounds.
        ok = u.lo_base < 0 && u.lo >= 1;
      }
      if (!ok) {
        report.ok = false;
        report.offending.push_back(OffendingRule{
            proc.name,
            proc.locations[static_cast<std::size_t>(e.source)].name + " -> " +
                proc.locations[static_cast<std::size_t>(e.target)].name,
            render_flat_update(fm, u)});
      }
    }
  }
  return report;
}

ClosureReport closure_check(const FlatModel& fm, std::size_t n_runs, const std::vector<Rational>& epsilons,
                            std::uint64_t seed, const Rational& max_time) {
  ClosureReport report;
  report.epsilons = epsilons;
  for (std::size_t i = 0; i < n_runs; ++i) {
    const std::uint64_t run_seed = seed + i;
    TimedTrace dense = simulate_dense(fm, run_seed, max_time);
    for (const auto& eps : epsilons) {
      RunCheck rc = is_integral_run(fm, digitize_trace(dense, eps));
      if (!rc.ok) report.failures.push_back(ClosureFailure{run_seed, eps, rc.index, rc.reason});
    }
    ++report.runs_checked;
  }
  return report;
}

json closure_report_to_json(const ClosureReport& r) {
  json j;
  j["schema"] = 1;
  j["runs_checked"] = r.runs_checked;
  json eps = json::array();
  for (const auto& e : r.epsilons) eps.push_back(to_string(e));
  j["epsilons"] = std::move(eps);
  json fails = json::array();
  for (const auto& f : r.failures)
    fails.push_back(json{{"seed", f.seed}, {"eps", to_string(f.eps)}, {"index", f.index}, {"reason", f.reason}});
  j["failures"] = std::move(fails);
  j["closed"] = r.failures.empty();
  return j;
}

}  // namespace tocheck
