// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Time limits and sample sizes are pinned below.

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "brute.hpp"
#include "ltl_oracle.hpp"
#include "random_models.hpp"
#include "support.hpp"
#include "tocheck/checker.hpp"
#include "tocheck/cli.hpp"
#include "tocheck/digitization.hpp"
#include "tocheck/ltl.hpp"

using namespace tocheck;
using namespace tocheck::testing;

namespace {

const std::string kModels = TOCHECK_MODELS_DIR;

constexpr double kFischer4Seconds = 60.0;
constexpr double kTgcSeconds = 30.0;
constexpr double kTta3LivenessSeconds = 300.0;
constexpr double kRandomModelsSeconds = 600.0;
constexpr std::size_t kClosureRuns = 100;
constexpr std::uint64_t kClosureSeed = 1;
constexpr std::size_t kRandomModels = 50;
constexpr std::uint64_t kRandomSeedBase = 1000;
constexpr int kLtlMaxSize = 6;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Every JSON-producing command run by a criterion, with its first output.
// The determinism criterion replays them.
std::vector<std::pair<std::vector<std::string>, std::string>> g_recorded;

CliRun recorded_run(const std::vector<std::string>& args) {
  CliRun r = run(args);
  g_recorded.emplace_back(args, r.out);
  return r;
}

struct Result {
  bool pass = true;
  std::vector<std::string> notes;

  void fail(const std::string& why) {
    pass = false;
    notes.push_back(why);
  }
  void expect(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

const FlatProperty& property(const FlatModel& fm, const std::string& name) {
  for (const auto& p : fm.properties)
    if (p.name == name) return p;
  throw std::runtime_error("no property " + name);
}

std::string param(const char* name, std::int64_t v) { return fmt::format("{}={}", name, v); }

Result fischer_mutex() {
  Result res;
  const std::string model = kModels + "/fischer.ttm";
  for (int n : {2, 3, 4}) {
    const auto start = Clock::now();
    CliRun r = recorded_run({"check", model, "--prop", "mutex", "--param", param("N", n), "--param", "d1=2",
                             "--param", "d2=4", "--json"});
    const double secs = seconds_since(start);
    res.expect(r.code == kExitOk, fmt::format("N={} exit {}", n, r.code));
    if (n == 4) res.expect(secs < kFischer4Seconds, fmt::format("N=4 took {:.1f} s", secs));
  }
  CliRun r = recorded_run(
      {"check", model, "--prop", "mutex", "--param", "N=2", "--param", "d1=4", "--param", "d2=2", "--json"});
  res.expect(r.code == kExitViolated, fmt::format("d1=4 d2=2 exit {}", r.code));
  if (nlohmann::json::accept(r.out)) {
    auto j = nlohmann::json::parse(r.out);
    const auto& cex = j["counterexample"];
    res.expect(cex.is_object() && !cex["states"].empty() && cex["states"].back()["vars"]["in_critical"] == 2,
               "final counterexample state lacks in_critical = 2");
  } else {
    res.fail("violation output is not JSON");
  }
  FlatModel fm = load_flat(model, {{"N", 2}, {"d1", 4}, {"d2", 2}});
  Verdict v = check_property(fm, property(fm, "mutex"));
  std::string why;
  res.expect(v.outcome == Outcome::Violated && v.counterexample && replay(fm, *v.counterexample, &why),
             "counterexample does not replay: " + why);
  return res;
}

Result fischer_grid() {
  Result res;
  const Model m = load_model(kModels + "/fischer.ttm");
  int checked = 0;
  for (int n : {2, 3})
    for (int d1 = 1; d1 <= 5; ++d1)
      for (int d2 = 1; d2 <= 5; ++d2) {
        const std::string tag = fmt::format("N={} d1={} d2={}", n, d1, d2);
        try {
          FlatModel fm = flatten(m, {{"N", n}, {"d1", d1}, {"d2", d2}});
          Verdict v = check_property(fm, property(fm, "mutex"));
          const Outcome want = d1 < d2 ? Outcome::Holds : Outcome::Violated;
          res.expect(v.outcome == want, tag + ": " + outcome_name(v.outcome));
          ++checked;
        } catch (const std::exception& e) {
          res.fail(tag + ": exception " + e.what());
        }
      }
  res.notes.push_back(fmt::format("{} configurations", checked));
  return res;
}

Result tgc() {
  Result res;
  const std::string model = kModels + "/tgc.ttm";
  for (const char* prop : {"safety", "safety_ltl", "timely"}) {
    const auto start = Clock::now();
    CliRun r = recorded_run({"check", model, "--prop", prop, "--json"});
    const double secs = seconds_since(start);
    res.expect(r.code == kExitOk, fmt::format("{} exit {}", prop, r.code));
    res.expect(secs < kTgcSeconds, fmt::format("{} took {:.1f} s", prop, secs));
  }
  CliRun r = recorded_run({"check", model, "--prop", "timely_tight", "--json"});
  res.expect(r.code == kExitViolated, fmt::format("timely_tight exit {}", r.code));
  res.expect(r.out.find("\"counterexample\": null") == std::string::npos &&
                 r.out.find("\"counterexample\":null") == std::string::npos,
             "timely_tight has no counterexample");

  FlatModel fm = load_flat(model);
  Verdict v = check_timeliness(fm, "near", "up_again", 1);
  std::string why;
  res.expect(v.outcome == Outcome::Violated && v.counterexample &&
                 replay(instrument_timeliness(fm, "near", "up_again", 1), *v.counterexample, &why),
             "bound 1 counterexample does not replay: " + why);
  return res;
}

Result tta() {
  Result res;
  const std::string model = kModels + "/tta.ttm";
  for (int n : {2, 3})
    for (const char* prop : {"safety", "liveness"}) {
      const auto start = Clock::now();
      CliRun r = recorded_run(
          {"check", model, "--prop", prop, "--param", param("N", n), "--param", "tau=1", "--json"});
      const double secs = seconds_since(start);
      res.expect(r.code == kExitOk, fmt::format("N={} {} exit {}", n, prop, r.code));
      if (n == 3 && std::string(prop) == "liveness")
        res.expect(secs < kTta3LivenessSeconds, fmt::format("N=3 liveness took {:.1f} s", secs));
    }
  return res;
}

Result closure() {
  Result res;
  std::vector<Rational> eps;
  for (int k = 1; k <= 10; ++k) eps.emplace_back(k, 10);
  ClosureReport fischer = closure_check(load_flat(kModels + "/fischer.ttm"), kClosureRuns, eps, kClosureSeed);
  res.expect(fischer.runs_checked == kClosureRuns, fmt::format("checked {} runs", fischer.runs_checked));
  res.expect(fischer.failures.empty(), fmt::format("fischer: {} closure failures", fischer.failures.size()));
  ClosureReport frac = closure_check(load_flat(kModels + "/fractional.ttm"), kClosureRuns, eps, kClosureSeed);
  res.expect(!frac.failures.empty(), "fractional fixture produced no failure");
  res.notes.push_back(fmt::format("fractional failures {}", frac.failures.size()));

  CliRun r = recorded_run({"digitize-check", kModels + "/fischer.ttm", "--runs", "20", "--seed", "1", "--json"});
  res.expect(r.code == kExitOk, fmt::format("digitize-check exit {}", r.code));
  return res;
}

Result random_equivalence() {
  Result res;
  const auto start = Clock::now();
  std::size_t ok = 0;
  for (std::size_t i = 0; i < kRandomModels; ++i) {
    try {
      RandomModel rm = random_model(kRandomSeedBase + i);
      const std::int64_t h = default_horizon(rm.flat);
      StateSet cl = brute_clockless(rm.flat);
      StateSet img = brute_clocked_images(rm.flat, h);
      const std::string tag = fmt::format("seed {}", rm.seed);
      if (!cl.complete || !img.complete) {
        res.fail(tag + ": brute force hit its cap");
        continue;
      }
      if (cl.states != img.states) {
        res.fail(tag + ": image sets differ");
        continue;
      }
      BisimReport b = bisim_check(rm.flat, h);
      if (b.status != BisimReport::Status::Bisimilar) {
        res.fail(tag + ": " + b.message);
        continue;
      }
      ++ok;
    } catch (const std::exception& e) {
      res.fail(fmt::format("seed {}: exception {}", kRandomSeedBase + i, e.what()));
    }
  }
  const double secs = seconds_since(start);
  res.expect(secs < kRandomModelsSeconds, fmt::format("took {:.1f} s", secs));
  res.notes.push_back(fmt::format("{}/{} models", ok, kRandomModels));
  return res;
}

Result ltl_oracle() {
  Result res;
  const LassoSpace space(2, 4, 4);
  std::size_t formulas = 0, mismatches = 0;
  for (int size = 1; size <= kLtlMaxSize; ++size)
    for (const auto& f : enumerate_formulas(size, 2)) {
      LassoAgreement a = space.check(f);
      ++formulas;
      mismatches += a.mismatches;
      if (a.mismatches && res.notes.size() < 3) res.notes.push_back("mismatch on " + ltl_to_string(f));
    }
  res.expect(mismatches == 0, fmt::format("{} mismatching words", mismatches));
  res.notes.push_back(fmt::format("{} formulas x {} words", formulas, space.words()));
  return res;
}

Result state_bound_check() {
  Result res;
  struct Case {
    const char* file;
    std::vector<std::string> params;
  };
  const std::vector<Case> cases{{"fischer.ttm", {}},
                                {"tgc.ttm", {}},
                                {"tta.ttm", {"N=2"}},
                                {"tta.ttm", {"N=3"}},
                                {"fractional.ttm", {}}};
  for (const auto& c : cases) {
    std::vector<std::string> args{"stats", kModels + "/" + c.file, "--json"};
    for (const auto& p : c.params) {
      args.push_back("--param");
      args.push_back(p);
    }
    CliRun r = recorded_run(args);
    const std::string tag = std::string(c.file) + (c.params.empty() ? "" : " " + c.params.front());
    if (r.code != kExitOk || !nlohmann::json::accept(r.out)) {
      res.fail(tag + ": stats failed: " + r.err);
      continue;
    }
    auto j = nlohmann::json::parse(r.out);
    if (!j.contains("states") || !j.contains("bound")) {
      res.fail(tag + ": stats lacks states or bound");
      continue;
    }
    const double states = j["states"].get<double>(), bound = j["bound"].get<double>();
    res.expect(j["complete"] == true, tag + ": exploration incomplete");
    res.expect(states <= bound, fmt::format("{}: {} states exceed bound {}", tag, states, bound));
    res.notes.push_back(fmt::format("{} {}<={:g}", tag, states, bound));
  }
  return res;
}

Result determinism() {
  Result res;
  std::size_t compared = 0;
  const auto recorded = g_recorded;
  for (const auto& [args, first] : recorded) {
    for (int rep = 0; rep < 2; ++rep) {
      CliRun again = run(args);
      ++compared;
      if (again.out != first) {
        std::string cmd;
        for (const auto& a : args) cmd += a + " ";
        res.fail("output differs: " + cmd);
        break;
      }
    }
  }
  // Parallel exploration must not change the bytes either.
  const std::vector<std::string> base{"check", kModels + "/fischer.ttm", "--prop", "mutex", "--param", "N=3", "--json"};
  std::vector<std::string> par = base;
  par.insert(par.end(), {"--workers", "4"});
  res.expect(run(base).out == run(par).out, "worker count changes the output");
  res.notes.push_back(fmt::format("{} reruns", compared));
  return res;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"fischer mutual exclusion", fischer_mutex},
      {"fischer grid sweep", fischer_grid},
      {"train-gate-controller", tgc},
      {"tta startup", tta},
      {"digitization closure", closure},
      {"clocked/clockless equivalence", random_equivalence},
      {"ltl engine oracle", ltl_oracle},
      {"state-space bound", state_bound_check},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(start);
    std::string notes;
    for (const auto& n : r.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::printf("criterion %zu %-30s %s (%.1f s)%s%s\n", i + 1, criteria[i].first, r.pass ? "PASS" : "FAIL", secs,
                notes.empty() ? "" : "  ", notes.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
