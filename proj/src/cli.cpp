#include "tocheck/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tocheck/checker.hpp"
#include "tocheck/clocked.hpp"
#include "tocheck/digitization.hpp"
#include "tocheck/dot.hpp"
#include "tocheck/dsl.hpp"
#include "tocheck/ltl.hpp"

namespace tocheck {

using json = nlohmann::ordered_json;

namespace {

// Raised to abort a command with a given exit code after reporting.
struct Exit {
  int code;
};

struct Common {
  std::string model_path;
  std::vector<std::string> params;
  std::size_t cap = 0;
  unsigned workers = 1;
  bool json_out = false;
};

std::size_t default_cap() {
  if (const char* env = std::getenv("TOCHECK_STATE_CAP")) {
    try {
      std::size_t v = std::stoull(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
  }
  return 5'000'000;
}

Bindings parse_params(const std::vector<std::string>& params, std::ostream& err) {
  Bindings b;
  for (const auto& p : params) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      err << "error: --param expects NAME=VALUE, got '" << p << "'\n";
      throw Exit{kExitUsage};
    }
    try {
      std::size_t used = 0;
      std::int64_t v = std::stoll(p.substr(eq + 1), &used);
      if (used != p.size() - eq - 1) throw std::invalid_argument("trailing characters");
      b[p.substr(0, eq)] = v;
    } catch (const std::exception&) {
      err << "error: --param value for '" << p.substr(0, eq) << "' is not an integer\n";
      throw Exit{kExitUsage};
    }
  }
  return b;
}

Model load_model(const std::string& path, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read model file '" << path << "'\n";
    throw Exit{kExitUsage};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  ParseResult r = parse_model(ss.str(), path);
  if (!r.model) {
    for (const auto& e : r.errors) err << format_parse_error(e) << "\n";
    throw Exit{kExitUsage};
  }
  return *r.model;
}

void report_diagnostics(const std::vector<Diagnostic>& diags, std::ostream& err) {
  for (const auto& d : diags) err << format_diagnostic(d) << "\n";
}

FlatModel load_flat(const Common& c, std::ostream& err) {
  Model m = load_model(c.model_path, err);
  Bindings b = parse_params(c.params, err);
  auto diags = validate(m, b);
  report_diagnostics(diags, err);
  if (has_errors(diags)) throw Exit{kExitInvalid};
  try {
    return flatten(m, b);
  } catch (const FlattenError& fe) {
    report_diagnostics(fe.diagnostics(), err);
    throw Exit{kExitInvalid};
  }
}

CheckOptions options(const Common& c) {
  CheckOptions o;
  o.state_cap = c.cap == 0 ? default_cap() : c.cap;
  o.workers = std::max(1u, c.workers);
  return o;
}

int exit_for(Outcome o) {
  switch (o) {
    case Outcome::Holds:
      return kExitOk;
    case Outcome::Violated:
      return kExitViolated;
    case Outcome::Inconclusive:
      return kExitInconclusive;
    case Outcome::Error:
      return kExitInvalid;
  }
  return kExitInvalid;
}

void print_human(const FlatModel& fm, const Verdict& v, std::ostream& out) {
  out << fmt::format("{} ({}): {}  [states {}, transitions {}, deadlocks {}]\n", v.property, v.kind,
                     outcome_name(v.outcome), v.stats.states_stored, v.stats.transitions, v.stats.deadlocks);
  if (!v.message.empty()) out << "  " << v.message << "\n";
  if (!v.counterexample) return;
  const auto& c = *v.counterexample;
  out << (c.kind == Counterexample::Kind::Path ? "  counterexample path:\n" : "  counterexample lasso:\n");
  for (std::size_t i = 0; i < c.states.size(); ++i) {
    if (c.kind == Counterexample::Kind::Lasso && i == c.loop_start) out << "  -- loop starts here --\n";
    out << "  [" << i << "] " << state_to_json(fm, c.states[i]).dump() << "\n";
    if (i < c.labels.size()) out << "      " << format_label(fm, c.labels[i]) << "\n";
  }
}

void add_common(CLI::App* sub, Common& c, bool with_checking) {
  sub->add_option("model", c.model_path, "Model file (.ttm)")->required();
  sub->add_option("--param", c.params, "Parameter binding NAME=VALUE (repeatable)");
  if (with_checking) {
    sub->add_option("--cap", c.cap, "State cap (default: TOCHECK_STATE_CAP or 5000000)")->check(CLI::PositiveNumber);
    sub->add_option("--workers", c.workers, "Exploration worker threads")->check(CLI::PositiveNumber);
  }
}

int cmd_check(const Common& c, const std::string& prop, const std::string& ltl, const std::string& inv, bool fair,
              std::ostream& out, std::ostream& err) {
  FlatModel fm = load_flat(c, err);
  CheckOptions opts = options(c);
  opts.fair = fair;

  std::vector<FlatProperty> props;
  if (!ltl.empty()) {
    props.push_back(FlatProperty{"inline", PropertyKind::Ltl, ltl, "", "", 0, {}});
  } else if (!inv.empty()) {
    props.push_back(FlatProperty{"inline", PropertyKind::Invariant, inv, "", "", 0, {}});
  } else if (!prop.empty()) {
    for (const auto& p : fm.properties)
      if (p.name == prop) props.push_back(p);
    if (props.empty()) {
      err << "error: no property named '" << prop << "'\n";
      return kExitUsage;
    }
  } else {
    props = fm.properties;
    if (props.empty()) {
      err << "error: the model declares no properties; use --prop, --ltl or --invariant\n";
      return kExitUsage;
    }
  }

  int worst = kExitOk;
  auto rank = [](int code) {
    switch (code) {
      case kExitInvalid:
        return 3;
      case kExitInconclusive:
        return 2;
      case kExitViolated:
        return 1;
      default:
        return 0;
    }
  };
  json all = json::array();
  for (const auto& p : props) {
    Verdict v;
    try {
      v = check_property(fm, p, opts);
    } catch (const FlattenError& fe) {
      report_diagnostics(fe.diagnostics(), err);
      return p.name == "inline" ? kExitUsage : kExitInvalid;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kExitInvalid;
    }
    if (v.outcome == Outcome::Error) err << "error: model error during exploration: " << v.message << "\n";
    if (v.outcome == Outcome::Inconclusive) err << "warning: " << v.property << ": " << v.message << "\n";
    err << fmt::format("{}: explored {} states in {:.3f} s\n", v.property, v.stats.states_stored, v.stats.wall_time);
    const int code = exit_for(v.outcome);
    if (rank(code) > rank(worst)) worst = code;
    if (c.json_out)
      all.push_back(verdict_to_json(fm, v));
    else
      print_human(fm, v, out);
  }
  if (c.json_out) {
    if (all.size() == 1)
      out << all[0].dump(2) << "\n";
    else
      out << json{{"schema", 1}, {"verdicts", all}}.dump(2) << "\n";
  }
  return worst;
}

int cmd_simulate(const Common& c, bool dense, std::uint64_t seed, const std::string& max_time, std::ostream& out,
                 std::ostream& err) {
  FlatModel fm = load_flat(c, err);
  Rational limit;
  try {
    limit = parse_rational(max_time);
  } catch (const std::exception& e) {
    err << "error: --max-time: " << e.what() << "\n";
    return kExitUsage;
  }
  if (limit <= 0) {
    err << "error: --max-time must be positive\n";
    return kExitUsage;
  }
  try {
    TimedTrace tr = dense ? simulate_dense(fm, seed, limit) : simulate_integral(fm, seed, limit);
    out << trace_to_json(fm, tr).dump(2) << "\n";
    if (tr.deadlock) err << "note: deadlock at time " << to_string(tr.states.back().t) << ": " << tr.deadlock_reason << "\n";
  } catch (const ModelError& e) {
    err << "error: model error during simulation: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

int cmd_digitize(const Common& c, std::size_t runs, std::uint64_t seed, const std::string& eps_list,
                 const std::string& max_time, std::ostream& out, std::ostream& err) {
  FlatModel fm = load_flat(c, err);
  std::vector<Rational> eps;
  try {
    if (eps_list.empty()) {
      for (int k = 1; k <= 10; ++k) eps.emplace_back(k, 10);
    } else {
      std::stringstream ss(eps_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        Rational e = parse_rational(item);
        if (e <= 0 || e > 1) throw std::invalid_argument("epsilon " + item + " outside (0, 1]");
        eps.push_back(e);
      }
    }
  } catch (const std::exception& e) {
    err << "error: --eps: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    ClosureReport r = closure_check(fm, runs, eps, seed, parse_rational(max_time));
    if (c.json_out) {
      out << closure_report_to_json(r).dump(2) << "\n";
    } else {
      out << fmt::format("runs checked: {}, epsilons: {}, failures: {}\n", r.runs_checked, r.epsilons.size(),
                         r.failures.size());
      for (const auto& f : r.failures)
        out << fmt::format("  seed {} eps {}: observation {}: {}\n", f.seed, to_string(f.eps), f.index, f.reason);
    }
    return r.failures.empty() ? kExitOk : kExitViolated;
  } catch (const ModelError& e) {
    err << "error: model error during simulation: " << e.what() << "\n";
    return kExitInvalid;
  }
}

int cmd_stats(const Common& c, std::ostream& out, std::ostream& err) {
  FlatModel fm = load_flat(c, err);
  try {
    ExploreStats s = explore_stats(fm, options(c));
    if (c.json_out) {
      out << explore_stats_to_json(s).dump(2) << "\n";
    } else {
      out << fmt::format("states: {}\ntransitions: {}\ndeadlocks: {}\npeak frontier: {}\nbound: {:.6g}\n",
                         s.stats.states_stored, s.stats.transitions, s.stats.deadlocks, s.stats.peak_frontier,
                         s.bound);
    }
    if (!s.complete) {
      err << "warning: " << s.message << "\n";
      return kExitInconclusive;
    }
  } catch (const ModelError& e) {
    err << "error: model error during exploration: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

int cmd_bisim(const Common& c, std::int64_t horizon, std::ostream& out, std::ostream& err) {
  FlatModel fm = load_flat(c, err);
  if (!fm.timing.empty()) {
    err << "error: the clocked/clockless comparison requires a model without timing variables\n";
    return kExitInvalid;
  }
  try {
    CheckOptions opts = options(c);
    if (horizon <= 0) horizon = default_horizon(fm, opts);
    BisimReport r = bisim_check(fm, horizon, opts);
    if (c.json_out)
      out << bisim_report_to_json(r).dump(2) << "\n";
    else
      out << fmt::format("{} (horizon {}, clocked states {}, clockless states {}){}{}\n",
                         bisim_report_to_json(r)["result"].get<std::string>(), r.horizon, r.clocked_states,
                         r.clockless_states, r.message.empty() ? "" : ": ", r.message);
    switch (r.status) {
      case BisimReport::Status::Bisimilar:
        return kExitOk;
      case BisimReport::Status::Mismatch:
        return kExitViolated;
      case BisimReport::Status::Inconclusive:
        return kExitInconclusive;
    }
  } catch (const ModelError& e) {
    err << "error: model error during exploration: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verification of timeout and calendar based models", "tocheck"};
  app.require_subcommand(1);
  Common common;

  auto* check = app.add_subcommand("check", "Check declared or inline properties");
  add_common(check, common, true);
  std::string prop, ltl, inv;
  bool fair = false;
  auto* prop_opt = check->add_option("--prop", prop, "Declared property name");
  auto* ltl_opt = check->add_option("--ltl", ltl, "Inline LTL formula");
  auto* inv_opt = check->add_option("--invariant", inv, "Inline invariant expression");
  prop_opt->excludes(ltl_opt)->excludes(inv_opt);
  ltl_opt->excludes(inv_opt);
  check->add_flag("--fair,--weak-fairness", fair, "Assume weak fairness for each process");
  check->add_flag("--json", common.json_out, "JSON verdicts on stdout");

  auto* sim = app.add_subcommand("simulate", "Simulate one clocked run");
  add_common(sim, common, false);
  bool dense = false, integral = false;
  std::uint64_t seed = 1;
  std::string max_time = "20";
  auto* dense_opt = sim->add_flag("--dense", dense, "Dense (rational) time");
  auto* integral_opt = sim->add_flag("--integral", integral, "Integral time");
  dense_opt->excludes(integral_opt);
  sim->add_option("--seed", seed, "Random seed");
  sim->add_option("--max-time", max_time, "Time limit (integer or p/q)");

  auto* dig = app.add_subcommand("digitize-check", "Check closure under digitization on sampled dense runs");
  add_common(dig, common, false);
  std::size_t runs = 100;
  std::string eps;
  std::string dig_max_time = "20";
  dig->add_option("--runs", runs, "Number of dense runs");
  dig->add_option("--seed", seed, "Seed of the first run");
  dig->add_option("--eps", eps, "Comma-separated epsilons in (0, 1] (default 1/10,...,1)");
  dig->add_option("--max-time", dig_max_time, "Time limit per run");
  dig->add_flag("--json", common.json_out, "JSON report on stdout");

  auto* stats = app.add_subcommand("stats", "Explore the clockless state space");
  add_common(stats, common, true);
  stats->add_flag("--json", common.json_out, "JSON on stdout");

  auto* dot = app.add_subcommand("export-dot", "Graphviz export");
  add_common(dot, common, true);
  bool reachable = false;
  dot->add_flag("--reachable", reachable, "Export the reachable clockless state graph");

  auto* fmt_cmd = app.add_subcommand("fmt", "Print the model in canonical form");
  fmt_cmd->add_option("model", common.model_path, "Model file (.ttm)")->required();

  auto* bisim = app.add_subcommand("bisim", "Compare clocked and clockless semantics");
  add_common(bisim, common, true);
  std::int64_t horizon = 0;
  bisim->add_option("--horizon", horizon, "Time horizon (default: derived from the clockless graph)");
  bisim->add_flag("--json", common.json_out, "JSON on stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check) return cmd_check(common, prop, ltl, inv, fair, out, err);
    if (*sim) {
      if (!dense && !integral) {
        err << "error: simulate needs --dense or --integral\n";
        return kExitUsage;
      }
      return cmd_simulate(common, dense, seed, max_time, out, err);
    }
    if (*dig) return cmd_digitize(common, runs, seed, eps, dig_max_time, out, err);
    if (*stats) return cmd_stats(common, out, err);
    if (*dot) {
      FlatModel fm = load_flat(common, err);
      out << export_dot(fm, reachable, options(common));
      return kExitOk;
    }
    if (*fmt_cmd) {
      out << render(load_model(common.model_path, err));
      return kExitOk;
    }
    if (*bisim) return cmd_bisim(common, horizon, out, err);
  } catch (const Exit& e) {
    return e.code;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace tocheck
