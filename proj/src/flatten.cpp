#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "tocheck/dsl.hpp"
#include "tocheck/ltl.hpp"
#include "tocheck/model.hpp"

namespace tocheck {

namespace {

struct Scope {
  const FlatModel* flat = nullptr;
  const std::map<std::string, std::int64_t>* consts = nullptr;
  std::map<std::string, std::int64_t> bound;
  int self = -1;
  bool allow_sender = false;
};

class Resolver {
 public:
  explicit Resolver(std::vector<Diagnostic>& diags) : diags_(diags) {}

  ExprPtr resolve(const ExprPtr& e, Scope& s, const SourceSpan& ctx) {
    if (!e) return nullptr;
    try {
      return walk(*e, s, ctx);
    } catch (const ModelError& err) {
      error(e->span.line ? e->span : ctx, err.what());
      return make_const(0);
    }
  }

  std::int64_t constant(const ExprPtr& e, Scope& s, const SourceSpan& ctx, std::int64_t fallback = 0) {
    ExprPtr r = resolve(e, s, ctx);
    if (!r) return fallback;
    if (r->op != Op::Const) {
      error(e->span.line ? e->span : ctx, "expression '" + render_expr(e) + "' is not constant");
      return fallback;
    }
    return r->value;
  }

  void error(const SourceSpan& span, std::string msg) {
    diags_.push_back(Diagnostic{span, Severity::Error, std::move(msg)});
  }

 private:
  int process_of(const Expr& e, Scope& s, const SourceSpan& ctx) {
    std::string name = e.qualifier;
    if (e.indexed) {
      ExprPtr idx = walk(*e.args[0], s, ctx);
      if (idx->op != Op::Const) throw ModelError("process index in '" + render_expr(e) + "' is not constant");
      name += "[" + std::to_string(idx->value) + "]";
    }
    int p = s.flat->find_process(name);
    if (p < 0) throw ModelError("unknown process '" + name + "'");
    return p;
  }

  ExprPtr member(int p, const std::string& name) {
    const FlatModel& f = *flat_of_;
    const auto& proc = f.processes[static_cast<std::size_t>(p)];
    if (name == "timeout") return make_resolved(Slot{SlotKind::Timeout, p, -1}, proc.name + ".timeout");
    const std::string full = proc.name + "." + name;
    for (int v : proc.locals)
      if (f.vars[static_cast<std::size_t>(v)].name == full) return make_resolved(Slot{SlotKind::Var, v, -1}, full);
    for (int t : proc.timing)
      if (f.timing[static_cast<std::size_t>(t)].name == full)
        return make_resolved(Slot{SlotKind::Timing, t, -1}, full);
    return nullptr;
  }

  ExprPtr walk(const Expr& e, Scope& s, const SourceSpan& ctx) {
    flat_of_ = s.flat;
    switch (e.op) {
      case Op::Const:
        return make_const(e.value);
      case Op::Ref: {
        if (e.slot.kind != SlotKind::None) {
          auto c = std::make_shared<Expr>(e);
          return c;
        }
        if (!e.qualifier.empty()) {
          int p = process_of(e, s, ctx);
          if (ExprPtr r = member(p, e.name)) return r;
          throw ModelError("process '" + s.flat->processes[static_cast<std::size_t>(p)].name + "' has no member '" +
                           e.name + "'");
        }
        if (auto it = s.bound.find(e.name); it != s.bound.end()) return make_const(it->second);
        if (s.self >= 0) {
          if (ExprPtr r = member(s.self, e.name)) return r;
        }
        if (e.name == "sender") {
          if (!s.allow_sender) throw ModelError("'sender' is only available on receive edges");
          return make_resolved(Slot{SlotKind::Sender, -1, -1}, "sender");
        }
        if (int v = s.flat->find_var(e.name); v >= 0 && s.flat->vars[static_cast<std::size_t>(v)].owner < 0)
          return make_resolved(Slot{SlotKind::Var, v, -1}, e.name);
        if (s.consts) {
          if (auto it = s.consts->find(e.name); it != s.consts->end()) return make_const(it->second);
        }
        throw ModelError("unknown identifier '" + e.name + "'");
      }
      case Op::LocAt: {
        if (e.slot.kind != SlotKind::None) return std::make_shared<Expr>(e);
        int p = e.qualifier.empty() ? s.self : process_of(e, s, ctx);
        if (p < 0) throw ModelError("location test '@" + e.name + "' needs a process");
        const auto& proc = s.flat->processes[static_cast<std::size_t>(p)];
        for (std::size_t l = 0; l < proc.locations.size(); ++l)
          if (proc.locations[l].name == e.name)
            return make_resolved(Slot{SlotKind::Location, p, static_cast<int>(l)}, proc.name + "@" + e.name);
        throw ModelError("process '" + proc.name + "' has no location '" + e.name + "'");
      }
      case Op::Forall:
      case Op::Exists: {
        ExprPtr lo = walk(*e.args[0], s, ctx);
        ExprPtr hi = walk(*e.args[1], s, ctx);
        if (lo->op != Op::Const || hi->op != Op::Const) throw ModelError("quantifier range is not constant");
        const bool all = e.op == Op::Forall;
        ExprPtr acc;
        auto saved = s.bound;
        for (std::int64_t k = lo->value; k <= hi->value; ++k) {
          s.bound[e.name] = k;
          ExprPtr body = walk(*e.args[2], s, ctx);
          acc = acc ? simplify(make_binary(all ? Op::And : Op::Or, acc, body)) : body;
        }
        s.bound = saved;
        return acc ? acc : make_const(all ? 1 : 0);
      }
      default: {
        auto c = std::make_shared<Expr>();
        c->op = e.op;
        c->span = e.span;
        for (const auto& a : e.args) c->args.push_back(walk(*a, s, ctx));
        return simplify(c);
      }
    }
  }

  // Folds operators whose operands are all constants.
  static ExprPtr simplify(ExprPtr e) {
    if (e->args.empty()) return e;
    for (const auto& a : e->args)
      if (a->op != Op::Const) return e;
    struct None {
      std::int64_t var(int) const { return 0; }
      std::int64_t timing(int) const { return 0; }
      std::int64_t timeout(int) const { return 0; }
      int location(int) const { return 0; }
      std::int64_t sender() const { return 0; }
    };
    auto c = make_const(eval(*e, None{}));
    return c;
  }

  std::vector<Diagnostic>& diags_;
  const FlatModel* flat_of_ = nullptr;
};

std::map<std::string, std::int64_t> evaluate_consts(const Model& m, const Bindings& bindings,
                                                    std::vector<Diagnostic>& diags) {
  std::map<std::string, std::int64_t> env;
  std::set<std::string> declared;
  for (const auto& c : m.consts) declared.insert(c.name);
  for (const auto& p : m.processes)
    if (!p.count.empty()) declared.insert(p.count);
  for (const auto& [k, v] : bindings)
    if (!declared.count(k))
      diags.push_back(Diagnostic{{}, Severity::Error, "binding for undeclared parameter '" + k + "'"});

  FlatModel empty;
  Resolver r(diags);
  for (const auto& c : m.consts) {
    if (auto it = bindings.find(c.name); it != bindings.end()) {
      env[c.name] = it->second;
      continue;
    }
    Scope s;
    s.flat = &empty;
    s.consts = &env;
    env[c.name] = r.constant(c.value, s, c.span);
  }
  for (const auto& [k, v] : bindings)
    if (!env.count(k)) env[k] = v;
  return env;
}

// Smallest and largest admissible increment of a base-free interval, used by
// the static satisfiability check.
bool interval_satisfiable(const FlatUpdate& u, std::int64_t max_timeout) {
  if (u.kind == UpdateRule::Kind::Interval) {
    if (u.lo_base >= 0 || u.hi_base >= 0) return true;
    std::int64_t lo = std::max<std::int64_t>(1, u.lo_strict ? u.lo + 1 : u.lo);
    std::int64_t hi = std::min<std::int64_t>(max_timeout, u.hi_strict ? u.hi - 1 : u.hi);
    return lo <= hi;
  }
  if (u.kind == UpdateRule::Kind::LowerBound) {
    if (u.lo_base >= 0) return true;
    std::int64_t lo = std::max<std::int64_t>(1, u.lo_strict ? u.lo + 1 : u.lo);
    return lo <= max_timeout;
  }
  return true;
}

std::string proc_name(const std::string& family, std::int64_t index) {
  return index > 0 ? fmt::format("{}[{}]", family, index) : family;
}

}  // namespace

FlatModel flatten(const Model& input, const Bindings& bindings, const FlattenOptions& options) {
  std::vector<Diagnostic> diags;
  const Model model = desugar_locations(input);
  FlatModel f;
  f.name = model.name;
  f.sync_eager = model.sync_eager;
  f.consts = evaluate_consts(model, bindings, diags);
  f.channels = model.channels;
  f.messages = model.messages;
  Resolver r(diags);

  Scope cscope;
  cscope.flat = &f;
  cscope.consts = &f.consts;

  if (!model.max_timeout) {
    r.error({}, "missing 'max_timeout' declaration");
  } else {
    f.max_timeout = r.constant(model.max_timeout, cscope, model.max_timeout->span, 1);
    if (f.max_timeout < 1) r.error(model.max_timeout->span, "max_timeout must be at least 1");
  }
  if (model.calendar_capacity) {
    auto cap = r.constant(model.calendar_capacity, cscope, model.calendar_capacity->span, 0);
    if (cap < 1) r.error(model.calendar_capacity->span, "calendar capacity must be at least 1");
    f.calendar_capacity = static_cast<int>(std::max<std::int64_t>(cap, 0));
  }

  // Instantiate process copies.
  struct Instance {
    const ProcessTemplate* tpl;
    std::int64_t index;
  };
  std::vector<Instance> instances;
  for (const auto& pt : model.processes) {
    if (pt.param.empty()) {
      instances.push_back({&pt, 0});
      FlatProcess fp;
      fp.name = pt.name;
      fp.family = pt.family.empty() ? pt.name : pt.family;
      fp.family_index = pt.family_index;
      f.processes.push_back(std::move(fp));
      continue;
    }
    auto it = f.consts.find(pt.count);
    if (it == f.consts.end()) {
      r.error(pt.span, "missing binding for family size '" + pt.count + "' of process '" + pt.name + "'");
      continue;
    }
    if (it->second < 1) {
      r.error(pt.span, fmt::format("family size {} = {} must be at least 1", pt.count, it->second));
      continue;
    }
    for (std::int64_t k = 1; k <= it->second; ++k) {
      instances.push_back({&pt, k});
      FlatProcess fp;
      fp.name = proc_name(pt.name, k);
      fp.family = pt.name;
      fp.family_index = k;
      f.processes.push_back(std::move(fp));
    }
  }

  // Globals.
  auto add_var = [&](const VarDecl& v, const std::string& name, int owner, Scope& s,
                     const std::optional<InitRange>& override_init) {
    FlatVar fv;
    fv.name = name;
    fv.owner = owner;
    fv.lo = r.constant(v.lo, s, v.span);
    fv.hi = r.constant(v.hi, s, v.span);
    std::int64_t ilo, ihi;
    if (override_init) {
      ilo = r.constant(override_init->lo, s, v.span);
      ihi = r.constant(override_init->hi, s, v.span);
    } else {
      ilo = ihi = r.constant(v.init, s, v.span);
    }
    if (fv.lo > fv.hi) r.error(v.span, "empty domain for variable '" + name + "'");
    if (ilo > ihi) r.error(v.span, "empty initial range for variable '" + name + "'");
    for (std::int64_t x = ilo; x <= ihi && ihi - ilo < 1'000'000; ++x) {
      if (x < fv.lo || x > fv.hi) {
        r.error(v.span, fmt::format("initial value {} of '{}' outside [{}, {}]", x, name, fv.lo, fv.hi));
        break;
      }
      fv.init.push_back(x);
    }
    if (fv.lo < INT32_MIN || fv.hi > INT32_MAX) r.error(v.span, "domain of '" + name + "' exceeds 32 bits");
    f.vars.push_back(std::move(fv));
  };
  for (const auto& g : model.globals) add_var(g, g.name, -1, cscope, std::nullopt);

  // Locals, timing variables, initial timeouts.
  for (std::size_t pi = 0; pi < instances.size(); ++pi) {
    const auto& [tpl, index] = instances[pi];
    FlatProcess& fp = f.processes[pi];
    Scope s = cscope;
    if (!tpl->param.empty()) s.bound[tpl->param] = index;
    for (const auto& v : tpl->locals) {
      std::optional<InitRange> over;
      for (const auto& [n, rg] : tpl->init.locals)
        if (n == v.name) over = rg;
      fp.locals.push_back(static_cast<int>(f.vars.size()));
      add_var(v, fp.name + "." + v.name, static_cast<int>(pi), s, over);
    }
    for (const auto& [n, rg] : tpl->init.locals) {
      bool found = false;
      for (const auto& v : tpl->locals) found = found || v.name == n;
      if (!found) r.error(tpl->span, "init for unknown local '" + n + "' in process '" + tpl->name + "'");
    }
    for (const auto& t : tpl->timing_vars) {
      FlatTiming ft;
      ft.name = fp.name + "." + t.name;
      ft.owner = static_cast<int>(pi);
      std::int64_t lo = r.constant(t.init_lo, s, t.span);
      std::int64_t hi = r.constant(t.init_hi, s, t.span);
      if (lo > hi) r.error(t.span, "empty initial range for timing variable '" + t.name + "'");
      for (std::int64_t x = lo; x <= hi && hi - lo < 1'000'000; ++x) ft.init.push_back(x);
      fp.timing.push_back(static_cast<int>(f.timing.size()));
      f.timing.push_back(std::move(ft));
    }
    std::int64_t tlo = 1, thi = 1;
    if (tpl->init.timeout) {
      tlo = r.constant(tpl->init.timeout->lo, s, tpl->span, 1);
      thi = r.constant(tpl->init.timeout->hi, s, tpl->span, 1);
    }
    if (tlo < 0 || thi > f.max_timeout || tlo > thi)
      r.error(tpl->span, fmt::format("initial timeout range {}..{} of '{}' not within [0, {}]", tlo, thi, fp.name,
                                     f.max_timeout));
    for (std::int64_t x = std::max<std::int64_t>(tlo, 0); x <= std::min(thi, f.max_timeout); ++x)
      fp.timeout_init.push_back(x);

    for (const auto& l : tpl->locations) fp.locations.push_back(FlatLocation{l.id, l.kind, l.zero_delay});
    fp.out_edges.assign(fp.locations.size(), {});
    fp.entry = 0;
    bool entry_found = false;
    for (std::size_t l = 0; l < fp.locations.size(); ++l)
      if (fp.locations[l].name == tpl->entry) {
        fp.entry = static_cast<int>(l);
        entry_found = true;
      }
    if (!entry_found) r.error(tpl->span, "entry location '" + tpl->entry + "' of '" + fp.name + "' is not declared");
  }

  auto loc_index = [](const FlatProcess& fp, const std::string& id) {
    for (std::size_t l = 0; l < fp.locations.size(); ++l)
      if (fp.locations[l].name == id) return static_cast<int>(l);
    return -1;
  };
  auto find_name = [](const std::vector<std::string>& v, const std::string& n) {
    auto it = std::find(v.begin(), v.end(), n);
    return it == v.end() ? -1 : static_cast<int>(it - v.begin());
  };

  // Edges.
  std::int64_t max_const = 0;
  for (std::size_t pi = 0; pi < instances.size(); ++pi) {
    const auto& [tpl, index] = instances[pi];
    FlatProcess& fp = f.processes[pi];
    Scope s = cscope;
    s.self = static_cast<int>(pi);
    if (!tpl->param.empty()) s.bound[tpl->param] = index;

    auto timing_index = [&](const std::string& n) { return f.find_timing(fp.name + "." + n); };
    auto resolve_proc = [&](const ProcRef& ref, const SourceSpan& span) -> int {
      std::string name = ref.name;
      if (ref.index) name += "[" + std::to_string(r.constant(ref.index, s, span)) + "]";
      int p = f.find_process(name);
      if (p < 0) r.error(span, "unknown process '" + name + "'");
      return p;
    };

    for (const auto& e : tpl->edges) {
      FlatEdge fe;
      fe.span = e.span;
      fe.kind = e.kind;
      fe.source = loc_index(fp, e.source);
      fe.target = loc_index(fp, e.target);
      if (fe.source < 0) r.error(e.span, "unknown source location '" + e.source + "'");
      if (fe.target < 0) r.error(e.span, "unknown target location '" + e.target + "'");
      Scope es = s;
      es.allow_sender = e.kind == EdgeKind::CalRecv;
      fe.guard = e.guard ? r.resolve(e.guard, es, e.span) : nullptr;
      if (fe.guard && is_true_literal(fe.guard)) fe.guard = nullptr;

      switch (e.kind) {
        case EdgeKind::Timeout:
          break;
        case EdgeKind::SyncSend:
        case EdgeKind::SyncRecv:
          fe.channel = find_name(f.channels, e.channel);
          if (fe.channel < 0) r.error(e.span, "undeclared channel '" + e.channel + "'");
          if (e.payload) fe.payload = r.resolve(e.payload, es, e.span);
          if (!e.payload_var.empty()) {
            fe.payload_var = f.find_var(fp.name + "." + e.payload_var);
            if (fe.payload_var < 0) fe.payload_var = f.find_var(e.payload_var);
            if (fe.payload_var < 0) r.error(e.span, "unknown payload variable '" + e.payload_var + "'");
          }
          break;
        case EdgeKind::CalSend:
          fe.channel = find_name(f.messages, e.channel);
          if (fe.channel < 0) r.error(e.span, "undeclared message '" + e.channel + "'");
          for (const auto& t : e.targets) {
            std::int64_t delay = r.constant(t.delay, es, e.span, 1);
            if (delay < 1 || delay > f.max_timeout)
              r.error(e.span, fmt::format("message delay {} not within [1, {}]", delay, f.max_timeout));
            if (t.receiver.others) {
              for (std::size_t q = 0; q < f.processes.size(); ++q)
                if (q != pi && f.processes[q].family == fp.family)
                  fe.targets.push_back(FlatTarget{static_cast<int>(q), delay});
            } else {
              int q = resolve_proc(t.receiver, e.span);
              if (q >= 0) fe.targets.push_back(FlatTarget{q, delay});
            }
          }
          break;
        case EdgeKind::CalRecv:
          fe.channel = find_name(f.messages, e.channel);
          if (fe.channel < 0) r.error(e.span, "undeclared message '" + e.channel + "'");
          if (!e.from.any) {
            if (e.from.others) {
              r.error(e.span, "a receive names a single sender or '*'");
            } else {
              fe.from_process = resolve_proc(e.from, e.span);
            }
          }
          break;
      }

      // Update rule.
      fe.update.kind = e.update.kind;
      fe.update.lo_strict = e.update.lo_strict;
      fe.update.hi_strict = e.update.hi_strict;
      if (e.update.kind == UpdateRule::Kind::Interval || e.update.kind == UpdateRule::Kind::LowerBound) {
        fe.update.lo = r.constant(e.update.lo, es, e.span);
        max_const = std::max(max_const, fe.update.lo);
        if (!e.update.lo_base.empty()) {
          fe.update.lo_base = timing_index(e.update.lo_base);
          if (fe.update.lo_base < 0) r.error(e.span, "unknown timing variable '" + e.update.lo_base + "'");
        }
      }
      if (e.update.kind == UpdateRule::Kind::Interval) {
        fe.update.hi = r.constant(e.update.hi, es, e.span);
        max_const = std::max(max_const, fe.update.hi);
        if (!e.update.hi_base.empty()) {
          fe.update.hi_base = timing_index(e.update.hi_base);
          if (fe.update.hi_base < 0) r.error(e.span, "unknown timing variable '" + e.update.hi_base + "'");
        }
      }
      for (std::int64_t c : {fe.update.lo, fe.update.hi})
        if (c > f.max_timeout)
          r.error(e.span, fmt::format("update constant {} exceeds max_timeout {}", c, f.max_timeout));
      if (options.require_satisfiable_updates && !interval_satisfiable(fe.update, f.max_timeout))
        r.error(e.span, fmt::format("update rule of edge {} -> {} in '{}' admits no increment in [1, {}]", e.source,
                                    e.target, fp.name, f.max_timeout));

      for (const auto& c : e.capture) {
        int t = timing_index(c);
        if (t < 0) r.error(e.span, "capture of unknown timing variable '" + c + "'");
        fe.capture.push_back(t);
      }
      for (const auto& a : e.assign) {
        int v = f.find_var(fp.name + "." + a.var);
        if (v < 0) {
          v = f.find_var(a.var);
          if (v >= 0 && f.vars[static_cast<std::size_t>(v)].owner >= 0) v = -1;
        }
        if (v < 0) r.error(e.span, "assignment to unknown variable '" + a.var + "'");
        fe.assign.push_back(FlatAssign{v, r.resolve(a.value, es, e.span)});
      }
      if (fe.source >= 0) fp.out_edges[static_cast<std::size_t>(fe.source)].push_back(static_cast<int>(fp.edges.size()));
      fp.edges.push_back(std::move(fe));
    }
  }
  f.max_constant = max_const;

  for (const auto& p : model.properties) {
    FlatProperty fpr;
    fpr.name = p.name;
    fpr.kind = p.kind;
    fpr.formula = p.formula;
    fpr.flag1 = p.flag1;
    fpr.flag2 = p.flag2;
    fpr.span = p.span;
    if (p.kind == PropertyKind::Timeliness) fpr.bound = r.constant(p.bound, cscope, p.span);
    f.properties.push_back(std::move(fpr));
  }

  if (has_errors(diags)) throw FlattenError(std::move(diags));
  return f;
}

ExprPtr resolve_property_expr(const FlatModel& flat, const ExprPtr& e) {
  std::vector<Diagnostic> diags;
  Resolver r(diags);
  Scope s;
  s.flat = &flat;
  s.consts = &flat.consts;
  ExprPtr out = r.resolve(e, s, e ? e->span : SourceSpan{});
  if (has_errors(diags)) throw FlattenError(std::move(diags));
  return out;
}

std::int64_t max_constant(const Model& model, const Bindings& bindings) {
  return flatten(model, bindings).max_constant;
}

// ---------------------------------------------------------------------------

namespace {

// Turns resolved slots back into names as seen from process `self`.
ExprPtr unresolve(const FlatModel& f, const ExprPtr& e, int self) {
  if (!e) return nullptr;
  auto qualify = [&](int p, std::string member, bool loc) -> ExprPtr {
    const auto& proc = f.processes[static_cast<std::size_t>(p)];
    ExprPtr idx = proc.family_index > 0 && proc.name == proc.family + "[" + std::to_string(proc.family_index) + "]"
                      ? make_const(proc.family_index)
                      : nullptr;
    std::string q = idx ? proc.family : proc.name;
    return loc ? make_loc_at(q, idx, std::move(member)) : make_qualified_ref(q, idx, std::move(member));
  };
  auto short_name = [](const std::string& full) { return full.substr(full.rfind('.') + 1); };
  switch (e->slot.kind) {
    case SlotKind::Var: {
      const auto& v = f.vars[static_cast<std::size_t>(e->slot.index)];
      if (v.owner < 0) return make_ref(v.name);
      if (v.owner == self) return make_ref(short_name(v.name));
      return qualify(v.owner, short_name(v.name), false);
    }
    case SlotKind::Timing: {
      const auto& t = f.timing[static_cast<std::size_t>(e->slot.index)];
      if (t.owner == self) return make_ref(short_name(t.name));
      return qualify(t.owner, short_name(t.name), false);
    }
    case SlotKind::Timeout:
      if (e->slot.index == self) return make_ref("timeout");
      return qualify(e->slot.index, "timeout", false);
    case SlotKind::Location: {
      const auto& proc = f.processes[static_cast<std::size_t>(e->slot.index)];
      return qualify(e->slot.index, proc.locations[static_cast<std::size_t>(e->slot.aux)].name, true);
    }
    case SlotKind::Sender:
      return make_ref("sender");
    case SlotKind::None:
      break;
  }
  auto c = std::make_shared<Expr>(*e);
  for (auto& a : c->args) a = unresolve(f, a, self);
  return c;
}

ProcRef proc_ref_for(const FlatModel& f, int p) {
  ProcRef r;
  const auto& proc = f.processes[static_cast<std::size_t>(p)];
  if (proc.family_index > 0 && proc.name == proc.family + "[" + std::to_string(proc.family_index) + "]") {
    r.name = proc.family;
    r.index = make_const(proc.family_index);
  } else {
    r.name = proc.name;
  }
  return r;
}

}  // namespace

Model unflatten(const FlatModel& f) {
  Model m;
  m.name = f.name;
  for (const auto& [k, v] : f.consts) m.consts.push_back(ConstDecl{k, make_const(v), {}});
  m.max_timeout = make_const(f.max_timeout);
  if (f.calendar_capacity > 0) m.calendar_capacity = make_const(f.calendar_capacity);
  m.sync_eager = f.sync_eager;
  m.channels = f.channels;
  m.messages = f.messages;
  auto short_name = [](const std::string& full) { return full.substr(full.rfind('.') + 1); };
  auto var_decl = [](const FlatVar& v, std::string name) {
    VarDecl d;
    d.name = std::move(name);
    d.lo = make_const(v.lo);
    d.hi = make_const(v.hi);
    d.init = make_const(v.init.empty() ? v.lo : v.init.front());
    return d;
  };
  for (const auto& v : f.vars)
    if (v.owner < 0) m.globals.push_back(var_decl(v, v.name));

  for (std::size_t pi = 0; pi < f.processes.size(); ++pi) {
    const auto& fp = f.processes[pi];
    const int self = static_cast<int>(pi);
    ProcessTemplate pt;
    pt.name = fp.name;
    pt.family = fp.family;
    pt.family_index = fp.family_index;
    for (const auto& l : fp.locations) pt.locations.push_back(Location{l.name, l.kind, l.zero_delay, {}});
    pt.entry = fp.locations[static_cast<std::size_t>(fp.entry)].name;
    for (int vi : fp.locals) {
      const auto& v = f.vars[static_cast<std::size_t>(vi)];
      pt.locals.push_back(var_decl(v, short_name(v.name)));
      if (v.init.size() > 1)
        pt.init.locals.emplace_back(short_name(v.name), InitRange{make_const(v.init.front()), make_const(v.init.back())});
    }
    for (int ti : fp.timing) {
      const auto& t = f.timing[static_cast<std::size_t>(ti)];
      TimingDecl d;
      d.name = short_name(t.name);
      d.init_lo = make_const(t.init.front());
      d.init_hi = make_const(t.init.back());
      pt.timing_vars.push_back(d);
    }
    pt.init.timeout = InitRange{make_const(fp.timeout_init.front()), make_const(fp.timeout_init.back())};
    auto timing_short = [&](int t) { return t < 0 ? std::string() : short_name(f.timing[static_cast<std::size_t>(t)].name); };
    for (const auto& fe : fp.edges) {
      Edge e;
      e.span = fe.span;
      e.source = fp.locations[static_cast<std::size_t>(fe.source)].name;
      e.target = fp.locations[static_cast<std::size_t>(fe.target)].name;
      e.guard = unresolve(f, fe.guard, self);
      e.kind = fe.kind;
      if (fe.kind == EdgeKind::SyncSend || fe.kind == EdgeKind::SyncRecv)
        e.channel = f.channels[static_cast<std::size_t>(fe.channel)];
      if (fe.kind == EdgeKind::CalSend || fe.kind == EdgeKind::CalRecv)
        e.channel = f.messages[static_cast<std::size_t>(fe.channel)];
      e.payload = unresolve(f, fe.payload, self);
      if (fe.payload_var >= 0) {
        const auto& v = f.vars[static_cast<std::size_t>(fe.payload_var)];
        e.payload_var = v.owner < 0 ? v.name : short_name(v.name);
      }
      for (const auto& t : fe.targets) e.targets.push_back(SendTarget{proc_ref_for(f, t.process), make_const(t.delay)});
      if (fe.kind == EdgeKind::CalRecv) {
        if (fe.from_process < 0) {
          e.from.any = true;
        } else {
          e.from = proc_ref_for(f, fe.from_process);
        }
      }
      e.update.kind = fe.update.kind;
      e.update.lo_strict = fe.update.lo_strict;
      e.update.hi_strict = fe.update.hi_strict;
      if (fe.update.kind == UpdateRule::Kind::Interval || fe.update.kind == UpdateRule::Kind::LowerBound) {
        e.update.lo = make_const(fe.update.lo);
        e.update.lo_base = timing_short(fe.update.lo_base);
      }
      if (fe.update.kind == UpdateRule::Kind::Interval) {
        e.update.hi = make_const(fe.update.hi);
        e.update.hi_base = timing_short(fe.update.hi_base);
      }
      for (int c : fe.capture) e.capture.push_back(timing_short(c));
      for (const auto& a : fe.assign) {
        const auto& v = f.vars[static_cast<std::size_t>(a.var)];
        e.assign.push_back(Assignment{v.owner < 0 ? v.name : short_name(v.name), unresolve(f, a.value, self)});
      }
      pt.edges.push_back(std::move(e));
    }
    m.processes.push_back(std::move(pt));
  }
  for (const auto& p : f.properties) {
    PropertyDecl d;
    d.name = p.name;
    d.kind = p.kind;
    d.formula = p.formula;
    d.flag1 = p.flag1;
    d.flag2 = p.flag2;
    d.bound = make_const(p.bound);
    m.properties.push_back(std::move(d));
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

void check_duplicates(const std::vector<std::pair<std::string, SourceSpan>>& names, const std::string& what,
                      std::vector<Diagnostic>& out) {
  std::set<std::string> seen;
  for (const auto& [n, span] : names)
    if (!seen.insert(n).second) out.push_back(Diagnostic{span, Severity::Error, "duplicate " + what + " '" + n + "'"});
}

// Collects unqualified identifiers that a template expression reads.
void collect_refs(const ExprPtr& e, std::set<std::string>& bound, std::vector<const Expr*>& out) {
  if (!e) return;
  if (e->op == Op::Ref && e->qualifier.empty() && !bound.count(e->name)) out.push_back(e.get());
  if (e->op == Op::Forall || e->op == Op::Exists) {
    collect_refs(e->args[0], bound, out);
    collect_refs(e->args[1], bound, out);
    bool inserted = bound.insert(e->name).second;
    collect_refs(e->args[2], bound, out);
    if (inserted) bound.erase(e->name);
    return;
  }
  for (const auto& a : e->args) collect_refs(a, bound, out);
}

}  // namespace

std::vector<Diagnostic> validate(const Model& model, const Bindings& bindings) {
  std::vector<Diagnostic> out;
  auto err = [&](const SourceSpan& span, std::string msg) {
    out.push_back(Diagnostic{span, Severity::Error, std::move(msg)});
  };

  if (!model.max_timeout) err({}, "missing 'max_timeout' declaration");

  std::vector<std::pair<std::string, SourceSpan>> top;
  for (const auto& c : model.consts) top.emplace_back(c.name, c.span);
  for (const auto& g : model.globals) top.emplace_back(g.name, g.span);
  for (const auto& c : model.channels) top.emplace_back(c, SourceSpan{});
  for (const auto& c : model.messages) top.emplace_back(c, SourceSpan{});
  check_duplicates(top, "top-level name", out);
  {
    std::vector<std::pair<std::string, SourceSpan>> procs, props;
    for (const auto& p : model.processes) procs.emplace_back(p.name, p.span);
    for (const auto& p : model.properties) props.emplace_back(p.name, p.span);
    check_duplicates(procs, "process", out);
    check_duplicates(props, "property", out);
  }

  std::set<std::string> globals, consts;
  for (const auto& g : model.globals) globals.insert(g.name);
  for (const auto& c : model.consts) consts.insert(c.name);
  for (const auto& p : model.processes)
    if (!p.count.empty()) consts.insert(p.count);
  for (const auto& [k, v] : bindings) consts.insert(k);
  std::set<std::string> channels(model.channels.begin(), model.channels.end());
  std::set<std::string> messages(model.messages.begin(), model.messages.end());

  bool uses_calendar = false;
  for (const auto& p : model.processes) {
    std::set<std::string> locs, locals, timing;
    std::vector<std::pair<std::string, SourceSpan>> ln, vn;
    for (const auto& l : p.locations) {
      locs.insert(l.id);
      ln.emplace_back(l.id, l.span);
    }
    for (const auto& v : p.locals) {
      locals.insert(v.name);
      vn.emplace_back(v.name, v.span);
    }
    for (const auto& t : p.timing_vars) {
      timing.insert(t.name);
      vn.emplace_back(t.name, t.span);
      if (globals.count(t.name))
        err(t.span, "timing variable '" + t.name + "' clashes with a global variable");
    }
    check_duplicates(ln, "location in process '" + p.name + "'", out);
    check_duplicates(vn, "variable in process '" + p.name + "'", out);
    if (p.locations.empty()) err(p.span, "process '" + p.name + "' declares no locations");
    if (!p.entry.empty() && !locs.count(p.entry))
      err(p.span, "entry location '" + p.entry + "' of process '" + p.name + "' is not declared");

    auto check_expr = [&](const ExprPtr& e, const SourceSpan& span, bool allow_sender) {
      std::set<std::string> bound;
      if (!p.param.empty()) bound.insert(p.param);
      std::vector<const Expr*> refs;
      collect_refs(e, bound, refs);
      for (const Expr* r : refs) {
        const std::string& n = r->name;
        if (locals.count(n) || timing.count(n) || globals.count(n) || consts.count(n) || n == "timeout") continue;
        if (n == "sender" && allow_sender) continue;
        err(r->span.line ? r->span : span, "unknown identifier '" + n + "' in process '" + p.name + "'");
      }
    };

    std::map<std::string, int> outgoing;
    for (const auto& e : p.edges) {
      ++outgoing[e.source];
      if (!locs.count(e.source)) err(e.span, "unknown source location '" + e.source + "'");
      if (!locs.count(e.target)) err(e.span, "unknown target location '" + e.target + "'");
      check_expr(e.guard, e.span, e.kind == EdgeKind::CalRecv);
      for (const auto& a : e.assign) {
        check_expr(a.value, e.span, e.kind == EdgeKind::CalRecv);
        if (!locals.count(a.var) && !globals.count(a.var)) {
          if (timing.count(a.var))
            err(e.span, "timing variable '" + a.var + "' can only change through 'capture'");
          else if (consts.count(a.var) || a.var == p.param)
            err(e.span, "cannot assign to constant '" + a.var + "'");
          else
            err(e.span, "assignment to unknown variable '" + a.var + "'");
        }
      }
      for (const auto& c : e.capture)
        if (!timing.count(c)) err(e.span, "capture of '" + c + "', which is not a timing variable of '" + p.name + "'");
      for (const auto* b : {&e.update.lo_base, &e.update.hi_base})
        if (!b->empty() && !timing.count(*b)) err(e.span, "update base '" + *b + "' is not a timing variable");
      switch (e.kind) {
        case EdgeKind::SyncSend:
        case EdgeKind::SyncRecv:
          if (!channels.count(e.channel)) err(e.span, "undeclared channel '" + e.channel + "'");
          if (e.payload) check_expr(e.payload, e.span, false);
          if (!e.payload_var.empty() && !locals.count(e.payload_var) && !globals.count(e.payload_var))
            err(e.span, "unknown payload variable '" + e.payload_var + "'");
          break;
        case EdgeKind::CalSend:
          uses_calendar = true;
          if (!messages.count(e.channel)) err(e.span, "undeclared message '" + e.channel + "'");
          if (e.targets.empty()) err(e.span, "send without receivers");
          break;
        case EdgeKind::CalRecv: {
          uses_calendar = true;
          if (!messages.count(e.channel)) err(e.span, "undeclared message '" + e.channel + "'");
          const bool injected =
              e.guard && e.guard->op == Op::Ne && e.guard->args[0]->op == Op::Ref &&
              e.guard->args[0]->name == kCommittedFlag;
          if (!is_true_literal(e.guard) && !injected) err(e.span, "calendar receive edges must be unguarded");
          break;
        }
        case EdgeKind::Timeout:
          break;
      }
    }
    for (const auto& l : p.locations)
      if (l.kind == LocationKind::Committed && !outgoing.count(l.id))
        err(l.span, "committed location '" + l.id + "' has no outgoing edge");
  }
  if (uses_calendar && !model.calendar_capacity)
    err({}, "calendar messages are used but no 'calendar' capacity is declared");

  // Sync pairs that would put two processes into committed locations at once.
  for (const auto& ch : model.channels) {
    std::vector<std::pair<const ProcessTemplate*, bool>> senders, receivers;
    for (const auto& p : model.processes) {
      auto committed = [&](const std::string& id) {
        for (const auto& l : p.locations)
          if (l.id == id) return l.kind == LocationKind::Committed;
        return false;
      };
      for (const auto& e : p.edges) {
        if (e.channel != ch || !committed(e.target)) continue;
        if (e.kind == EdgeKind::SyncSend) senders.emplace_back(&p, true);
        if (e.kind == EdgeKind::SyncRecv) receivers.emplace_back(&p, true);
      }
    }
    for (const auto& [sp, _] : senders)
      for (const auto& [rp, __] : receivers)
        if (sp != rp || !sp->param.empty())
          err(sp->span, "synchronization on '" + ch + "' enters two committed locations simultaneously");
  }

  for (const auto& p : model.properties) {
    if (p.kind == PropertyKind::Invariant) {
      auto r = parse_expression(p.formula);
      for (const auto& e : r.errors)
        err(p.span, "in invariant '" + p.name + "': " + format_parse_error(e));
    } else if (p.kind == PropertyKind::Ltl) {
      auto r = parse_ltl(p.formula);
      for (const auto& e : r.errors) err(p.span, "in formula '" + p.name + "': " + format_parse_error(e));
    }
  }

  if (has_errors(out)) return out;

  // Instantiation-dependent checks: constants, bounds, ranges, indices.
  FlatModel flat;
  try {
    flat = flatten(model, bindings);
  } catch (const FlattenError& fe) {
    for (const auto& d : fe.diagnostics()) out.push_back(d);
    return out;
  }
  for (const auto& p : flat.properties) {
    try {
      if (p.kind == PropertyKind::Invariant) {
        resolve_property_expr(flat, parse_expression(p.formula).expr);
      } else if (p.kind == PropertyKind::Ltl) {
        auto r = parse_ltl(p.formula);
        resolve_ltl(flat, *r.formula);
      } else {
        for (const auto* flag : {&p.flag1, &p.flag2}) {
          auto r = parse_expression(*flag);
          ExprPtr e = resolve_property_expr(flat, r.expr);
          if (e->slot.kind != SlotKind::Var) err(p.span, "timeliness flag '" + *flag + "' must be a variable");
        }
        if (p.bound < 0) err(p.span, "timeliness bound must be non-negative");
      }
    } catch (const FlattenError& fe) {
      for (const auto& d : fe.diagnostics())
        out.push_back(Diagnostic{p.span, Severity::Error, "in property '" + p.name + "': " + d.message});
    }
  }
  return out;
}

}  // namespace tocheck
