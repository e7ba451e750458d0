#include <sstream>

#include "tocheck/dsl.hpp"

namespace tocheck {

namespace {

std::string bound_text(const ExprPtr& e, const std::string& base) {
  if (base.empty()) return render_expr(e);
  if (e->op == Op::Const && e->value == 0) return base;
  // Parenthesize anything that would otherwise absorb the base variable.
  bool parens = precedence(e->op) < 6;
  std::string s = render_expr(e);
  return (parens ? "(" + s + ")" : s) + " + " + base;
}

std::string rule_text(const UpdateRule& r) {
  switch (r.kind) {
    case UpdateRule::Kind::Infinity:
      return "inf";
    case UpdateRule::Kind::MaxM:
      return "maxM";
    case UpdateRule::Kind::LowerBound:
      return std::string(r.lo_strict ? "> " : ">= ") + bound_text(r.lo, r.lo_base);
    case UpdateRule::Kind::Interval:
      return std::string("in ") + (r.lo_strict ? "(" : "[") + bound_text(r.lo, r.lo_base) + ", " +
             bound_text(r.hi, r.hi_base) + (r.hi_strict ? ")" : "]");
  }
  return "maxM";
}

std::string proc_ref_text(const ProcRef& r) {
  if (r.any) return "*";
  if (r.others) return "others";
  if (r.index) return r.name + "[" + render_expr(r.index) + "]";
  return r.name;
}

std::string range_text(const InitRange& r) {
  if (expr_equal(r.lo, r.hi)) return "= " + render_expr(r.lo);
  return "in " + render_expr(r.lo) + ".." + render_expr(r.hi);
}

void render_var(std::ostream& os, const VarDecl& v, const char* indent) {
  os << indent << "var " << v.name << " : [" << render_expr(v.lo) << ", " << render_expr(v.hi)
     << "] = " << render_expr(v.init) << ";\n";
}

const char* kind_text(LocationKind k) {
  switch (k) {
    case LocationKind::Urgent: return " urgent";
    case LocationKind::Committed: return " committed";
    default: return "";
  }
}

void render_edge(std::ostream& os, const Edge& e) {
  os << "  " << e.source << " -> " << e.target;
  if (e.guard && !is_true_literal(e.guard)) os << " when " << render_expr(e.guard);
  switch (e.kind) {
    case EdgeKind::Timeout:
      break;
    case EdgeKind::SyncSend:
      os << " sync " << e.channel << "!";
      if (e.payload) os << render_expr(e.payload);
      break;
    case EdgeKind::SyncRecv:
      os << " sync " << e.channel << "?" << e.payload_var;
      break;
    case EdgeKind::CalSend:
      os << " send " << e.channel << " to {";
      for (std::size_t i = 0; i < e.targets.size(); ++i) {
        if (i) os << ", ";
        os << "(" << proc_ref_text(e.targets[i].receiver) << ", " << render_expr(e.targets[i].delay) << ")";
      }
      os << "}";
      break;
    case EdgeKind::CalRecv:
      os << " recv " << e.channel << " from " << proc_ref_text(e.from);
      break;
  }
  os << " update " << rule_text(e.update);
  if (!e.capture.empty()) {
    os << " capture {";
    for (std::size_t i = 0; i < e.capture.size(); ++i) os << (i ? ", " : "") << e.capture[i];
    os << "}";
  }
  if (!e.assign.empty()) {
    os << " do {";
    for (std::size_t i = 0; i < e.assign.size(); ++i)
      os << (i ? "; " : " ") << e.assign[i].var << " := " << render_expr(e.assign[i].value);
    os << " }";
  }
  os << ";\n";
}

void render_names(std::ostream& os, const char* kw, const std::vector<std::string>& names) {
  if (names.empty()) return;
  os << kw << " ";
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
  os << ";\n";
}

}  // namespace

std::string render(const Model& m) {
  std::ostringstream os;
  if (!m.name.empty()) os << "model " << m.name << ";\n\n";
  for (const auto& c : m.consts) os << "const " << c.name << " = " << render_expr(c.value) << ";\n";
  if (m.max_timeout) os << "max_timeout " << render_expr(m.max_timeout) << ";\n";
  if (m.calendar_capacity) os << "calendar " << render_expr(m.calendar_capacity) << ";\n";
  if (m.sync_eager) os << "option sync_eager;\n";
  for (const auto& v : m.globals) render_var(os, v, "");
  render_names(os, "chan", m.channels);
  render_names(os, "message", m.messages);

  for (const auto& p : m.processes) {
    os << "\nprocess " << p.name;
    if (!p.param.empty()) os << "(" << p.param << " : " << p.count << ")";
    os << " {\n";
    if (!p.locations.empty()) {
      os << "  location ";
      for (std::size_t i = 0; i < p.locations.size(); ++i) {
        const auto& l = p.locations[i];
        os << (i ? ", " : "") << l.id << kind_text(l.kind) << (l.zero_delay ? " immediate" : "");
      }
      os << ";\n";
    }
    if (!p.entry.empty()) os << "  entry " << p.entry << ";\n";
    for (const auto& v : p.locals) render_var(os, v, "  ");
    for (const auto& t : p.timing_vars) os << "  timing " << t.name << " " << range_text({t.init_lo, t.init_hi}) << ";\n";
    if (p.init.timeout) os << "  init timeout " << range_text(*p.init.timeout) << ";\n";
    for (const auto& [name, r] : p.init.locals) os << "  init " << name << " " << range_text(r) << ";\n";
    for (const auto& e : p.edges) render_edge(os, e);
    os << "}\n";
  }

  if (!m.properties.empty()) os << "\n";
  for (const auto& p : m.properties) {
    switch (p.kind) {
      case PropertyKind::Invariant:
        os << "invariant " << p.name << ": " << p.formula << ";\n";
        break;
      case PropertyKind::Ltl:
        os << "ltl " << p.name << ": " << p.formula << ";\n";
        break;
      case PropertyKind::Timeliness:
        os << "timeliness " << p.name << ": " << p.flag1 << ", " << p.flag2 << " <= " << render_expr(p.bound)
           << ";\n";
        break;
    }
  }
  return os.str();
}

}  // namespace tocheck
