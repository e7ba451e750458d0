#include "tocheck/dot.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

namespace tocheck {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string edge_text(const FlatModel& fm, const FlatEdge& e) {
  std::string t;
  if (e.guard) t += "[" + render_expr(e.guard) + "] ";
  switch (e.kind) {
    case EdgeKind::Timeout:
      break;
    case EdgeKind::SyncSend:
      t += fm.channels[static_cast<std::size_t>(e.channel)] + "! ";
      break;
    case EdgeKind::SyncRecv:
      t += fm.channels[static_cast<std::size_t>(e.channel)] + "? ";
      break;
    case EdgeKind::CalSend: {
      t += "send " + fm.messages[static_cast<std::size_t>(e.channel)] + " to {";
      for (std::size_t i = 0; i < e.targets.size(); ++i)
        t += (i ? ", " : "") + fm.processes[static_cast<std::size_t>(e.targets[i].process)].name + ":" +
             std::to_string(e.targets[i].delay);
      t += "} ";
      break;
    }
    case EdgeKind::CalRecv:
      t += "recv " + fm.messages[static_cast<std::size_t>(e.channel)];
      if (e.from_process >= 0) t += " from " + fm.processes[static_cast<std::size_t>(e.from_process)].name;
      t += " ";
      break;
  }
  t += "update " + render_flat_update(fm, e.update);
  for (const auto& a : e.assign)
    t += "\n" + fm.vars[static_cast<std::size_t>(a.var)].name + " := " + render_expr(a.value);
  return t;
}

std::string state_text(const FlatModel& fm, const ClocklessState& s) {
  std::string t;
  for (std::size_t p = 0; p < fm.processes.size(); ++p) {
    const auto& proc = fm.processes[p];
    t += fmt::format("{}{}@{} timeout={}", p ? "\n" : "", proc.name, proc.locations[static_cast<std::size_t>(s.locs[p])].name,
                     s.timeouts[p]);
  }
  for (std::size_t v = 0; v < fm.vars.size(); ++v) t += fmt::format("\n{}={}", fm.vars[v].name, s.vars[v]);
  for (std::size_t w = 0; w < fm.timing.size(); ++w) t += fmt::format("\n{}={}", fm.timing[w].name, s.timing[w]);
  for (const auto& c : s.calendar)
    t += fmt::format("\n{}:{}->{} in {}", fm.messages[static_cast<std::size_t>(c.message)],
                     fm.processes[static_cast<std::size_t>(c.sender)].name,
                     fm.processes[static_cast<std::size_t>(c.receiver)].name, c.remaining);
  return t;
}

}  // namespace

std::string export_dot(const FlatModel& fm, bool reachable, const CheckOptions& opts) {
  std::ostringstream os;
  os << "digraph " << quote(fm.name.empty() ? "model" : fm.name) << " {\n";
  if (!reachable) {
    for (std::size_t p = 0; p < fm.processes.size(); ++p) {
      const auto& proc = fm.processes[p];
      os << "  subgraph cluster_" << p << " {\n    label=" << quote(proc.name) << ";\n";
      for (std::size_t l = 0; l < proc.locations.size(); ++l) {
        os << "    p" << p << "_" << l << " [label=" << quote(proc.locations[l].name);
        if (static_cast<int>(l) == proc.entry) os << ", shape=doublecircle";
        if (proc.locations[l].zero_delay) os << ", style=dashed";
        os << "];\n";
      }
      for (const auto& e : proc.edges)
        os << "    p" << p << "_" << e.source << " -> p" << p << "_" << e.target
           << " [label=" << quote(edge_text(fm, e)) << "];\n";
      os << "  }\n";
    }
  } else {
    StateGraph g = explore_graph(fm, opts);
    for (std::size_t i = 0; i < g.states.size(); ++i) {
      os << "  s" << i << " [label=" << quote(state_text(fm, g.states[i]));
      if (std::find(g.initial.begin(), g.initial.end(), i) != g.initial.end()) os << ", penwidth=2";
      os << "];\n";
    }
    for (std::size_t i = 0; i < g.states.size() && i + 1 < g.offsets.size(); ++i) {
      auto succ = successors(fm, g.states[i]);
      for (std::uint32_t k = g.offsets[i]; k < g.offsets[i + 1]; ++k)
        os << "  s" << i << " -> s" << g.targets[k]
           << " [label=" << quote(format_label(fm, succ[k - g.offsets[i]].label)) << "];\n";
    }
    if (!g.complete) os << "  // truncated at the state cap\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace tocheck
