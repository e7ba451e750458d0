#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tocheck/expr.hpp"

namespace tocheck {

enum class LocationKind { Normal, Urgent, Committed };

struct Location {
  std::string id;
  LocationKind kind = LocationKind::Normal;
  // Set once urgent/committed locations have been desugared: time may not
  // pass while any process sits here, and outgoing edges ignore the timeout.
  bool zero_delay = false;
  SourceSpan span;
};

struct VarDecl {
  std::string name;
  ExprPtr lo;
  ExprPtr hi;
  ExprPtr init;
  SourceSpan span;
};

struct TimingDecl {
  std::string name;
  ExprPtr init_lo;
  ExprPtr init_hi;
  SourceSpan span;
};

// A finite, inclusive range of initial values.
struct InitRange {
  ExprPtr lo;
  ExprPtr hi;
};

struct InitSpec {
  std::optional<InitRange> timeout;  // defaults to exactly 1
  std::vector<std::pair<std::string, InitRange>> locals;  // overrides of VarDecl::init
};

struct UpdateRule {
  enum class Kind { Interval, LowerBound, Infinity, MaxM };
  Kind kind = Kind::MaxM;
  ExprPtr lo;
  ExprPtr hi;
  bool lo_strict = false;
  bool hi_strict = false;
  std::string lo_base;  // timing variable added to the lower bound ("" for none)
  std::string hi_base;
};

struct Assignment {
  std::string var;
  ExprPtr value;
};

// Names a process from inside a template: `others`, `Name`, or `Name[expr]`.
struct ProcRef {
  bool others = false;
  bool any = false;  // `*` on a receive
  std::string name;
  ExprPtr index;
};

struct SendTarget {
  ProcRef receiver;
  ExprPtr delay;
};

enum class EdgeKind { Timeout, SyncSend, SyncRecv, CalSend, CalRecv };

struct Edge {
  std::string source;
  std::string target;
  ExprPtr guard;  // null means true
  EdgeKind kind = EdgeKind::Timeout;
  std::string channel;        // sync channel or calendar message
  ExprPtr payload;            // value sent on a sync (null: none)
  std::string payload_var;    // local receiving a sync payload ("" for none)
  std::vector<SendTarget> targets;
  ProcRef from;               // sender filter on a calendar receive
  UpdateRule update;
  std::vector<std::string> capture;
  std::vector<Assignment> assign;
  SourceSpan span;
};

struct ProcessTemplate {
  std::string name;
  std::string param;  // family index variable ("" for a single process)
  std::string count;  // constant giving the family size
  std::vector<Location> locations;
  std::string entry;
  std::vector<VarDecl> locals;
  std::vector<TimingDecl> timing_vars;
  InitSpec init;
  std::vector<Edge> edges;
  SourceSpan span;
  // Instance metadata carried by already-flat templates (see unflatten); not
  // expressible in the surface syntax.
  std::string family;
  std::int64_t family_index = 0;
};

struct ConstDecl {
  std::string name;
  ExprPtr value;
  SourceSpan span;
};

enum class PropertyKind { Invariant, Ltl, Timeliness };

struct PropertyDecl {
  std::string name;
  PropertyKind kind = PropertyKind::Invariant;
  std::string formula;   // invariant expression or LTL formula text
  std::string flag1;     // timeliness: rising edge starts the measurement
  std::string flag2;     // timeliness: ends the measurement
  ExprPtr bound;         // timeliness bound
  SourceSpan span;
};

struct Model {
  std::string name;
  std::vector<ConstDecl> consts;
  std::vector<VarDecl> globals;
  std::vector<std::string> channels;
  std::vector<std::string> messages;
  ExprPtr max_timeout;
  ExprPtr calendar_capacity;  // null: no calendar
  bool sync_eager = false;
  std::vector<ProcessTemplate> processes;
  std::vector<PropertyDecl> properties;
};

bool operator==(const Model& a, const Model& b);

enum class Severity { Error, Warning };

struct Diagnostic {
  SourceSpan span;
  Severity severity = Severity::Error;
  std::string message;
};

std::string format_diagnostic(const Diagnostic& d);
bool has_errors(const std::vector<Diagnostic>& diags);

using Bindings = std::map<std::string, std::int64_t>;

// Name of the global introduced when urgent/committed locations are desugared.
inline constexpr const char* kCommittedFlag = "committed_flag";

std::vector<Diagnostic> validate(const Model& model, const Bindings& bindings = {});

// Rewrites urgent and committed locations into ordinary locations carrying the
// zero-delay marker, driven by the `committed_flag` global.
Model desugar_locations(const Model& model);

// ---------------------------------------------------------------------------
// Flat model: every family instantiated, every reference resolved to a slot.

struct FlatUpdate {
  UpdateRule::Kind kind = UpdateRule::Kind::MaxM;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool lo_strict = false;
  bool hi_strict = false;
  int lo_base = -1;  // flat timing variable index, -1 for none
  int hi_base = -1;
  bool operator==(const FlatUpdate&) const = default;
};

struct FlatAssign {
  int var = -1;
  ExprPtr value;
};

struct FlatTarget {
  int process = -1;
  std::int64_t delay = 1;
  bool operator==(const FlatTarget&) const = default;
};

struct FlatEdge {
  int source = -1;
  int target = -1;
  ExprPtr guard;
  EdgeKind kind = EdgeKind::Timeout;
  int channel = -1;  // sync channel or message index
  ExprPtr payload;
  int payload_var = -1;
  std::vector<FlatTarget> targets;
  int from_process = -1;  // -1: any sender
  FlatUpdate update;
  std::vector<int> capture;
  std::vector<FlatAssign> assign;
  SourceSpan span;
};

struct FlatLocation {
  std::string name;
  LocationKind kind = LocationKind::Normal;
  bool zero_delay = false;
};

struct FlatProcess {
  std::string name;        // "P[2]" for family members
  std::string family;      // template name
  std::int64_t family_index = 0;  // 1-based within the family, 0 for singletons
  std::vector<FlatLocation> locations;
  int entry = 0;
  std::vector<FlatEdge> edges;
  std::vector<std::vector<int>> out_edges;  // per location
  std::vector<std::int64_t> timeout_init;
  std::vector<int> locals;  // flat var indices
  std::vector<int> timing;  // flat timing indices
};

struct FlatVar {
  std::string name;  // qualified for locals: "P[1].x"
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::vector<std::int64_t> init;
  int owner = -1;  // -1 for globals
};

struct FlatTiming {
  std::string name;
  int owner = -1;
  std::vector<std::int64_t> init;
};

struct FlatProperty {
  std::string name;
  PropertyKind kind = PropertyKind::Invariant;
  std::string formula;
  std::string flag1;
  std::string flag2;
  std::int64_t bound = 0;
  SourceSpan span;
};

// Time accumulator used by timeliness instrumentation: while `flag1` holds
// and `flag2` does not, every time-progress step adds its length to `var`.
struct Accumulator {
  int var = -1;
  int flag1 = -1;
  int flag2 = -1;
};

struct FlatModel {
  std::string name;
  std::vector<FlatProcess> processes;
  std::vector<FlatVar> vars;
  std::vector<FlatTiming> timing;
  std::vector<std::string> channels;
  std::vector<std::string> messages;
  int calendar_capacity = 0;
  std::int64_t max_timeout = 1;
  std::int64_t max_constant = 0;
  bool sync_eager = false;
  std::vector<FlatProperty> properties;
  std::map<std::string, std::int64_t> consts;
  std::optional<Accumulator> accumulator;

  int find_process(const std::string& name) const;
  int find_var(const std::string& name) const;
  int find_timing(const std::string& name) const;
  bool has_zero_delay() const;
};

bool operator==(const FlatModel& a, const FlatModel& b);

// Raised by flatten when bindings are missing or instantiation fails.
class FlattenError : public std::runtime_error {
 public:
  FlattenError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

struct FlattenOptions {
  // When false, update rules whose integer range is empty are kept instead of
  // being reported. Only rule inspection wants this.
  bool require_satisfiable_updates = true;
};

FlatModel flatten(const Model& model, const Bindings& bindings = {}, const FlattenOptions& options = {});

// Lowers a flat model back to an IR without families; flattening the result
// yields the same flat model.
Model unflatten(const FlatModel& flat);

// Largest integer bound appearing in any update rule after substitution.
std::int64_t max_constant(const Model& model, const Bindings& bindings = {});

// Resolves a property expression (invariant or LTL atom) against a flat model.
ExprPtr resolve_property_expr(const FlatModel& flat, const ExprPtr& e);

// Update rule in surface syntax, e.g. "in (2, 5]" or ">= 3 + w".
std::string render_flat_update(const FlatModel& flat, const FlatUpdate& u);

// Value of the `sender` identifier for a receive from flat process `p`.
std::int64_t sender_value(const FlatModel& flat, int p);

}  // namespace tocheck
