#include <set>

#include "tocheck/dsl.hpp"

namespace tocheck {

namespace {

class ModelParser {
 public:
  ModelParser(std::string_view text, const std::string& file)
      : text_(text), toks_(tokenize(text, file)) {}

  ParseResult run() {
    Model m;
    while (peek().kind != Tok::End) {
      std::size_t start = pos_;
      try {
        top_statement(m);
      } catch (const ParseBail&) {
        synchronize(start);
      }
    }
    ParseResult r;
    r.errors = std::move(errors_);
    if (r.errors.empty()) r.model = std::move(m);
    return r;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t k = pos_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_kw(const char* kw, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == kw;
  }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    advance();
    return true;
  }
  bool accept_kw(const char* kw) {
    if (!is_kw(kw)) return false;
    advance();
    return true;
  }

  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& message) {
    const Token& t = peek();
    errors_.push_back(ParseError{t.span, std::move(expected),
                                 t.kind == Tok::End ? "end of input" : "'" + t.text + "'", message});
    throw ParseBail{};
  }
  void expect(Tok k, const std::string& where) {
    if (!accept(k)) fail({describe(k)}, "unexpected token in " + where);
  }
  void expect_kw(const char* kw, const std::string& where) {
    if (!accept_kw(kw)) fail({std::string("'") + kw + "'"}, "unexpected token in " + where);
  }
  std::string ident(const std::string& where) {
    if (peek().kind != Tok::Ident) fail({"identifier"}, "unexpected token in " + where);
    return advance().text;
  }

  ExprPtr expr() {
    ExprParser p(toks_, pos_, errors_);
    return p.parse();
  }
  ExprPtr additive_expr() {
    // Bounds inside `[a, b]` and `a..b` are parsed as full expressions; the
    // delimiters are never valid expression continuations.
    return expr();
  }

  // Rescans the failed statement from its first token and skips past its
  // terminating ';' (or closing brace for blocks), stopping early at an
  // unmatched '}' that belongs to the enclosing block.
  void synchronize(std::size_t start) {
    pos_ = start;
    const bool block = is_kw("process");
    int depth = 0;
    while (peek().kind != Tok::End) {
      Tok k = peek().kind;
      if (k == Tok::LBrace) {
        ++depth;
      } else if (k == Tok::RBrace) {
        if (depth == 0) break;
        if (--depth == 0 && block) {
          advance();
          return;
        }
      } else if (k == Tok::Semi && depth == 0) {
        advance();
        return;
      }
      advance();
    }
    if (pos_ == start) advance();
  }

  void end_statement(const std::string& where) { expect(Tok::Semi, where); }

  void top_statement(Model& m) {
    const Token& t = peek();
    if (t.kind == Tok::RBrace) {
      fail({"declaration"}, "unmatched '}'");
    }
    if (accept_kw("model")) {
      m.name = ident("model name");
      end_statement("model declaration");
    } else if (accept_kw("const")) {
      ConstDecl c;
      c.span = peek().span;
      c.name = ident("constant declaration");
      expect(Tok::Equals, "constant declaration");
      c.value = expr();
      end_statement("constant declaration");
      m.consts.push_back(std::move(c));
    } else if (accept_kw("max_timeout")) {
      m.max_timeout = expr();
      end_statement("max_timeout declaration");
    } else if (accept_kw("calendar")) {
      m.calendar_capacity = expr();
      end_statement("calendar declaration");
    } else if (accept_kw("option")) {
      std::string o = ident("option");
      if (o == "sync_eager") {
        m.sync_eager = true;
      } else {
        --pos_;
        fail({"'sync_eager'"}, "unknown option");
      }
      end_statement("option");
    } else if (is_kw("var")) {
      m.globals.push_back(var_decl());
    } else if (accept_kw("chan")) {
      name_list(m.channels, "channel declaration");
    } else if (accept_kw("message")) {
      name_list(m.messages, "message declaration");
    } else if (is_kw("process")) {
      m.processes.push_back(process());
    } else if (is_kw("invariant") || is_kw("ltl")) {
      m.properties.push_back(formula_property());
    } else if (is_kw("timeliness")) {
      m.properties.push_back(timeliness_property());
    } else {
      fail({"'const'", "'var'", "'chan'", "'message'", "'process'", "'max_timeout'", "'calendar'", "'option'",
            "'invariant'", "'ltl'", "'timeliness'", "'model'"},
           "expected a declaration");
    }
  }

  void name_list(std::vector<std::string>& out, const std::string& where) {
    do {
      out.push_back(ident(where));
    } while (accept(Tok::Comma));
    end_statement(where);
  }

  VarDecl var_decl() {
    expect_kw("var", "variable declaration");
    VarDecl v;
    v.span = peek().span;
    v.name = ident("variable declaration");
    expect(Tok::Colon, "variable declaration");
    expect(Tok::LBracket, "variable domain");
    v.lo = additive_expr();
    expect(Tok::Comma, "variable domain");
    v.hi = additive_expr();
    expect(Tok::RBracket, "variable domain");
    expect(Tok::Equals, "variable declaration");
    v.init = expr();
    end_statement("variable declaration");
    return v;
  }

  InitRange init_range(const std::string& where) {
    InitRange r;
    if (accept(Tok::Equals)) {
      r.lo = expr();
      r.hi = r.lo;
      return r;
    }
    expect_kw("in", where);
    r.lo = additive_expr();
    expect(Tok::DotDot, where);
    r.hi = additive_expr();
    return r;
  }

  PropertyDecl formula_property() {
    PropertyDecl p;
    p.kind = advance().text == "ltl" ? PropertyKind::Ltl : PropertyKind::Invariant;
    p.span = peek().span;
    p.name = ident("property declaration");
    expect(Tok::Colon, "property declaration");
    std::size_t first = pos_;
    int depth = 0;
    while (!(peek().kind == Tok::Semi && depth == 0)) {
      Tok k = peek().kind;
      if (k == Tok::End) fail({"';'"}, "unterminated property");
      if (k == Tok::LParen || k == Tok::LBrace) ++depth;
      if (k == Tok::RParen || k == Tok::RBrace) --depth;
      if (k == Tok::RBrace && depth < 0) fail({"';'"}, "unterminated property");
      advance();
    }
    if (pos_ == first) fail({"formula"}, "empty property");
    std::size_t begin = toks_[first].offset;
    std::size_t end = toks_[pos_ - 1].offset + toks_[pos_ - 1].size;
    p.formula = std::string(text_.substr(begin, end - begin));
    advance();  // ';'
    return p;
  }

  std::string flag_name() {
    std::string name = ident("timeliness flag");
    ExprPtr index;
    if (accept(Tok::LBracket)) {
      index = expr();
      expect(Tok::RBracket, "timeliness flag");
    }
    if (accept(Tok::Dot)) return render_expr(make_qualified_ref(name, index, ident("timeliness flag")));
    if (index) fail({"'.'"}, "timeliness flag must name a variable");
    return name;
  }

  PropertyDecl timeliness_property() {
    advance();
    PropertyDecl p;
    p.kind = PropertyKind::Timeliness;
    p.span = peek().span;
    p.name = ident("property declaration");
    expect(Tok::Colon, "property declaration");
    p.flag1 = flag_name();
    expect(Tok::Comma, "timeliness property");
    p.flag2 = flag_name();
    expect(Tok::Le, "timeliness property");
    p.bound = expr();
    end_statement("timeliness property");
    return p;
  }

  ProcessTemplate process() {
    expect_kw("process", "process declaration");
    ProcessTemplate pt;
    pt.span = peek().span;
    pt.name = ident("process declaration");
    if (accept(Tok::LParen)) {
      pt.param = ident("process parameter");
      expect(Tok::Colon, "process parameter");
      pt.count = ident("process family size");
      expect(Tok::RParen, "process parameter");
    }
    expect(Tok::LBrace, "process declaration");
    while (peek().kind != Tok::RBrace) {
      if (peek().kind == Tok::End) fail({"'}'"}, "unterminated process block");
      std::size_t start = pos_;
      try {
        process_statement(pt);
      } catch (const ParseBail&) {
        synchronize(start);
      }
    }
    advance();
    if (pt.entry.empty() && !pt.locations.empty()) pt.entry = pt.locations.front().id;
    split_timing_bases(pt);
    return pt;
  }

  void process_statement(ProcessTemplate& pt) {
    // Edges first, so that a location may be called `init` or `var`.
    if (peek().kind == Tok::Ident && peek(1).kind == Tok::Arrow) {
      pt.edges.push_back(edge());
    } else if (accept_kw("location")) {
      do {
        Location l;
        l.span = peek().span;
        l.id = ident("location declaration");
        if (accept_kw("urgent")) {
          l.kind = LocationKind::Urgent;
        } else if (accept_kw("committed")) {
          l.kind = LocationKind::Committed;
        }
        if (accept_kw("immediate")) l.zero_delay = true;
        pt.locations.push_back(std::move(l));
      } while (accept(Tok::Comma));
      end_statement("location declaration");
    } else if (accept_kw("entry")) {
      pt.entry = ident("entry declaration");
      end_statement("entry declaration");
    } else if (is_kw("var")) {
      pt.locals.push_back(var_decl());
    } else if (accept_kw("timing")) {
      TimingDecl td;
      td.span = peek().span;
      td.name = ident("timing variable declaration");
      if (peek().kind == Tok::Semi) {
        td.init_lo = td.init_hi = make_const(0);
      } else {
        InitRange r = init_range("timing variable declaration");
        td.init_lo = r.lo;
        td.init_hi = r.hi;
      }
      end_statement("timing variable declaration");
      pt.timing_vars.push_back(std::move(td));
    } else if (accept_kw("init")) {
      std::string what = ident("init declaration");
      InitRange r = init_range("init declaration");
      if (what == "timeout") {
        pt.init.timeout = r;
      } else {
        pt.init.locals.emplace_back(what, r);
      }
      end_statement("init declaration");
    } else {
      fail({"'location'", "'entry'", "'var'", "'timing'", "'init'", "edge"}, "expected a process member");
    }
  }

  ProcRef proc_ref(bool allow_any) {
    ProcRef r;
    if (allow_any && accept(Tok::Star)) {
      r.any = true;
      return r;
    }
    if (accept_kw("others")) {
      r.others = true;
      return r;
    }
    r.name = ident("process reference");
    if (accept(Tok::LBracket)) {
      r.index = expr();
      expect(Tok::RBracket, "process reference");
    }
    return r;
  }

  Edge edge() {
    Edge e;
    e.span = peek().span;
    e.source = advance().text;
    advance();  // ->
    e.target = ident("edge target");
    if (accept_kw("when")) e.guard = expr();
    if (accept_kw("sync")) {
      e.channel = ident("sync label");
      if (accept(Tok::Bang)) {
        e.kind = EdgeKind::SyncSend;
        if (!is_kw("update")) e.payload = expr();
      } else if (accept(Tok::Question)) {
        e.kind = EdgeKind::SyncRecv;
        if (peek().kind == Tok::Ident && !is_kw("update")) e.payload_var = advance().text;
      } else {
        fail({"'!'", "'?'"}, "sync label needs a direction");
      }
    } else if (accept_kw("send")) {
      e.kind = EdgeKind::CalSend;
      e.channel = ident("send label");
      expect_kw("to", "send label");
      expect(Tok::LBrace, "send targets");
      do {
        expect(Tok::LParen, "send target");
        SendTarget st;
        st.receiver = proc_ref(false);
        expect(Tok::Comma, "send target");
        st.delay = expr();
        expect(Tok::RParen, "send target");
        e.targets.push_back(std::move(st));
      } while (accept(Tok::Comma));
      expect(Tok::RBrace, "send targets");
    } else if (accept_kw("recv")) {
      e.kind = EdgeKind::CalRecv;
      e.channel = ident("receive label");
      expect_kw("from", "receive label");
      e.from = proc_ref(true);
    }
    expect_kw("update", "edge");
    e.update = update_rule();
    if (accept_kw("capture")) {
      expect(Tok::LBrace, "capture list");
      if (peek().kind != Tok::RBrace) {
        do {
          e.capture.push_back(ident("capture list"));
        } while (accept(Tok::Comma));
      }
      expect(Tok::RBrace, "capture list");
    }
    if (accept_kw("do")) {
      expect(Tok::LBrace, "assignment block");
      while (peek().kind != Tok::RBrace) {
        Assignment a;
        a.var = ident("assignment");
        expect(Tok::Assign, "assignment");
        a.value = expr();
        e.assign.push_back(std::move(a));
        if (!accept(Tok::Semi)) break;
      }
      expect(Tok::RBrace, "assignment block");
    }
    end_statement("edge");
    return e;
  }

  UpdateRule update_rule() {
    UpdateRule r;
    if (accept_kw("inf")) {
      r.kind = UpdateRule::Kind::Infinity;
    } else if (accept_kw("maxM")) {
      r.kind = UpdateRule::Kind::MaxM;
    } else if (accept_kw("in")) {
      r.kind = UpdateRule::Kind::Interval;
      if (accept(Tok::LParen)) {
        r.lo_strict = true;
      } else {
        expect(Tok::LBracket, "interval");
      }
      r.lo = additive_expr();
      expect(Tok::Comma, "interval");
      r.hi = additive_expr();
      if (accept(Tok::RParen)) {
        r.hi_strict = true;
      } else {
        expect(Tok::RBracket, "interval");
      }
    } else if (accept(Tok::Gt)) {
      r.kind = UpdateRule::Kind::LowerBound;
      r.lo_strict = true;
      r.lo = additive_expr();
    } else if (accept(Tok::Ge)) {
      r.kind = UpdateRule::Kind::LowerBound;
      r.lo = additive_expr();
    } else {
      fail({"'in'", "'>'", "'>='", "'inf'", "'maxM'"}, "expected an update rule");
    }
    return r;
  }

  // `l + w` in a bound means "l plus the value of timing variable w".
  static void split_bound(ExprPtr& bound, std::string& base, const std::set<std::string>& timing) {
    if (!bound) return;
    if (bound->op == Op::Ref && bound->qualifier.empty() && timing.count(bound->name)) {
      base = bound->name;
      bound = make_const(0);
    } else if (bound->op == Op::Add && bound->args[1]->op == Op::Ref && bound->args[1]->qualifier.empty() &&
               timing.count(bound->args[1]->name)) {
      base = bound->args[1]->name;
      bound = bound->args[0];
    }
  }

  static void split_timing_bases(ProcessTemplate& pt) {
    std::set<std::string> timing;
    for (const auto& t : pt.timing_vars) timing.insert(t.name);
    if (timing.empty()) return;
    for (auto& e : pt.edges) {
      split_bound(e.update.lo, e.update.lo_base, timing);
      split_bound(e.update.hi, e.update.hi_base, timing);
    }
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ParseError> errors_;
};

}  // namespace

ParseResult parse_model(std::string_view text, const std::string& file) {
  return ModelParser(text, file).run();
}

}  // namespace tocheck
