#include <gtest/gtest.h>

#include "support.hpp"
#include "tocheck/dsl.hpp"
#include "tocheck/expr.hpp"
#include "tocheck/model.hpp"

using namespace tocheck;
using tocheck::testing::load_model;
using tocheck::testing::read_file;

namespace {

const std::string kModels = TOCHECK_MODELS_DIR;

Model parse_ok(const std::string& text) {
  ParseResult r = parse_model(text, "t.ttm");
  EXPECT_TRUE(r.errors.empty()) << (r.errors.empty() ? "" : format_parse_error(r.errors.front()));
  EXPECT_TRUE(r.model.has_value());
  return r.model ? *r.model : Model{};
}

const char* kMinimal = R"(model tiny;
max_timeout 3;
process P {
  location a;
  entry a;
  a -> a update in [1, 3];
}
)";

}  // namespace

TEST(Expr, ArithmeticAndPrecedence) {
  auto r = parse_expression("1 + 2 * 3 - 4 % 3");
  ASSERT_TRUE(r.errors.empty());
  EXPECT_EQ(eval_constant(*r.expr), 6);
  r = parse_expression("(1 + 2) * 3");
  EXPECT_EQ(eval_constant(*r.expr), 9);
  r = parse_expression("max(2, 7) - min(4, 1)");
  EXPECT_EQ(eval_constant(*r.expr), 6);
  r = parse_expression("3 < 4 && !(2 == 3)");
  EXPECT_EQ(eval_constant(*r.expr), 1);
}

TEST(Expr, RenderRoundTrip) {
  for (const char* text : {"a + b * c", "(a + b) * c", "a - (b - c)", "!(x == 1) || y != 2", "x % 3 + 1 <= y"}) {
    auto r = parse_expression(text);
    ASSERT_TRUE(r.errors.empty()) << text;
    auto again = parse_expression(render_expr(r.expr));
    ASSERT_TRUE(again.errors.empty()) << render_expr(r.expr);
    EXPECT_TRUE(expr_equal(r.expr, again.expr)) << text << " vs " << render_expr(r.expr);
  }
}

TEST(Expr, MalformedReportsPosition) {
  auto r = parse_expression("1 + * 2");
  ASSERT_FALSE(r.errors.empty());
  EXPECT_EQ(r.errors.front().span.col, 5u);
}

TEST(Dsl, MinimalModelStructure) {
  Model m = parse_ok(kMinimal);
  ASSERT_EQ(m.processes.size(), 1u);
  EXPECT_EQ(m.processes[0].edges.size(), 1u);
  EXPECT_EQ(m.processes[0].entry, "a");
}

TEST(Dsl, HalfOpenIntervalMapsToStrictLowerBound) {
  Model m = parse_ok(R"(model t; max_timeout 5;
process P { location a; entry a; a -> a update in (2, 5]; })");
  const UpdateRule& u = m.processes[0].edges[0].update;
  EXPECT_EQ(u.kind, UpdateRule::Kind::Interval);
  EXPECT_TRUE(u.lo_strict);
  EXPECT_FALSE(u.hi_strict);
  EXPECT_EQ(eval_constant(*u.lo), 2);
  EXPECT_EQ(eval_constant(*u.hi), 5);
}

TEST(Dsl, EmptyIntervalIsRejected) {
  Model m = parse_ok(R"(model t; max_timeout 5;
process P { location a; entry a; a -> a update in (5, 2]; })");
  auto diags = validate(m);
  ASSERT_TRUE(has_errors(diags));
  EXPECT_NE(diags.front().message.find("admits no increment"), std::string::npos);
}

TEST(Dsl, ErrorRecoveryReportsSeveralErrors) {
  ParseResult r = parse_model(R"(model t;
max_timeout ;
process P {
  location a;
  entry a;
  a -> a update in [1, ;
  a -> a update >= 1;
}
)",
                              "bad.ttm");
  EXPECT_FALSE(r.model.has_value());
  ASSERT_GE(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0].span.line, 2u);
  EXPECT_EQ(r.errors[1].span.line, 6u);
  EXPECT_EQ(r.errors[0].span.file, "bad.ttm");
}

TEST(Dsl, RoundTripBundledModels) {
  for (const char* name : {"fischer", "tgc", "tta", "fractional"}) {
    Model m = load_model(kModels + "/" + name + ".ttm");
    const std::string text = render(m);
    Model again = parse_ok(text);
    EXPECT_TRUE(m == again) << name << "\n" << text;
    EXPECT_EQ(render(again), text) << name;
  }
}

TEST(Dsl, RoundTripAllUpdateVariants) {
  Model m = parse_ok(R"(model t; max_timeout 6;
process P {
  location a, b;
  entry a;
  timing w = 0;
  a -> b update in [1, 3) capture {w};
  b -> a update >= 2;
  a -> a update > 1 + w;
  b -> b update inf;
  a -> b update maxM;
})");
  Model again = parse_ok(render(m));
  EXPECT_TRUE(m == again) << render(m);
  std::vector<UpdateRule::Kind> kinds;
  for (const auto& e : again.processes[0].edges) kinds.push_back(e.update.kind);
  EXPECT_EQ(kinds, (std::vector<UpdateRule::Kind>{UpdateRule::Kind::Interval, UpdateRule::Kind::LowerBound,
                                                  UpdateRule::Kind::LowerBound, UpdateRule::Kind::Infinity,
                                                  UpdateRule::Kind::MaxM}));
  EXPECT_EQ(again.processes[0].edges[2].update.lo_base, "w");
}

TEST(Dsl, EmptyProcessRoundTrips) {
  Model m = parse_ok("model e; max_timeout 1; process P { location a; entry a; }");
  Model again = parse_ok(render(m));
  EXPECT_TRUE(m == again);
}

TEST(Dsl, LocationMayUseKeywordName) {
  Model m = parse_ok(R"(model t; max_timeout 2;
process P { location init, var; entry init; init -> var update in [1, 2]; var -> init update maxM; })");
  EXPECT_EQ(m.processes[0].edges.size(), 2u);
}

TEST(Dsl, RenderIsStable) {
  const std::string text = read_file(kModels + "/fischer.ttm");
  Model a = parse_ok(text), b = parse_ok(text);
  EXPECT_EQ(render(a), render(b));
}
