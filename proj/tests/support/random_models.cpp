#include "random_models.hpp"

#include <fmt/format.h>

#include "support.hpp"
#include "tocheck/clocked.hpp"

namespace tocheck::testing {

namespace {

struct Gen {
  Rng rng;
  std::int64_t M = 1;
  bool global = false;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::int64_t pick(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  bool coin(unsigned in = 2) { return rng.below(in) == 0; }

  std::string update() {
    switch (rng.below(7)) {
      case 0: {
        const auto a = pick(1, M), b = pick(a, M);
        return fmt::format("in [{}, {}]", a, b);
      }
      case 1: {
        const auto a = pick(0, M - 1), b = pick(a + 1, M);
        return fmt::format("in ({}, {}]", a, b);
      }
      case 2: {
        if (M < 2) return "in [1, 1]";
        const auto a = pick(1, M - 1), b = pick(a + 1, M);
        return fmt::format("in [{}, {})", a, b);
      }
      case 3:
        return fmt::format(">= {}", pick(1, M));
      case 4:
        return fmt::format("> {}", pick(0, M - 1));
      case 5:
        return "inf";
      default:
        return "maxM";
    }
  }

  std::string guard() {
    if (!global || !coin(3)) return "";
    return fmt::format(" when g {} {}", coin() ? "==" : "!=", pick(0, 2));
  }

  std::string assign() {
    if (!global || !coin(3)) return "";
    if (coin()) return " do { g := (g + 1) % 3 }";
    return fmt::format(" do {{ g := {} }}", pick(0, 2));
  }
};

}  // namespace

std::string random_model_text(std::uint64_t seed) {
  Gen g(seed);
  g.M = g.pick(1, 5);
  const int nproc = static_cast<int>(g.pick(1, 3));
  std::vector<int> nloc;
  for (int p = 0; p < nproc; ++p) nloc.push_back(static_cast<int>(g.pick(1, 3)));
  g.global = g.coin();
  const bool sync = nproc > 1 && g.coin();
  const bool cal = nproc > 1 && g.coin();

  std::vector<std::vector<std::string>> edges(static_cast<std::size_t>(nproc));
  auto loc = [&](int p) { return fmt::format("l{}", g.pick(0, nloc[static_cast<std::size_t>(p)] - 1)); };
  for (int p = 0; p < nproc; ++p)
    for (int l = 0; l < nloc[static_cast<std::size_t>(p)]; ++l) {
      const int n = static_cast<int>(g.pick(1, 2));
      for (int k = 0; k < n; ++k)
        edges[static_cast<std::size_t>(p)].push_back(
            fmt::format("l{} -> {}{} update {}{};", l, loc(p), g.guard(), g.update(), g.assign()));
    }
  if (sync) {
    const int s = static_cast<int>(g.pick(0, nproc - 1));
    int r = static_cast<int>(g.pick(0, nproc - 2));
    if (r >= s) ++r;
    edges[static_cast<std::size_t>(s)].push_back(
        fmt::format("{} -> {}{} sync c! update {}{};", loc(s), loc(s), g.guard(), g.update(), g.assign()));
    const int n = static_cast<int>(g.pick(1, 2));
    for (int k = 0; k < n; ++k)
      edges[static_cast<std::size_t>(r)].push_back(
          fmt::format("{} -> {} sync c? update {}{};", loc(r), loc(r), g.update(), g.assign()));
  }
  if (cal) {
    const int s = static_cast<int>(g.pick(0, nproc - 1));
    int r = static_cast<int>(g.pick(0, nproc - 2));
    if (r >= s) ++r;
    edges[static_cast<std::size_t>(s)].push_back(fmt::format("{} -> {}{} send m to {{(P{}, {})}} update {};", loc(s),
                                                             loc(s), g.guard(), r, g.pick(1, g.M), g.update()));
    for (int l = 0; l < nloc[static_cast<std::size_t>(r)]; ++l)
      edges[static_cast<std::size_t>(r)].push_back(
          fmt::format("l{} -> {} recv m from * update {}{};", l, loc(r), g.update(), g.assign()));
  }

  std::string out = fmt::format("model random_{};\n\nmax_timeout {};\n", seed, g.M);
  if (g.global) out += "var g : [0, 2] = 0;\n";
  if (sync) out += "chan c;\n";
  if (cal) out += fmt::format("calendar {};\nmessage m;\n", nproc * nproc * (g.M + 1));
  for (int p = 0; p < nproc; ++p) {
    out += fmt::format("\nprocess P{} {{\n  location", p);
    for (int l = 0; l < nloc[static_cast<std::size_t>(p)]; ++l) out += fmt::format("{} l{}", l ? "," : "", l);
    out += ";\n  entry l0;\n";
    const auto a = g.pick(1, g.M), b = g.pick(a, g.M);
    out += a == b ? fmt::format("  init timeout = {};\n", a) : fmt::format("  init timeout in {}..{};\n", a, b);
    for (const auto& e : edges[static_cast<std::size_t>(p)]) out += "  " + e + "\n";
    out += "}\n";
  }
  return out;
}

RandomModel random_model(std::uint64_t seed) {
  for (std::uint64_t s = seed;; s += 1000003) {
    RandomModel r;
    r.seed = s;
    r.text = random_model_text(s);
    try {
      r.flat = flat_from_text(r.text);
      return r;
    } catch (const FlattenError&) {
    }
  }
}

}  // namespace tocheck::testing
