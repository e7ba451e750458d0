#include "support.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tocheck/cli.hpp"
#include "tocheck/dsl.hpp"

namespace tocheck::testing {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

Model parse_or_throw(const std::string& text, const std::string& file) {
  ParseResult r = parse_model(text, file);
  if (!r.model) {
    std::string msg;
    for (const auto& e : r.errors) msg += format_parse_error(e) + "\n";
    throw std::runtime_error(msg);
  }
  return std::move(*r.model);
}

}  // namespace

Model load_model(const std::string& path) { return parse_or_throw(read_file(path), path); }

FlatModel load_flat(const std::string& path, const Bindings& bindings) { return flatten(load_model(path), bindings); }

FlatModel flat_from_text(const std::string& text, const Bindings& bindings) {
  return flatten(parse_or_throw(text, "<text>"), bindings);
}

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace tocheck::testing
