#pragma once

#include <string>
#include <vector>

#include "tocheck/model.hpp"

namespace tocheck::testing {

std::string read_file(const std::string& path);

// Parses a model file, throwing std::runtime_error with the formatted errors.
Model load_model(const std::string& path);
FlatModel load_flat(const std::string& path, const Bindings& bindings = {});
FlatModel flat_from_text(const std::string& text, const Bindings& bindings = {});

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

// Runs the command-line front end in process.
CliRun run(const std::vector<std::string>& args);

}  // namespace tocheck::testing
