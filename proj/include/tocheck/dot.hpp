#pragma once

#include <string>

#include "tocheck/checker.hpp"
#include "tocheck/model.hpp"

namespace tocheck {

// Graphviz text. Without `reachable`, one cluster per process showing its
// timeout transition diagram; with it, the explored clockless state graph
// (subject to the state cap in `opts`).
std::string export_dot(const FlatModel& fm, bool reachable, const CheckOptions& opts = {});

}  // namespace tocheck
