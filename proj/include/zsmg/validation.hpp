#pragma once

#include <string>
#include <vector>

namespace zsmg {

// Outcome of a structural check. Violations make the report invalid;
// informational notes (derived constants, certified bounds) ride along
// without affecting validity.
struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> info;

  bool valid() const { return violations.empty(); }

  void fail(std::string msg) { violations.push_back(std::move(msg)); }
  void note(std::string msg) { info.push_back(std::move(msg)); }

  std::string notes() const {
    std::string out;
    for (const auto& v : violations) {
      out += v;
      out += '\n';
    }
    for (const auto& n : info) {
      out += n;
      out += '\n';
    }
    return out;
  }
};

}  // namespace zsmg
