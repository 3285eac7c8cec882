#pragma once

#include <string>
#include <vector>

namespace mcrf {

// One verification record: an inequality (or match) lhs <= rhs + tolerance
// tied to the statement it certifies.
struct CheckRecord {
  std::string check_id;
  std::string anchor;  // which statement this check certifies
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  static CheckRecord leq(std::string id, std::string anchor, double lhs, double rhs, double tol) {
    CheckRecord r{std::move(id), std::move(anchor), lhs, rhs, tol, lhs <= rhs + tol};
    return r;
  }
};

using CheckList = std::vector<CheckRecord>;

}  // namespace mcrf
