#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bandbridge::selftest {

struct CheckLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckLine> gradient_checks(std::size_t instances = 20);
std::vector<CheckLine> metric_checks();
std::vector<CheckLine> bicubic_checks();

// Runs all three groups, printing one PASS/FAIL line per check. Returns
// true when everything passed.
bool run_selftest(std::ostream& out);

}  // namespace bandbridge::selftest
