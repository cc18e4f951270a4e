#include <iostream>

#include "rankone/selfcheck.hpp"

// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
int main() {
  bool ok = true;
  rankone::run_all_checks(rankone::CheckSizes::full(), 1, std::string(RANKONE_TEST_DATA) + "/golden",
                          [&](const rankone::CheckResult& r) {
                            std::cout << rankone::format_check(r) << std::endl;
                            ok = ok && r.pass;
                          });
  return ok ? 0 : 1;
}
