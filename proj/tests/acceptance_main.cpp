// Acceptance battery runner: one pass/fail line per criterion.
//
// Usage:
//   acceptance        runs all 11 criteria
//   acceptance N      runs criterion N only
//
// Exit code 0 when everything requested passed, 1 otherwise.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <ultradiff/checks.hpp>

int main(int argc, char** argv) {
  using ultradiff::CheckResult;
  try {
    std::vector<CheckResult> results;
    if (argc > 1) {
      results.push_back(ultradiff::run_acceptance_criterion(std::stoi(argv[1])));
    } else {
      results = ultradiff::run_acceptance();
    }
    bool all_passed = true;
    for (const CheckResult& r : results) {
      std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.details.c_str());
      all_passed = all_passed && r.passed;
    }
    return all_passed ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
