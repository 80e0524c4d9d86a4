// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include <iostream>

#include "adveig/acceptance.hpp"

int main() {
  std::cout << "acceptance criteria\n-------------------\n";
  const adveig::AcceptanceOutcome outcome = adveig::run_acceptance(std::cout);
  std::cout << "-------------------\n"
            << (outcome.all_pass ? "ALL CRITERIA PASSED" : "ACCEPTANCE FAILED")
            << "\n";
  return outcome.all_pass ? 0 : 1;
}
