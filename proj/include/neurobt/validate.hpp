#pragma once

#include <string>
#include <vector>

namespace neurobt {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // measured values, and every failed expectation
  double ms = 0;
};

struct AcceptanceOptions {
  bool fast = true;            // criteria 1-6, 10
  bool slow = true;            // criteria 7-9 (long simulations)
  std::vector<int> criteria;   // non-empty: run exactly these ids instead
  int threads = 4;
};

// The built-in acceptance suite: detection targets, spectrum and normal-form
// identities, branch events, excitability classes, synchronization transition,
// rate monotonicity, and derivative consistency, with pinned tolerances.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

}  // namespace neurobt
