#pragma once

// Self-checks bundled with the CLI: each suite exercises one guarantee of the
// library on freshly drawn random inputs and reports pass/fail.

#include <cstdint>
#include <string>
#include <vector>

#include "renpol/rollout.hpp"

namespace renpol::verify {

struct Options {
  std::uint64_t seed = 0;
  bool break_lmi = false;  // perturb A after assembly; the LMI suite must then fail
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SuiteResult> run_all(const Options& options);

SuiteResult lmi_suite(const Options& options);
SuiteResult bijection_suite(const Options& options);
SuiteResult contraction_suite(const Options& options);
SuiteResult gradient_suite(const Options& options);
SuiteResult dtw_suite(const Options& options);
SuiteResult lemma_suite(const Options& options);

// Minimum squared-Euclidean alignment cost over every monotone warping path,
// by exhaustive enumeration. Exponential; meant for lengths up to ~8.
double dtw_brute_force(const rollout::Trajectory& a, const rollout::Trajectory& b);

}  // namespace renpol::verify
