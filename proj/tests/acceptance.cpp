// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Usage: acceptance [work_dir] [--skip-training]

#include <cstring>
#include <iostream>

#include "thermalsplat/verify/criteria.hpp"

int main(int argc, char** argv) {
  thermalsplat::verify::SuiteOptions o;
  o.work_dir = "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--skip-training") == 0) o.training = false;
    else o.work_dir = argv[i];
  }
  int passed = 0, total = 0;
  const bool ok = thermalsplat::verify::run_acceptance(o, [&](const thermalsplat::verify::CriterionResult& r) {
    ++total;
    passed += r.passed;
    std::cout << thermalsplat::verify::format_result(r) << std::endl;
  });
  std::cout << passed << "/" << total << " criteria passed\n";
  return ok ? 0 : 1;
}
