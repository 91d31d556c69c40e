// Acceptance suite runner: one PASS/FAIL line per criterion with the
// sub-check transcript.  Exit code 0 when all criteria pass; with
// --known-failures-ok, exit 0 when the verdict matrix matches the
// documented expected profile (criterion 6 red on its tail sub-check, see
// the inline note there; everything else green).

#include <cstring>
#include <iostream>

#include "rtldp/acceptance.hpp"

int main(int argc, char** argv) {
  double scale = 1.0;
  uint64_t seed = 20250809;
  bool known_ok = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--known-failures-ok") == 0) known_ok = true;
    if (std::strcmp(argv[i], "--tolerance-scale") == 0 && i + 1 < argc)
      scale = std::atof(argv[++i]);
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
      seed = std::strtoull(argv[++i], nullptr, 10);
  }
  auto results = rtldp::run_acceptance(scale, seed, &std::cout);
  int passed = 0;
  for (const auto& r : results) passed += r.pass ? 1 : 0;
  std::cout << passed << "/" << results.size() << " criteria passed\n";
  if (known_ok) {
    bool ok = rtldp::acceptance_matches_expected(results);
    std::cout << (ok ? "verdicts match the documented expected profile\n"
                     : "verdicts DIVERGE from the documented expected profile\n");
    return ok ? 0 : 1;
  }
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}
