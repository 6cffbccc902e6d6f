// Certification gate: runs every primary acceptance criterion at its stated
// tolerance and prints exactly one [PASS]/[FAIL] line per criterion.
#include <cstdio>
#include <functional>
#include <vector>

#include "polydiff/checks.hpp"
#include "polydiff/runner.hpp"

int main() {
  using polydiff::CheckResult;
  const int threads = polydiff::resolve_threads(0);
  const std::vector<std::function<CheckResult()>> suite = {
      [] { return polydiff::check_calculus_identities(); },
      [] { return polydiff::check_negative_norm_value(); },
      [] { return polydiff::check_mms_convergence(); },
      [] { return polydiff::check_stress_oracle(); },
      [=] { return polydiff::check_dissipation_estimate(threads); },
      [=] { return polydiff::check_continuous_dependence(threads); },
      [] { return polydiff::check_shift_semigroup(); },
      [=] { return polydiff::check_attraction(threads); },
      [] { return polydiff::check_rest_states(); },
      [] { return polydiff::check_output_determinism(); },
  };

  int failures = 0;
  for (const auto& fn : suite) {
    CheckResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.name = "criterion check";
      r.ok = false;
      r.detail = std::string("unexpected exception: ") + e.what();
    }
    std::printf("[%s] %s - %s\n", r.ok ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
    if (!r.ok) ++failures;
  }
  if (failures) std::printf("%d criterion check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
