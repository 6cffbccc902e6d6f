#pragma once

#include <string>
#include <vector>

namespace polydiff {

/// Outcome of one certification check. `detail` is a short human-readable
/// account of the measured quantities (shown next to the pass/fail line).
struct CheckResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

// The certification suite. Each function is self-contained: it builds its own
// grids, operators and ensembles at the standard desk scale (1D n = 128,
// 2D 32x32) and returns a single verdict. Ensemble-heavy checks accept a
// worker-thread count; results never depend on it.

CheckResult check_calculus_identities();        // duality, Friedrichs, norms
CheckResult check_negative_norm_value();        // ||sin(pi x)||_{ -1 } -> 1/(pi sqrt 2)
CheckResult check_mms_convergence();            // spatial + temporal orders
CheckResult check_stress_oracle();              // pointwise stress vs closed form + bounds
CheckResult check_dissipation_estimate(int threads = 1);  // two-phase energy bound
CheckResult check_continuous_dependence(int threads = 1); // Gronwall pairs
CheckResult check_shift_semigroup();            // shift laws + determinism
CheckResult check_attraction(int threads = 1);  // attraction functional decay
CheckResult check_rest_states();                // exact zero preservation / lift
CheckResult check_output_determinism();         // byte-identical artifacts

}  // namespace polydiff
