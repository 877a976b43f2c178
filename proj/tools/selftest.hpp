#pragma once

#include <iosfwd>
#include <string>

namespace e2x::cli {

/// Gradient checks, Shapley axioms and the Kernel SHAP equivalence on small
/// built-in models (plus a gradient check of `model_path` when given).
/// Prints one PASS/FAIL line per check; true when all pass.
bool run_selftest(std::ostream& out, const std::string& model_path = "");

}  // namespace e2x::cli
