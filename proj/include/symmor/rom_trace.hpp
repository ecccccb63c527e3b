#pragma once

#include <string>
#include <vector>

#include "symmor/numerics.hpp"

namespace symmor {

// Output of one reduced simulation. Entry k of the per-step vectors belongs
// to the step producing state k+1. A failed step ends the trace: the states
// computed so far are kept and converged is false.
struct RomTrace {
  std::string method;
  std::vector<Vector> reduced_states;
  std::vector<Vector> reconstructed;
  std::vector<std::vector<Vector>> stage_velocities;  // reduced w_{r,i}
  std::vector<int> iterations;
  std::vector<double> residual_norms;
  bool converged = true;
  int failed_step = -1;

  int steps() const { return static_cast<int>(reduced_states.size()) - 1; }
};

}  // namespace symmor
