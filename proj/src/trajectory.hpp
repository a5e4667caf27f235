#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "testfuncs.hpp"

namespace optlab {

enum class Termination { Stopped, MaxIters, Error };

std::string_view termination_name(Termination t);
Termination termination_from_name(std::string_view s);

// Loss curve plus bookkeeping for one optimization run.
// losses[0] is the initial value, so losses.size() == iterations() + 1.
struct Trajectory {
  std::vector<double> losses;
  std::vector<std::int64_t> evals_cum;  // cumulative evals, aligned to losses
  std::vector<Vec> iterates;            // recorded on request
  std::vector<Vec> steps;               // recorded on request
  std::int64_t func_evals = 0;
  Termination terminated_by = Termination::MaxIters;

  int iterations() const { return int(losses.size()) - 1; }
  double final_loss() const;
  double best_value() const;                 // min over the curve
  std::vector<double> best_so_far() const;   // non-increasing envelope
};

}  // namespace optlab
