#include "trajectory.hpp"

#include <algorithm>

#include "status.hpp"

namespace optlab {

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::Stopped: return "stopped";
    case Termination::MaxIters: return "max_iters";
    case Termination::Error: return "error";
  }
  fail(Status::InternalError, "termination_name: bad value");
}

Termination termination_from_name(std::string_view s) {
  if (s == "stopped") return Termination::Stopped;
  if (s == "max_iters") return Termination::MaxIters;
  if (s == "error") return Termination::Error;
  fail(Status::ArgumentError, "unknown termination '" + std::string(s) + "'");
}

double Trajectory::final_loss() const {
  require(!losses.empty(), Status::ArgumentError, "trajectory: empty");
  return losses.back();
}

double Trajectory::best_value() const {
  require(!losses.empty(), Status::ArgumentError, "trajectory: empty");
  return *std::min_element(losses.begin(), losses.end());
}

std::vector<double> Trajectory::best_so_far() const {
  std::vector<double> out(losses.size());
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < losses.size(); ++i) {
    best = std::min(best, losses[i]);
    out[i] = best;
  }
  return out;
}

}  // namespace optlab
