#ifndef WOESB_BINNING_HPP
#define WOESB_BINNING_HPP

#include <span>
#include <string>
#include <vector>

namespace woesb::binning {

enum class StepMode { constrained, unconstrained };

// Step-function approximation of a fitted smooth term.
//
// constrained: bins are intervals of the x axis. For the acyclic case there
// are K-1 interior breakpoints; interval i carries values[i]. For the cyclic
// case there are K breakpoints on the circle and interval i runs from
// breakpoints[i] to the next one, the last wrapping through the period.
//
// unconstrained: bins live in the fitted-value (z) space; z_edges are the
// K-1 boundaries between adjacent bins, placed midway between the extreme
// training members of neighboring bins so that every training point maps
// back to its own bin.
struct StepFunction {
  StepMode mode = StepMode::unconstrained;
  std::string source;  // name of the smooth term this step approximates
  int K = 0;
  std::vector<double> values;       // K bin values (weighted means)
  std::vector<double> breakpoints;  // constrained only
  std::vector<double> z_edges;      // unconstrained only
  bool cyclic = false;
  double period = 0.0;
};

// Discretizes (x, z, var) triples into at most k bins, weighting each point
// by the inverse of its variance (normalized to sum to n).
StepFunction bin_smooth(std::span<const double> x, std::span<const double> z,
                        std::span<const double> var, StepMode mode, int k,
                        bool cyclic = false, double period = 0.0,
                        std::string source = {});

// Maps new data through the step function. Unconstrained mode reads z_new
// (the stored smooth evaluated at x_new); constrained mode reads x_new.
std::vector<double> apply_step(const StepFunction& step,
                               std::span<const double> x_new,
                               std::span<const double> z_new = {});

// Optimal step-function wcss for every bin count 1..kmax (clamped to the
// number of distinct values or positions), index k-1, with exactly the
// weighting and duplicate handling of bin_smooth. Lets a lambda sweep pick k
// without re-running the dynamic program per candidate.
std::vector<double> bin_profile(std::span<const double> x,
                                std::span<const double> z,
                                std::span<const double> var, StepMode mode,
                                int kmax, bool cyclic = false,
                                double period = 0.0);

}  // namespace woesb::binning

#endif
