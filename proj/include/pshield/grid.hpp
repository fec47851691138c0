#pragma once

// Exhaustive search over scalar parameters that enter a program bilinearly.

#include <functional>
#include <string>
#include <vector>

#include "pshield/sdp.hpp"

namespace pshield::sdp {

using GridPoint = std::vector<double>;

struct GridSpec {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // one finite set per name, inside (0,1)
  int refinement_rounds = 1;
  /// Optional base spacing per axis for refinement; defaults to the smallest
  /// gap within each value set.
  std::vector<double> spacing;

  /// Throws ParameterError when a value lies outside (0,1) or a set is empty.
  void validate() const;
  std::size_t size() const;
};

/// {first, first + step, ...} up to `last` (inclusive within rounding).
std::vector<double> linspace_step(double first, double last, double step);

struct GridResult {
  bool feasible = false;
  GridPoint point;
  LmiProgram program;  // program built at `point`
  SdpSolution solution;
  std::size_t evaluated = 0;
  std::size_t feasible_count = 0;
  /// Smallest phase-I shift seen over infeasible points (aggregate report).
  double best_infeasibility = std::numeric_limits<double>::infinity();
  GridPoint best_infeasible_point;
};

using ProgramBuilder = std::function<LmiProgram(const GridPoint&)>;

/// Worker count: hardware concurrency, capped by PLATOON_SHIELD_THREADS.
int default_threads();

/// Solves the program at every grid point, keeps the lowest objective (ties:
/// lexicographically smallest point), then refines around the winner, halving
/// the spacing each round. Points outside (0,1) are skipped during refinement.
GridResult grid_search(const ProgramBuilder& builder, const GridSpec& grid,
                       const SolverOptions& options = {}, int threads = default_threads());

/// Evaluates an explicit list of points with the same selection rule.
GridResult search_points(const ProgramBuilder& builder, const std::vector<GridPoint>& points,
                         const SolverOptions& options, int threads);

}  // namespace pshield::sdp
