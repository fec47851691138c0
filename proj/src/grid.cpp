#include "pshield/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <thread>

#include "pshield/errors.hpp"

namespace pshield::sdp {

void GridSpec::validate() const {
  if (names.size() != values.size()) throw ParameterError("grid: one value set per name");
  if (names.empty()) throw ParameterError("grid: no parameters");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (values[i].empty()) throw ParameterError("grid: empty set for " + names[i]);
    for (double v : values[i]) {
      if (!(v > 0.0 && v < 1.0)) {
        throw ParameterError("grid: " + names[i] + " value outside (0,1)");
      }
    }
  }
  if (refinement_rounds < 0) throw ParameterError("grid: negative refinement rounds");
  if (!spacing.empty() && spacing.size() != names.size()) {
    throw ParameterError("grid: one spacing per name");
  }
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& v : values) n *= v.size();
  return n;
}

std::vector<double> linspace_step(double first, double last, double step) {
  if (!(step > 0.0)) throw ParameterError("grid step must be positive");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((last - first) / step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    // round to 12 digits so 0.1 + 2*0.05 prints and compares cleanly
    out.push_back(std::round((first + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return out;
}

int default_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("PLATOON_SHIELD_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

namespace {

struct Outcome {
  GridPoint point;
  std::optional<LmiProgram> program;
  SdpSolution solution;
};

bool better(const Outcome& a, const Outcome& b) {
  if (a.solution.objective != b.solution.objective) {
    return a.solution.objective < b.solution.objective;
  }
  return a.point < b.point;
}

std::vector<Outcome> evaluate_all(const ProgramBuilder& builder,
                                  const std::vector<GridPoint>& points,
                                  const SolverOptions& options, int threads) {
  std::vector<Outcome> out(points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      LmiProgram prog = builder(points[i]);
      out[i].point = points[i];
      out[i].solution = solve(prog, options);
      if (out[i].solution.ok()) out[i].program = std::move(prog);
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
  }
  return out;
}

void absorb(GridResult& res, std::vector<Outcome>& outcomes) {
  for (auto& o : outcomes) {
    ++res.evaluated;
    if (!o.solution.ok()) {
      const double s = o.solution.infeasibility;
      if (std::isfinite(s) &&
          (s < res.best_infeasibility ||
           (s == res.best_infeasibility && o.point < res.best_infeasible_point))) {
        res.best_infeasibility = s;
        res.best_infeasible_point = o.point;
      }
      continue;
    }
    ++res.feasible_count;
    Outcome current{res.point, std::nullopt, res.solution};
    if (!res.feasible || better(o, current)) {
      res.feasible = true;
      res.point = o.point;
      res.program = std::move(*o.program);
      res.solution = std::move(o.solution);
    }
  }
}

std::vector<GridPoint> cartesian(const std::vector<std::vector<double>>& axes) {
  std::vector<GridPoint> pts{{}};
  for (const auto& axis : axes) {
    std::vector<GridPoint> next;
    next.reserve(pts.size() * axis.size());
    for (const auto& p : pts) {
      for (double v : axis) {
        GridPoint q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    pts = std::move(next);
  }
  return pts;
}

double spacing(std::vector<double> axis) {
  std::sort(axis.begin(), axis.end());
  double s = 0.0;
  for (std::size_t i = 1; i < axis.size(); ++i) {
    const double d = axis[i] - axis[i - 1];
    if (d > 0.0 && (s == 0.0 || d < s)) s = d;
  }
  return s;
}

}  // namespace

GridResult search_points(const ProgramBuilder& builder, const std::vector<GridPoint>& points,
                         const SolverOptions& options, int threads) {
  GridResult res;
  auto outcomes = evaluate_all(builder, points, options, threads);
  absorb(res, outcomes);
  return res;
}

GridResult grid_search(const ProgramBuilder& builder, const GridSpec& grid,
                       const SolverOptions& options, int threads) {
  grid.validate();
  std::vector<std::vector<double>> axes = grid.values;
  for (auto& a : axes) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  auto points = cartesian(axes);
  std::set<GridPoint> seen(points.begin(), points.end());
  GridResult res = search_points(builder, points, options, threads);
  if (!res.feasible) return res;

  std::vector<double> step(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    step[d] = d < grid.spacing.size() ? grid.spacing[d] : spacing(axes[d]);
  }
  for (int round = 0; round < grid.refinement_rounds; ++round) {
    std::vector<std::vector<double>> local(axes.size());
    for (std::size_t d = 0; d < axes.size(); ++d) {
      step[d] *= 0.5;
      const double w = res.point[d];
      for (double v : {w - step[d], w, w + step[d]}) {
        const double r = std::round(v * 1e12) / 1e12;
        if (r > 0.0 && r < 1.0) local[d].push_back(r);
      }
    }
    std::vector<GridPoint> fresh;
    for (auto& p : cartesian(local)) {
      if (seen.insert(p).second) fresh.push_back(std::move(p));
    }
    if (fresh.empty()) continue;
    auto outcomes = evaluate_all(builder, fresh, options, threads);
    absorb(res, outcomes);
  }
  return res;
}

}  // namespace pshield::sdp
