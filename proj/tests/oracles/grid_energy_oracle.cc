#include "grid_energy_oracle.h"

#include <cmath>
#include <vector>

namespace resilience::testing {

std::string ScalarInstance::SpecText() const {
  const char* op_text = op == Op::kNext ? "X" : op == Op::kEventually ? "F" : "G";
  return std::string(op_text) + "[" + std::to_string(k) + "] Gamma";
}

namespace {

bool Inside(const ScalarInstance& inst, double x) {
  return x >= inst.lo - 1e-12 && x <= inst.hi + 1e-12;
}

// States x_0..x_N for inputs u and disturbance signs encoded in `mask`.
void Roll(const ScalarInstance& inst, const std::vector<double>& u,
          unsigned mask, double wbar, std::vector<double>& x) {
  x.assign(u.size() + 1, inst.x0);
  for (std::size_t t = 0; t < u.size(); ++t) {
    const double w = ((mask >> t) & 1U) ? wbar : -wbar;
    x[t + 1] = x[t] + u[t] + w;
  }
}

bool Feasible(const ScalarInstance& inst, const std::vector<double>& u,
              bool worst_case) {
  const int n = static_cast<int>(u.size());
  const double wbar = worst_case ? inst.wbar : 0.0;
  const unsigned masks = worst_case ? (1U << n) : 1U;
  std::vector<double> x;
  // ok_at[t]: x_t in the interval for every disturbance vertex
  std::vector<char> ok_at(n + 1, 1);
  for (unsigned mask = 0; mask < masks; ++mask) {
    Roll(inst, u, mask, wbar, x);
    for (int t = 0; t <= n; ++t) {
      if (!Inside(inst, x[t])) ok_at[t] = 0;
    }
  }
  switch (inst.op) {
    case ScalarInstance::Op::kNext:
      return ok_at[inst.k];
    case ScalarInstance::Op::kEventually:
      for (int t = 0; t <= inst.k; ++t) {
        if (ok_at[t]) return true;
      }
      return false;
    case ScalarInstance::Op::kAlways:
      for (int t = 0; t <= inst.k; ++t) {
        if (!ok_at[t]) return false;
      }
      return true;
  }
  return false;
}

double Energy(const std::vector<double>& u) {
  double e = 0.0;
  for (double v : u) e += v * v;
  return e;
}

// Scans the grid center + step * j, j in [-half, half]^n, clipped to the
// input bound; updates best/best_u.
void Scan(const ScalarInstance& inst, bool worst_case,
          const std::vector<double>& center, double step, int half,
          double& best, std::vector<double>& best_u) {
  const int n = static_cast<int>(center.size());
  const int side = 2 * half + 1;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= side;
  std::vector<double> u(n);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    bool in_bounds = true;
    for (int i = 0; i < n; ++i) {
      const int j = static_cast<int>(rest % side) - half;
      rest /= side;
      u[i] = center[i] + step * j;
      if (std::abs(u[i]) > inst.umax + 1e-15) in_bounds = false;
    }
    if (!in_bounds) continue;
    const double e = Energy(u);
    if (e >= best) continue;
    if (Feasible(inst, u, worst_case)) {
      best = e;
      best_u = u;
    }
  }
}

}  // namespace

std::optional<double> GridSearchEnergy(const ScalarInstance& inst,
                                       bool worst_case) {
  const int n = inst.horizon;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_u(n, 0.0);
  const int coarse_half = 40;
  double step = inst.umax / coarse_half;
  Scan(inst, worst_case, std::vector<double>(n, 0.0), step, coarse_half, best,
       best_u);
  if (!std::isfinite(best)) return std::nullopt;
  while (step > 1e-8) {
    const std::vector<double> center = best_u;
    step /= 5.0;
    Scan(inst, worst_case, center, step, 15, best, best_u);
  }
  return best;
}

}  // namespace resilience::testing
