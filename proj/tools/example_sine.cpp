// Minimal library use: evolve a perturbed linear profile and print phi per step.

#include <cstdio>

#include "sosflow/sosflow.hpp"

int main() {
  using namespace sosflow;
  const HeightProfile h0 = sine_profile(GridSpec::make(64, 1.0), 0.01);
  EvolutionConfig cfg;
  cfg.t_final = 1e-3;
  cfg.n_steps = 16;
  const Trajectory traj = evolve(h0, cfg);
  for (const DiagnosticsRecord& r : traj.diagnostics)
    std::printf("%3d  t = %.3e  phi = %.12f  |h - linear| = %.3e\n", r.step, r.t, r.phi, r.l2);
  const DerivedBounds b = derive_bounds(h0);
  std::printf("slope bounds [%.4f, %.4f], invariant violations: %zu\n", b.c1, b.c2,
              check_invariants(traj.diagnostics, b).size());
}
