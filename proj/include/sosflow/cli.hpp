#pragma once

// Command-line driver. All output files are deterministic for a given
// configuration and seed: no timestamps, fixed 17-digit number formatting.
//
//   sosflow run|oracle|bcf|compare|study <config> [--key value ...]
//   sosflow check <run_dir>
//
// Exit codes: 0 success, 1 invariant violation, 2 solver failure, 3 bad input.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sosflow/bcf.hpp"
#include "sosflow/config.hpp"
#include "sosflow/diagnostics.hpp"
#include "sosflow/evolution.hpp"
#include "sosflow/io.hpp"
#include "sosflow/strong_form.hpp"

namespace sosflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitConfig = 3;

inline HeightProfile initial_profile(const RunConfig& cfg, int n) {
  const GridSpec grid = GridSpec::make(n, cfg.length);
  switch (cfg.initial) {
    case InitialKind::Linear:
      return linear_profile(grid);
    case InitialKind::Sine:
      return sine_profile(grid, cfg.amplitude, cfg.wavenumber);
    case InitialKind::Kink:
      return kink_profile(grid, cfg.left_slope, cfg.right_slope, cfg.position);
    case InitialKind::File: {
      std::istringstream in(read_file(cfg.initial_file));
      return resample_profile(read_two_column_csv(in), grid);
    }
  }
  throw InvalidArgument("unknown initial data");
}

inline HeightProfile initial_profile(const RunConfig& cfg) { return initial_profile(cfg, cfg.n); }

namespace detail {

/// Ordered JSON object writer with 17-digit numbers.
class JsonWriter {
 public:
  JsonWriter& number(const std::string& key, double v) {
    return raw(key, std::isfinite(v) ? format_number(v) : std::string("null"));
  }
  JsonWriter& integer(const std::string& key, long v) { return raw(key, std::to_string(v)); }
  JsonWriter& boolean(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
  JsonWriter& text(const std::string& key, const std::string& v) {
    return raw(key, nlohmann::json(v).dump());
  }
  std::string str() const { return "{\n" + body_ + "\n}\n"; }

 private:
  JsonWriter& raw(const std::string& key, const std::string& v) {
    if (!body_.empty()) body_ += ",\n";
    body_ += "  " + nlohmann::json(key).dump() + ": " + v;
    return *this;
  }
  std::string body_;
};

inline std::string profile_csv(const HeightProfile& h) {
  std::ostringstream os;
  write_profile_csv(os, h);
  return os.str();
}

inline std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d.csv", step);
  return buf;
}

inline void write_snapshots(const std::filesystem::path& dir, const Trajectory& traj) {
  const auto snaps = dir / "snapshots";
  std::filesystem::create_directories(snaps);
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    write_file((snaps / snapshot_name(traj.state_steps[k])).string(), profile_csv(traj.states[k]));
}

inline std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& recs) {
  std::ostringstream os;
  write_diagnostics_csv(os, recs);
  return os.str();
}

struct Context {
  RunConfig cfg;
  std::filesystem::path out;
  std::ostream& log;
  std::ostream& err;
};

inline int report_violations(const std::vector<InvariantViolation>& v, std::ostream& os) {
  for (const auto& x : v)
    os << "FAIL " << x.name << " at step " << x.step << ": " << format_number(x.value)
       << " exceeds " << format_number(x.limit) << '\n';
  return v.empty() ? kExitOk : kExitInvariant;
}

inline int mode_run(Context& c) {
  const HeightProfile h0 = initial_profile(c.cfg);
  const DerivedBounds bounds = derive_bounds(h0, c.cfg.evolution.rule, c.cfg.evolution.c_star_override);
  Trajectory traj = evolve(h0, c.cfg.evolution);
  const BvBallSpec ball{bounds.c_star};
  const auto probes =
      random_probes(h0.grid(), c.cfg.evi_probes, c.cfg.seed, ball, c.cfg.probe_amplitude, c.cfg.evolution.rule);
  const EviReport evi = evi_test(traj, probes, ball, c.cfg.evolution.rule);
  for (std::size_t k = 0; k < evi.step_index.size(); ++k)
    if (std::isfinite(evi.step_max[k])) traj.diagnostics[evi.step_index[k]].evi_viol = evi.step_max[k];

  int backoffs = 0;
  for (const auto& r : traj.reports) backoffs += r.backoffs;
  write_file((c.out / "diagnostics.csv").string(), diagnostics_csv(traj.diagnostics));
  write_file((c.out / "profile_initial.csv").string(), profile_csv(h0));
  write_file((c.out / "profile_final.csv").string(), profile_csv(traj.states.back()));
  write_snapshots(c.out, traj);

  JsonWriter js;
  js.text("mode", "run")
      .number("phi0", bounds.phi0)
      .number("phi_final", traj.diagnostics.back().phi)
      .number("c1", bounds.c1)
      .number("c2", bounds.c2)
      .number("c_star", bounds.c_star)
      .integer("steps", static_cast<long>(traj.reports.size()))
      .integer("backoffs", backoffs)
      .number("max_evi_violation", evi.max_violation)
      .integer("evi_pairs", evi.n_pairs)
      .integer("evi_excluded", evi.excluded_nonconvex)
      .number("grad_tol", c.cfg.evolution.inner.grad_tol)
      .number("t_final", traj.times.back());
  write_file((c.out / "summary.json").string(), js.str());

  c.log << "steps " << traj.reports.size() << ", backoffs " << backoffs << ", phi "
        << format_number(bounds.phi0) << " -> " << format_number(traj.diagnostics.back().phi) << '\n';
  InvariantTolerances tol;
  tol.grad_tol = c.cfg.evolution.inner.grad_tol;
  return report_violations(check_invariants(traj.diagnostics, bounds, tol), c.log);
}

inline int mode_oracle(Context& c) {
  const HeightProfile h0 = initial_profile(c.cfg);
  const DerivedBounds bounds = derive_bounds(h0, c.cfg.oracle.rule);
  const Trajectory traj = oracle_evolve(h0, c.cfg.oracle);
  write_file((c.out / "diagnostics.csv").string(), diagnostics_csv(traj.diagnostics));
  write_file((c.out / "profile_initial.csv").string(), profile_csv(h0));
  write_file((c.out / "profile_final.csv").string(), profile_csv(traj.states.back()));
  write_snapshots(c.out, traj);
  JsonWriter js;
  js.text("mode", "oracle")
      .number("phi0", bounds.phi0)
      .number("phi_final", traj.diagnostics.back().phi)
      .number("c1", bounds.c1)
      .number("c2", bounds.c2)
      .integer("steps", traj.state_steps.back())
      .number("t_final", traj.times.back());
  write_file((c.out / "summary.json").string(), js.str());
  c.log << "oracle steps " << traj.state_steps.back() << '\n';
  return kExitOk;
}

inline int mode_bcf(Context& c) {
  const HeightProfile fine = initial_profile(c.cfg, c.cfg.bcf_fine_n);
  const StepConfiguration s0 = profile_to_steps(fine, c.cfg.bcf_steps);
  BcfConfig bc;
  bc.dt_safety = c.cfg.bcf_dt_safety;
  bc.records = c.cfg.bcf_records;
  const StepTrajectory traj = bcf_evolve(s0, c.cfg.evolution.t_final, bc);
  std::ostringstream os;
  write_steps_csv(os, traj);
  write_file((c.out / "steps.csv").string(), os.str());
  const GridSpec grid = GridSpec::make(c.cfg.n, c.cfg.length);
  write_file((c.out / "profile_final.csv").string(), profile_csv(steps_to_profile(traj.states.back(), grid)));
  JsonWriter js;
  js.text("mode", "bcf")
      .integer("n_steps", c.cfg.bcf_steps)
      .integer("integrator_steps", traj.steps_taken)
      .number("min_gap_initial", s0.min_gap())
      .number("min_gap_final", traj.states.back().min_gap())
      .number("t_final", traj.times.back());
  write_file((c.out / "summary.json").string(), js.str());
  c.log << "bcf integrator steps " << traj.steps_taken << '\n';
  return kExitOk;
}

inline int mode_compare(Context& c) {
  const HeightProfile h0 = initial_profile(c.cfg);
  OracleConfig oc = c.cfg.oracle;
  oc.snapshots = 1;
  const Trajectory ref = oracle_evolve(h0, oc);
  std::vector<CompareRow> rows;
  for (int n : c.cfg.compare_levels) {
    EvolutionConfig ec = c.cfg.evolution;
    ec.n_steps = n;
    ec.snapshot_every = n;
    const Trajectory traj = evolve(h0, ec);
    rows.push_back({n, std::sqrt(l2_distance_sq(traj.states.back(), ref.states.back()))});
    c.log << "n_steps " << n << " L2_error " << format_number(rows.back().l2_error) << '\n';
  }
  std::ostringstream os;
  write_compare_csv(os, rows);
  write_file((c.out / "compare.csv").string(), os.str());
  JsonWriter js;
  js.text("mode", "compare").integer("levels", static_cast<long>(rows.size()));
  bool decreasing = true;
  double min_order = kInfinity;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    decreasing = decreasing && rows[k].l2_error < rows[k - 1].l2_error;
    const double order = std::log(rows[k - 1].l2_error / rows[k].l2_error) /
                         std::log(static_cast<double>(rows[k].n_steps) / rows[k - 1].n_steps);
    min_order = std::min(min_order, order);
  }
  js.boolean("strictly_decreasing", decreasing).number("min_observed_order", min_order);
  write_file((c.out / "summary.json").string(), js.str());
  return kExitOk;
}

inline int mode_study(Context& c) {
  const RefinementReport rep =
      singularity_refinement_study(c.cfg.left_slope, c.cfg.right_slope, c.cfg.position,
                                   c.cfg.study_levels, c.cfg.length, c.cfg.evolution);
  std::ostringstream os;
  os << "N,initial_pos,initial_neg,final_pos,final_neg\n";
  for (const auto& l : rep.levels)
    os << l.n << ',' << format_number(l.initial_pos) << ',' << format_number(l.initial_neg) << ','
       << format_number(l.final_pos) << ',' << format_number(l.final_neg) << '\n';
  write_file((c.out / "study.csv").string(), os.str());
  JsonWriter js;
  js.text("mode", "study")
      .boolean("neg_vanishing", rep.neg_vanishing)
      .boolean("pos_persistent", rep.pos_persistent);
  write_file((c.out / "summary.json").string(), js.str());
  c.log << "negative singular mass vanishing: " << (rep.neg_vanishing ? "yes" : "no")
        << ", positive singular mass persistent: " << (rep.pos_persistent ? "yes" : "no") << '\n';
  return kExitOk;
}

inline int mode_check(const std::filesystem::path& dir, std::ostream& out) {
  std::istringstream diag(read_file((dir / "diagnostics.csv").string()));
  const std::vector<DiagnosticsRecord> recs = read_diagnostics_csv(diag);
  nlohmann::json summary;
  try {
    summary = nlohmann::json::parse(read_file((dir / "summary.json").string()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("summary.json: ") + e.what());
  }
  for (const char* key : {"phi0", "c1", "c2", "c_star", "grad_tol", "phi_final"})
    if (!summary.contains(key) || !summary[key].is_number())
      throw IoError(std::string("summary.json lacks numeric '") + key + "'");
  DerivedBounds bounds;
  bounds.phi0 = summary["phi0"].get<double>();
  bounds.c1 = summary["c1"].get<double>();
  bounds.c2 = summary["c2"].get<double>();
  bounds.c_star = summary["c_star"].get<double>();
  InvariantTolerances tol;
  tol.grad_tol = summary["grad_tol"].get<double>();
  std::vector<InvariantViolation> v = check_invariants(recs, bounds, tol);
  if (recs.empty()) {
    v.push_back({"diagnostics_nonempty", 0, 0.0, 1.0});
  } else {
    if (recs.front().phi != bounds.phi0) v.push_back({"phi0_matches_summary", recs.front().step, recs.front().phi, bounds.phi0});
    if (recs.back().phi != summary["phi_final"].get<double>())
      v.push_back({"phi_final_matches_summary", recs.back().step, recs.back().phi,
                   summary["phi_final"].get<double>()});
  }
  const int code = report_violations(v, out);
  if (code == kExitOk) out << "all invariants hold on " << recs.size() << " records\n";
  return code;
}

inline std::string usage() {
  return "usage: sosflow run|oracle|bcf|compare|study <config> [--key value ...]\n"
         "       sosflow check <run_dir>\n";
}

}  // namespace detail

inline int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.size() < 2) {
    err << detail::usage();
    return kExitConfig;
  }
  const std::optional<Mode> mode = parse_mode(args[0]);
  if (!mode) {
    err << "unknown subcommand '" << args[0] << "'\n" << detail::usage();
    return kExitConfig;
  }
  if (*mode == Mode::Check) {
    try {
      return detail::mode_check(args[1], out);
    } catch (const Error& e) {
      err << "check: " << e.what() << '\n';
      return kExitConfig;
    }
  }

  RunConfig cfg;
  try {
    cfg = parse_config_unvalidated(read_file(args[1]));
    for (std::size_t k = 2; k < args.size(); k += 2) {
      const std::string& flag = args[k];
      if (flag.rfind("--", 0) != 0 || k + 1 >= args.size())
        throw ValidationError(flag, "overrides must be given as --key value");
      set_parameter(cfg, flag.substr(2), args[k + 1]);
    }
    cfg.mode = *mode;
    if (const char* env = std::getenv("SOSFLOW_OUT"); env && *env) cfg.out_dir = env;
    validate(cfg);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::filesystem::path dir(cfg.out_dir);
  std::ostringstream log;
  log << echo_block(cfg);
  detail::Context ctx{cfg, dir, log, err};
  int code = kExitOk;
  try {
    std::filesystem::create_directories(dir);
    switch (*mode) {
      case Mode::Run: code = detail::mode_run(ctx); break;
      case Mode::Oracle: code = detail::mode_oracle(ctx); break;
      case Mode::Bcf: code = detail::mode_bcf(ctx); break;
      case Mode::Compare: code = detail::mode_compare(ctx); break;
      case Mode::Study: code = detail::mode_study(ctx); break;
      case Mode::Check: break;
    }
  } catch (const IoError& e) {
    log << "input error: " << e.what() << '\n';
    code = kExitConfig;
  } catch (const NonMonotone& e) {
    log << "input error: " << e.what() << '\n';
    code = kExitConfig;
  } catch (const InvalidArgument& e) {
    log << "input error: " << e.what() << '\n';
    code = kExitConfig;
  } catch (const Error& e) {
    log << "solver failure: " << e.what() << '\n';
    code = kExitSolver;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "input error: " << e.what() << '\n';
    code = kExitConfig;
  }
  out << log.str();
  try {
    write_file((dir / "run.log").string(), log.str());
  } catch (const Error&) {
  }
  return code;
}

}  // namespace sosflow
