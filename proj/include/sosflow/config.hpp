#pragma once

// Flat `key = value` run configuration. Lines starting with `#` and text after
// a `#` are comments. Every key may appear at most once.

#include <charconv>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sosflow/bcf.hpp"
#include "sosflow/evolution.hpp"
#include "sosflow/strong_form.hpp"

namespace sosflow {

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Mode { Run, Oracle, Bcf, Compare, Check, Study };
enum class InitialKind { Linear, Sine, Kink, File };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Run: return "run";
    case Mode::Oracle: return "oracle";
    case Mode::Bcf: return "bcf";
    case Mode::Compare: return "compare";
    case Mode::Check: return "check";
    case Mode::Study: return "study";
  }
  return "?";
}

inline const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Linear: return "linear";
    case InitialKind::Sine: return "sine";
    case InitialKind::Kink: return "kink";
    case InitialKind::File: return "file";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::Run, Mode::Oracle, Mode::Bcf, Mode::Compare, Mode::Check, Mode::Study})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct RunConfig {
  Mode mode = Mode::Run;
  int n = 64;
  double length = 1.0;

  InitialKind initial = InitialKind::Sine;
  double amplitude = 0.01;
  int wavenumber = 1;
  double left_slope = 0.5;
  double right_slope = 1.5;
  double position = 0.5;
  std::string initial_file;

  EvolutionConfig evolution{};
  OracleConfig oracle{};

  int bcf_steps = 100;
  int bcf_fine_n = 4096;
  double bcf_dt_safety = 0.5;
  int bcf_records = 16;

  std::vector<int> compare_levels{32, 64, 128};
  std::vector<int> study_levels{64, 128, 256};
  int evi_probes = 20;
  double probe_amplitude = 0.05;

  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    throw ValidationError(key, "cannot parse '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError(key, "expected true or false, got '" + text + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw ValidationError(key, "empty list");
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Param {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<Param>& parameters() {
  using R = RunConfig;
  using S = const std::string&;
  static const std::vector<Param> table = {
      {"mode",
       [](R& c, S v) {
         const auto m = parse_mode(v);
         if (!m) throw ValidationError("mode", "unknown mode '" + v + "'");
         c.mode = *m;
       },
       [](const R& c) { return std::string(to_string(c.mode)); }},
      {"N", [](R& c, S v) { c.n = parse_number<int>("N", v); },
       [](const R& c) { return std::to_string(c.n); }},
      {"L", [](R& c, S v) { c.length = parse_number<double>("L", v); },
       [](const R& c) { return num(c.length); }},
      {"initial",
       [](R& c, S v) {
         for (InitialKind k : {InitialKind::Linear, InitialKind::Sine, InitialKind::Kink, InitialKind::File})
           if (v == to_string(k)) {
             c.initial = k;
             return;
           }
         throw ValidationError("initial", "unknown initial data '" + v + "'");
       },
       [](const R& c) { return std::string(to_string(c.initial)); }},
      {"amplitude", [](R& c, S v) { c.amplitude = parse_number<double>("amplitude", v); },
       [](const R& c) { return num(c.amplitude); }},
      {"wavenumber", [](R& c, S v) { c.wavenumber = parse_number<int>("wavenumber", v); },
       [](const R& c) { return std::to_string(c.wavenumber); }},
      {"left_slope", [](R& c, S v) { c.left_slope = parse_number<double>("left_slope", v); },
       [](const R& c) { return num(c.left_slope); }},
      {"right_slope", [](R& c, S v) { c.right_slope = parse_number<double>("right_slope", v); },
       [](const R& c) { return num(c.right_slope); }},
      {"position", [](R& c, S v) { c.position = parse_number<double>("position", v); },
       [](const R& c) { return num(c.position); }},
      {"initial_file", [](R& c, S v) { c.initial_file = v; },
       [](const R& c) { return c.initial_file; }},
      {"t_final",
       [](R& c, S v) {
         c.evolution.t_final = parse_number<double>("t_final", v);
         c.oracle.t_final = c.evolution.t_final;
       },
       [](const R& c) { return num(c.evolution.t_final); }},
      {"n_steps", [](R& c, S v) { c.evolution.n_steps = parse_number<int>("n_steps", v); },
       [](const R& c) { return std::to_string(c.evolution.n_steps); }},
      {"snapshot_every",
       [](R& c, S v) { c.evolution.snapshot_every = parse_number<int>("snapshot_every", v); },
       [](const R& c) { return std::to_string(c.evolution.snapshot_every); }},
      {"c_star",
       [](R& c, S v) {
         if (v == "auto")
           c.evolution.c_star_override.reset();
         else
           c.evolution.c_star_override = parse_number<double>("c_star", v);
       },
       [](const R& c) {
         return c.evolution.c_star_override ? num(*c.evolution.c_star_override) : std::string("auto");
       }},
      {"grad_tol", [](R& c, S v) { c.evolution.inner.grad_tol = parse_number<double>("grad_tol", v); },
       [](const R& c) { return num(c.evolution.inner.grad_tol); }},
      {"max_iter", [](R& c, S v) { c.evolution.inner.max_iter = parse_number<int>("max_iter", v); },
       [](const R& c) { return std::to_string(c.evolution.inner.max_iter); }},
      {"tau_backoff",
       [](R& c, S v) { c.evolution.inner.tau_backoff = parse_number<double>("tau_backoff", v); },
       [](const R& c) { return num(c.evolution.inner.tau_backoff); }},
      {"max_backoffs",
       [](R& c, S v) { c.evolution.inner.max_backoffs = parse_number<int>("max_backoffs", v); },
       [](const R& c) { return std::to_string(c.evolution.inner.max_backoffs); }},
      {"constraint_tol",
       [](R& c, S v) { c.evolution.inner.constraint_tol = parse_number<double>("constraint_tol", v); },
       [](const R& c) { return num(c.evolution.inner.constraint_tol); }},
      {"threshold_coefficient",
       [](R& c, S v) {
         c.evolution.rule.coefficient = parse_number<double>("threshold_coefficient", v);
         c.oracle.rule.coefficient = c.evolution.rule.coefficient;
       },
       [](const R& c) { return num(c.evolution.rule.coefficient); }},
      {"threshold_adaptive",
       [](R& c, S v) {
         c.evolution.rule.adaptive = parse_bool("threshold_adaptive", v);
         c.oracle.rule.adaptive = c.evolution.rule.adaptive;
       },
       [](const R& c) { return std::string(c.evolution.rule.adaptive ? "true" : "false"); }},
      {"dt_safety", [](R& c, S v) { c.oracle.dt_safety = parse_number<double>("dt_safety", v); },
       [](const R& c) { return num(c.oracle.dt_safety); }},
      {"oracle_snapshots",
       [](R& c, S v) { c.oracle.snapshots = parse_number<int>("oracle_snapshots", v); },
       [](const R& c) { return std::to_string(c.oracle.snapshots); }},
      {"bcf_steps", [](R& c, S v) { c.bcf_steps = parse_number<int>("bcf_steps", v); },
       [](const R& c) { return std::to_string(c.bcf_steps); }},
      {"bcf_fine_n", [](R& c, S v) { c.bcf_fine_n = parse_number<int>("bcf_fine_n", v); },
       [](const R& c) { return std::to_string(c.bcf_fine_n); }},
      {"bcf_dt_safety", [](R& c, S v) { c.bcf_dt_safety = parse_number<double>("bcf_dt_safety", v); },
       [](const R& c) { return num(c.bcf_dt_safety); }},
      {"bcf_records", [](R& c, S v) { c.bcf_records = parse_number<int>("bcf_records", v); },
       [](const R& c) { return std::to_string(c.bcf_records); }},
      {"compare_levels", [](R& c, S v) { c.compare_levels = parse_int_list("compare_levels", v); },
       [](const R& c) { return join(c.compare_levels); }},
      {"study_levels", [](R& c, S v) { c.study_levels = parse_int_list("study_levels", v); },
       [](const R& c) { return join(c.study_levels); }},
      {"evi_probes", [](R& c, S v) { c.evi_probes = parse_number<int>("evi_probes", v); },
       [](const R& c) { return std::to_string(c.evi_probes); }},
      {"probe_amplitude",
       [](R& c, S v) { c.probe_amplitude = parse_number<double>("probe_amplitude", v); },
       [](const R& c) { return num(c.probe_amplitude); }},
      {"seed", [](R& c, S v) { c.seed = parse_number<std::uint64_t>("seed", v); },
       [](const R& c) { return std::to_string(c.seed); }},
      {"out_dir", [](R& c, S v) { c.out_dir = v; }, [](const R& c) { return c.out_dir; }},
  };
  return table;
}

inline const Param* find_param(const std::string& key) {
  for (const Param& p : parameters())
    if (key == p.key) return &p;
  return nullptr;
}

}  // namespace detail

/// Sets one key; unknown keys and unparsable values raise ValidationError.
inline void set_parameter(RunConfig& cfg, const std::string& key, const std::string& value) {
  const detail::Param* p = detail::find_param(key);
  if (!p) throw ValidationError(key, "unknown key");
  p->set(cfg, value);
}

inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ValidationError(key, what);
  };
  require(c.n >= 4, "N", "must be >= 4");
  require(c.length > 0.0, "L", "must be positive");
  require(c.amplitude >= 0.0, "amplitude", "must be >= 0");
  require(c.wavenumber >= 1, "wavenumber", "must be >= 1");
  require(c.left_slope > 0.0, "left_slope", "must be positive");
  require(c.right_slope > 0.0, "right_slope", "must be positive");
  require(c.position > 0.0 && c.position < 1.0, "position", "must lie in (0, 1)");
  require(c.initial != InitialKind::File || !c.initial_file.empty(), "initial_file",
          "required when initial = file");
  require(c.evolution.t_final > 0.0, "t_final", "must be positive");
  require(c.evolution.n_steps >= 1, "n_steps", "must be >= 1");
  require(c.evolution.snapshot_every >= 1, "snapshot_every", "must be >= 1");
  require(!c.evolution.c_star_override || *c.evolution.c_star_override > 0.0, "c_star",
          "must be positive");
  require(c.evolution.inner.grad_tol > 0.0, "grad_tol", "must be positive");
  require(c.evolution.inner.max_iter >= 1, "max_iter", "must be >= 1");
  require(c.evolution.inner.tau_backoff > 0.0 && c.evolution.inner.tau_backoff < 1.0, "tau_backoff",
          "must lie in (0, 1)");
  require(c.evolution.inner.max_backoffs >= 0, "max_backoffs", "must be >= 0");
  require(c.evolution.inner.constraint_tol > 0.0, "constraint_tol", "must be positive");
  require(c.evolution.rule.coefficient > 0.0, "threshold_coefficient", "must be positive");
  require(c.oracle.dt_safety > 0.0 && c.oracle.dt_safety <= 1.0, "dt_safety", "must lie in (0, 1]");
  require(c.oracle.snapshots >= 1, "oracle_snapshots", "must be >= 1");
  require(c.bcf_steps >= 3, "bcf_steps", "must be >= 3");
  require(c.bcf_fine_n >= 4, "bcf_fine_n", "must be >= 4");
  require(c.bcf_dt_safety > 0.0 && c.bcf_dt_safety <= 1.0, "bcf_dt_safety", "must lie in (0, 1]");
  require(c.bcf_records >= 1, "bcf_records", "must be >= 1");
  for (int v : c.compare_levels) require(v >= 1, "compare_levels", "entries must be >= 1");
  for (int v : c.study_levels) require(v >= 4, "study_levels", "entries must be >= 4");
  require(c.evi_probes >= 1, "evi_probes", "must be >= 1");
  require(c.probe_amplitude > 0.0, "probe_amplitude", "must be positive");
  require(!c.out_dir.empty(), "out_dir", "must not be empty");
}

/// Parses without cross-field validation; overrides are applied afterwards.
inline RunConfig parse_config_unvalidated(const std::string& text) {
  RunConfig cfg;
  std::vector<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "missing key");
    if (value.empty()) throw ParseError(lineno, "missing value for '" + key + "'");
    for (const auto& k : seen)
      if (k == key) throw ParseError(lineno, "duplicate key '" + key + "'");
    seen.push_back(key);
    set_parameter(cfg, key, value);
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg = parse_config_unvalidated(text);
  validate(cfg);
  return cfg;
}

/// One `# key = value` line per effective parameter.
inline std::string echo_block(const RunConfig& cfg) {
  std::string out = "# effective configuration\n";
  for (const auto& p : detail::parameters()) out += std::string("# ") + p.key + " = " + p.get(cfg) + "\n";
  return out;
}

}  // namespace sosflow
