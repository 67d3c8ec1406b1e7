// Copyright 2026 The splin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPLIN_CONFIG_HPP
#define SPLIN_CONFIG_HPP

// Experiment configuration text format:
//   key = value        one assignment per line, dotted section keys
//   # comment          only as the first non-blank character of a line
// Lists are comma separated; integer lists also accept first:last:step.
// Unknown keys, malformed values and out-of-range values are errors that
// name the line and key. Environment variables SPLIN_<KEY> (dots and dashes
// mapped to underscores, upper case) override file values.

#include <splin/core.hpp>
#include <splin/csv.hpp>
#include <splin/dict_learning.hpp>
#include <splin/phase_lab.hpp>
#include <splin/solvers.hpp>
#include <splin/synthdgp.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace splin {

enum class ExperimentKind { kGen, kSolve, kLearnDict, kTrainSae, kIdentCheck, kEval, kPhaseSweep, kPipeline };
enum class OutputFormat { kCsv, kJson };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kGen: return "gen";
    case ExperimentKind::kSolve: return "solve";
    case ExperimentKind::kLearnDict: return "learn-dict";
    case ExperimentKind::kTrainSae: return "train-sae";
    case ExperimentKind::kIdentCheck: return "identcheck";
    case ExperimentKind::kEval: return "eval";
    case ExperimentKind::kPhaseSweep: return "phase-sweep";
    case ExperimentKind::kPipeline: return "pipeline";
  }
  return "?";
}
inline std::string_view to_string(OutputFormat f) { return f == OutputFormat::kCsv ? "csv" : "json"; }
inline std::string_view to_string(StepRule r) { return r == StepRule::kFixed ? "fixed" : "backtracking"; }

struct DgpSection {
  Index m = 16;
  Index n = 32;
  Index k = 2;
  Index samples = 4096;
  double noise_sigma = 0.0;
  ValueDist value_dist = ValueDist::kUniformSigned;
  DictKind dict_kind = DictKind::kGaussianNormalized;
  bool operator==(const DgpSection&) const = default;
};

struct SolverSection {
  SolverKind kind = SolverKind::kIsta;
  double lambda = 0.1;
  int max_iters = 200;
  double tol = 1e-6;
  StepRule step_rule = StepRule::kBacktracking;
  bool operator==(const SolverSection&) const = default;
};

struct DictSection {
  Index n_atoms = 32;
  int rounds = 50;
  UpdateRule update_rule = UpdateRule::kLeastSquares;
  DeadAtomPolicy dead_atom_policy = DeadAtomPolicy::kReinitWorstResidual;
  Index batch_size = 0;
  bool operator==(const DictSection&) const = default;
};

struct SaeSection {
  Index n_atoms = 32;
  double lambda = 0.05;
  double learning_rate = 1e-2;
  int epochs = 50;
  Index batch_size = 64;
  bool tie_weights = false;
  bool operator==(const SaeSection&) const = default;
};

struct IdentSection {
  Index n_classes = 4;
  Index latent_dim = 3;
  double spread = 0.25;
  GeneratorKind generator = GeneratorKind::kTwoLayerInvertible;
  int epochs = 200;
  double learning_rate = 0.5;
  Index n_train = 2048;
  Index n_test = 1000;
  Index seeds = 5;
  Index pairs = 100;
  bool operator==(const IdentSection&) const = default;
};

struct SweepSection {
  Index n = 128;
  std::vector<Index> k_values{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<Index> m_values = m_range(1, 79, 2);
  Index trials = 200;
  SolverKind solver = SolverKind::kOmp;
  SuccessCriterion criterion = SuccessCriterion::kSupportExact;
  bool operator==(const SweepSection&) const = default;
};

struct EvalSection {
  Index top_q = 10;
  Index intrusion_trials = 200;
  bool operator==(const EvalSection&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kPipeline;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string output_dir = "out";
  OutputFormat format = OutputFormat::kCsv;
  int snapshot_every = 0;
  DgpSection dgp;
  SolverSection solver;
  DictSection dict;
  SaeSection sae;
  IdentSection ident;
  SweepSection sweep;
  EvalSection eval;
  bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigIssue {
  int line = 0;  // 0: not tied to a line (missing key, environment, cross-field)
  std::string key;
  std::string message;
};

class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : InvalidArgument(render(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string render(const std::vector<ConfigIssue>& issues) {
    std::string out;
    for (const auto& i : issues) {
      if (!out.empty()) out += '\n';
      out += i.line > 0 ? "line " + std::to_string(i.line) + ": " : std::string();
      out += "key '" + i.key + "': " + i.message;
    }
    return out;
  }
  std::vector<ConfigIssue> issues_;
};

namespace config_detail {

// Thrown by field setters; carries only the message.
struct BadValue {
  std::string message;
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <class T>
T parse_integer(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw BadValue{"expected an integer, got '" + s + "'"};
  return v;
}

inline double parse_real(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw BadValue{"expected a finite number, got '" + s + "'"};
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw BadValue{"expected true or false, got '" + s + "'"};
}

template <class E, std::size_t N>
E parse_enum(const std::string& s, const E (&values)[N]) {
  std::string options;
  for (E v : values) {
    if (to_string(v) == s) return v;
    options += (options.empty() ? "" : ", ") + std::string(to_string(v));
  }
  throw BadValue{"unknown value '" + s + "' (expected one of: " + options + ")"};
}

// Comma list, or a range first:last[:step].
inline std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  const auto colons = std::count(s.begin(), s.end(), ':');
  if ((colons == 1 || colons == 2) && s.find(',') == std::string::npos) {
    const std::size_t a = s.find(':'), b = colons == 2 ? s.find(':', a + 1) : s.size();
    const Index first = parse_integer<Index>(trim(s.substr(0, a)));
    const Index last = parse_integer<Index>(trim(s.substr(a + 1, b - a - 1)));
    const Index step = colons == 2 ? parse_integer<Index>(trim(s.substr(b + 1))) : 1;
    if (step < 1 || first > last) throw BadValue{"range must be first:last[:step] with step >= 1 and first <= last"};
    for (Index v = first; v <= last; v += step) out.push_back(v);
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    out.push_back(parse_integer<Index>(trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<Index>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

template <class T>
void at_least(T v, T lo, const char* rule) {
  if (v < lo) throw BadValue{rule};
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline constexpr ExperimentKind kKinds[] = {ExperimentKind::kGen,        ExperimentKind::kSolve,
                                            ExperimentKind::kLearnDict,  ExperimentKind::kTrainSae,
                                            ExperimentKind::kIdentCheck, ExperimentKind::kEval,
                                            ExperimentKind::kPhaseSweep, ExperimentKind::kPipeline};
inline constexpr OutputFormat kFormats[] = {OutputFormat::kCsv, OutputFormat::kJson};
inline constexpr ValueDist kDists[] = {ValueDist::kUnitGaussian, ValueDist::kUniformSigned, ValueDist::kBinary};
inline constexpr DictKind kDictKinds[] = {DictKind::kGaussianNormalized, DictKind::kOrthonormalSubset,
                                          DictKind::kIdentity};
inline constexpr SolverKind kSolvers[] = {SolverKind::kIsta, SolverKind::kFista, SolverKind::kOmp,
                                          SolverKind::kExhaustive};
inline constexpr StepRule kStepRules[] = {StepRule::kFixed, StepRule::kBacktracking};
inline constexpr UpdateRule kUpdateRules[] = {UpdateRule::kLeastSquares, UpdateRule::kProjectedGradient};
inline constexpr DeadAtomPolicy kDeadPolicies[] = {DeadAtomPolicy::kReinitWorstResidual, DeadAtomPolicy::kKeep};
inline constexpr GeneratorKind kGenerators[] = {GeneratorKind::kLinear, GeneratorKind::kCubicRotation,
                                                GeneratorKind::kTwoLayerInvertible};
inline constexpr SuccessCriterion kCriteria[] = {SuccessCriterion::kSupportExact, SuccessCriterion::kMcc,
                                                 SuccessCriterion::kRelativeL2};

// Field table builders keep the table below readable.
#define SPLIN_INT_FIELD(KEY, MEMBER, TYPE, MIN, RULE)                                              \
  Field {                                                                                         \
    KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); },                      \
        [](ExperimentConfig& c, const std::string& v) {                                           \
          const auto x = parse_integer<TYPE>(v);                                                  \
          at_least<TYPE>(x, MIN, RULE);                                                           \
          c.MEMBER = x;                                                                           \
        }                                                                                         \
  }
#define SPLIN_REAL_FIELD(KEY, MEMBER, MIN, RULE, STRICT)                                           \
  Field {                                                                                         \
    KEY, [](const ExperimentConfig& c) { return format_double(c.MEMBER); },                       \
        [](ExperimentConfig& c, const std::string& v) {                                           \
          const double x = parse_real(v);                                                         \
          if (x < (MIN) || ((STRICT) && x == (MIN))) throw BadValue{RULE};                         \
          c.MEMBER = x;                                                                           \
        }                                                                                         \
  }
#define SPLIN_ENUM_FIELD(KEY, MEMBER, VALUES)                                                      \
  Field {                                                                                         \
    KEY, [](const ExperimentConfig& c) { return std::string(to_string(c.MEMBER)); },              \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_enum(v, VALUES); }       \
  }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      SPLIN_ENUM_FIELD("experiment", experiment, kKinds),
      Field{"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
            [](ExperimentConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); }},
      SPLIN_INT_FIELD("jobs", jobs, unsigned, 1u, "jobs must be >= 1"),
      Field{"output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
            [](ExperimentConfig& c, const std::string& v) {
              if (v.empty()) throw BadValue{"output_dir must not be empty"};
              c.output_dir = v;
            }},
      SPLIN_ENUM_FIELD("format", format, kFormats),
      SPLIN_INT_FIELD("snapshot_every", snapshot_every, int, 0, "snapshot_every must be >= 0"),

      SPLIN_INT_FIELD("dgp.m", dgp.m, Index, 1, "dgp.m must be >= 1"),
      SPLIN_INT_FIELD("dgp.n", dgp.n, Index, 1, "dgp.n must be >= 1"),
      SPLIN_INT_FIELD("dgp.k", dgp.k, Index, 0, "dgp.k must be >= 0"),
      SPLIN_INT_FIELD("dgp.samples", dgp.samples, Index, 1, "dgp.samples must be >= 1"),
      SPLIN_REAL_FIELD("dgp.noise_sigma", dgp.noise_sigma, 0.0, "noise_sigma must be nonnegative", false),
      SPLIN_ENUM_FIELD("dgp.value_dist", dgp.value_dist, kDists),
      SPLIN_ENUM_FIELD("dgp.dict_kind", dgp.dict_kind, kDictKinds),

      SPLIN_ENUM_FIELD("solver.kind", solver.kind, kSolvers),
      SPLIN_REAL_FIELD("solver.lambda", solver.lambda, 0.0, "lambda must be nonnegative", false),
      SPLIN_INT_FIELD("solver.max_iters", solver.max_iters, int, 1, "max_iters must be >= 1"),
      SPLIN_REAL_FIELD("solver.tol", solver.tol, 0.0, "tol must be positive", true),
      SPLIN_ENUM_FIELD("solver.step_rule", solver.step_rule, kStepRules),

      SPLIN_INT_FIELD("dict.n_atoms", dict.n_atoms, Index, 1, "n_atoms must be >= 1"),
      SPLIN_INT_FIELD("dict.rounds", dict.rounds, int, 1, "rounds must be >= 1"),
      SPLIN_ENUM_FIELD("dict.update_rule", dict.update_rule, kUpdateRules),
      SPLIN_ENUM_FIELD("dict.dead_atom_policy", dict.dead_atom_policy, kDeadPolicies),
      SPLIN_INT_FIELD("dict.batch_size", dict.batch_size, Index, 0, "batch_size must be >= 0"),

      SPLIN_INT_FIELD("sae.n_atoms", sae.n_atoms, Index, 1, "n_atoms must be >= 1"),
      SPLIN_REAL_FIELD("sae.lambda", sae.lambda, 0.0, "lambda must be nonnegative", false),
      SPLIN_REAL_FIELD("sae.learning_rate", sae.learning_rate, 0.0, "learning_rate must be nonnegative", false),
      SPLIN_INT_FIELD("sae.epochs", sae.epochs, int, 0, "epochs must be >= 0"),
      SPLIN_INT_FIELD("sae.batch_size", sae.batch_size, Index, 1, "batch_size must be >= 1"),
      Field{"sae.tie_weights", [](const ExperimentConfig& c) { return std::string(c.sae.tie_weights ? "true" : "false"); },
            [](ExperimentConfig& c, const std::string& v) { c.sae.tie_weights = parse_bool(v); }},

      SPLIN_INT_FIELD("ident.n_classes", ident.n_classes, Index, 2, "n_classes must be >= 2"),
      SPLIN_INT_FIELD("ident.latent_dim", ident.latent_dim, Index, 1, "latent_dim must be >= 1"),
      SPLIN_REAL_FIELD("ident.spread", ident.spread, 0.0, "spread must be nonnegative", false),
      SPLIN_ENUM_FIELD("ident.generator", ident.generator, kGenerators),
      SPLIN_INT_FIELD("ident.epochs", ident.epochs, int, 0, "epochs must be >= 0"),
      SPLIN_REAL_FIELD("ident.learning_rate", ident.learning_rate, 0.0, "learning_rate must be nonnegative", false),
      SPLIN_INT_FIELD("ident.n_train", ident.n_train, Index, 1, "n_train must be >= 1"),
      SPLIN_INT_FIELD("ident.n_test", ident.n_test, Index, 2, "n_test must be >= 2"),
      SPLIN_INT_FIELD("ident.seeds", ident.seeds, Index, 1, "seeds must be >= 1"),
      SPLIN_INT_FIELD("ident.pairs", ident.pairs, Index, 1, "pairs must be >= 1"),

      SPLIN_INT_FIELD("sweep.n", sweep.n, Index, 1, "sweep.n must be >= 1"),
      Field{"sweep.k_values", [](const ExperimentConfig& c) { return join(c.sweep.k_values); },
            [](ExperimentConfig& c, const std::string& v) { c.sweep.k_values = parse_index_list(v); }},
      Field{"sweep.m_values", [](const ExperimentConfig& c) { return join(c.sweep.m_values); },
            [](ExperimentConfig& c, const std::string& v) { c.sweep.m_values = parse_index_list(v); }},
      SPLIN_INT_FIELD("sweep.trials", sweep.trials, Index, 1, "trials must be >= 1"),
      SPLIN_ENUM_FIELD("sweep.solver", sweep.solver, kSolvers),
      SPLIN_ENUM_FIELD("sweep.criterion", sweep.criterion, kCriteria),

      SPLIN_INT_FIELD("eval.top_q", eval.top_q, Index, 1, "top_q must be >= 1"),
      SPLIN_INT_FIELD("eval.intrusion_trials", eval.intrusion_trials, Index, 1, "intrusion_trials must be >= 1"),
  };
  return table;
}

#undef SPLIN_INT_FIELD
#undef SPLIN_REAL_FIELD
#undef SPLIN_ENUM_FIELD

inline const Field* find_field(const std::string& key) {
  for (const Field& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

inline void cross_validate(const ExperimentConfig& c, std::vector<ConfigIssue>& issues) {
  auto add = [&](const std::string& key, const std::string& msg) { issues.push_back({0, key, msg}); };
  if (c.dgp.k > c.dgp.n) add("dgp.k", "k must not exceed dgp.n");
  if (c.dgp.dict_kind == DictKind::kIdentity && c.dgp.m != c.dgp.n) add("dgp.dict_kind", "identity needs m == n");
  if (c.dgp.dict_kind == DictKind::kOrthonormalSubset && c.dgp.n > c.dgp.m)
    add("dgp.dict_kind", "orthonormal subset needs n <= m");
  if (c.sweep.k_values.empty()) add("sweep.k_values", "must not be empty");
  for (Index k : c.sweep.k_values)
    if (k < 1 || k > c.sweep.n) add("sweep.k_values", "every k must lie in [1, sweep.n]");
  if (!std::is_sorted(c.sweep.k_values.begin(), c.sweep.k_values.end())) add("sweep.k_values", "must be increasing");
  if (c.sweep.m_values.empty()) add("sweep.m_values", "must not be empty");
  for (Index m : c.sweep.m_values)
    if (m < 1) add("sweep.m_values", "every m must be >= 1");
  if (!std::is_sorted(c.sweep.m_values.begin(), c.sweep.m_values.end())) add("sweep.m_values", "must be increasing");
  if (c.sweep.solver == SolverKind::kExhaustive && !c.sweep.k_values.empty() &&
      binomial_coefficient(c.sweep.n, c.sweep.k_values.back()) > 1e6)
    add("sweep.solver", "exhaustive sweep exceeds the combinatorial budget of 1e6 supports");
}

}  // namespace config_detail

/// Strict parse; every problem found is reported at once.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace config_detail;
  ExperimentConfig cfg;
  std::vector<ConfigIssue> issues;
  std::vector<std::string> seen;
  bool have_experiment = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({line_no, line, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const Field* f = find_field(key);
    if (!f) {
      issues.push_back({line_no, key, "unknown key"});
      continue;
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      issues.push_back({line_no, key, "duplicate key"});
      continue;
    }
    seen.push_back(key);
    try {
      f->set(cfg, value);
      if (key == "experiment") have_experiment = true;
    } catch (const BadValue& e) {
      issues.push_back({line_no, key, e.message});
    }
  }
  if (!have_experiment) issues.push_back({0, "experiment", "missing required key"});
  if (issues.empty()) cross_validate(cfg, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

/// Canonical text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : config_detail::fields()) {
    const std::size_t dot = f.key.find('.');
    const std::string s = dot == std::string::npos ? std::string() : f.key.substr(0, dot);
    if (s != section) {
      out += '\n';
      section = s;
    }
    out += f.key + " = " + f.get(cfg) + '\n';
  }
  return out;
}

inline std::string env_name(const std::string& key) {
  std::string out = "SPLIN_";
  for (char ch : key) out += (ch == '.' || ch == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

/// `lookup` returns the variable's value when set.
inline void apply_env_overrides(ExperimentConfig& cfg,
                                const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  using namespace config_detail;
  std::vector<ConfigIssue> issues;
  for (const Field& f : fields()) {
    const auto value = lookup(env_name(f.key));
    if (!value) continue;
    try {
      f.set(cfg, trim(*value));
    } catch (const BadValue& e) {
      issues.push_back({0, f.key, e.message + " (from " + env_name(f.key) + ")"});
    }
  }
  if (issues.empty()) cross_validate(cfg, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

/// Sets one key from its textual value, as a config line would.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace config_detail;
  const Field* f = find_field(key);
  if (!f) throw ConfigError({{0, key, "unknown key"}});
  try {
    f->set(cfg, trim(value));
  } catch (const BadValue& e) {
    throw ConfigError({{0, key, e.message}});
  }
}

/// Cross-field checks that parse_config applies after reading every line.
inline void validate_config(const ExperimentConfig& cfg) {
  std::vector<ConfigIssue> issues;
  config_detail::cross_validate(cfg, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : config_detail::fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace splin

#endif  // SPLIN_CONFIG_HPP
