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

#ifndef SPLIN_RUNNER_HPP
#define SPLIN_RUNNER_HPP

#include <splin/config.hpp>
#include <splin/csv.hpp>
#include <splin/dict_learning.hpp>
#include <splin/evalmetrics.hpp>
#include <splin/heatmap.hpp>
#include <splin/ident_check.hpp>
#include <splin/phase_lab.hpp>
#include <splin/sae.hpp>
#include <splin/solvers.hpp>
#include <splin/splb.hpp>
#include <splin/synthdgp.hpp>

#include <openssl/evp.h>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#ifndef SPLIN_VERSION
#define SPLIN_VERSION "0.0.0"
#endif

namespace splin {

using Json = nlohmann::ordered_json;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string tool_version = SPLIN_VERSION;
  std::string timestamp;  // UTC; SOURCE_DATE_EPOCH when set
  std::vector<ManifestEntry> files;
};

/// Files whose digest no longer matches the disk contents.
inline std::vector<std::string> verify_manifest(const RunManifest& m, const std::string& dir) {
  std::vector<std::string> bad;
  for (const auto& f : m.files) {
    const std::string p = (std::filesystem::path(dir) / f.path).string();
    if (!std::filesystem::exists(p) || sha256_hex(read_file(p)) != f.sha256) bad.push_back(f.path);
  }
  return bad;
}

inline Json to_json(const RunManifest& m) {
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"experiment", m.experiment}, {"config_hash", m.config_hash}, {"tool_version", m.tool_version},
          {"timestamp", m.timestamp}, {"files", files}};
}

inline Json to_json(const RecoveryReport& r) {
  Json perm = Json::array();
  for (const auto& u : r.permutation)
    perm.push_back({{"true", u.true_index}, {"est", u.est_index}, {"sign", u.sign}, {"score", u.score}});
  return {{"mcc", r.mcc},
          {"support_precision", r.support_precision},
          {"support_recall", r.support_recall},
          {"relative_l2", r.relative_l2},
          {"permutation", perm},
          {"spurious_est", r.spurious_est},
          {"zero_variance_true", r.zero_variance_true},
          {"zero_variance_est", r.zero_variance_est}};
}

inline Json to_json(const InterpretabilityScore& s) {
  return {{"mean", s.mean}, {"per_unit", s.per_unit}, {"zero_variance_units", s.zero_variance_units}};
}

inline Json to_json(const IntrusionResult& r) {
  return {{"accuracy", r.accuracy}, {"chance", r.chance}, {"trials", r.trials}, {"skipped", r.skipped}};
}

inline Json to_json(const AdditivityStats& s) {
  return {{"mean", s.mean},
          {"min", s.min},
          {"baseline_mean", s.baseline_mean},
          {"evaluated", s.cosines.size()},
          {"skipped", s.skipped}};
}

inline Json to_json(const SignTest& t) {
  return {{"wins", t.wins}, {"losses", t.losses}, {"ties", t.ties}, {"p_value", t.p_value}};
}

namespace detail {

inline std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects outputs and their digests.
class OutputSink {
 public:
  OutputSink(std::string dir, OutputFormat format) : dir_(std::move(dir)), format_(format) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_ + "': " + ec.message());
  }

  void write(const std::string& rel, const std::string& bytes) {
    const std::filesystem::path p = std::filesystem::path(dir_) / rel;
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for '" + rel + "': " + ec.message());
    write_file(p.string(), bytes);
    entries_.push_back({rel, sha256_hex(bytes), bytes.size()});
  }
  void json(const std::string& stem, const Json& j) { write(stem + ".json", j.dump(2) + "\n"); }
  void splb(const std::string& stem, const SplbFile& f) { write(stem + ".splb", encode_splb(f)); }

  /// CSV or a JSON {columns, rows} object, per the run's format.
  void table(const std::string& stem, const CsvTable& t) {
    if (format_ == OutputFormat::kCsv) {
      write(stem + ".csv", t.str());
      return;
    }
    Json rows = Json::array();
    for (const auto& r : t.rows()) {
      Json row = Json::array();
      for (const auto& cell : r) {
        try {
          row.push_back(parse_double(cell));
        } catch (const IoError&) {
          row.push_back(cell);
        }
      }
      rows.push_back(row);
    }
    json(stem, Json{{"columns", t.header()}, {"rows", rows}});
  }

  const std::string& dir() const { return dir_; }
  std::vector<ManifestEntry> entries() const { return entries_; }

 private:
  std::string dir_;
  OutputFormat format_;
  std::vector<ManifestEntry> entries_;
};

struct SyntheticData {
  Dictionary truth;
  std::vector<LatentCode> codes;
  ObservationBatch batch;
};

inline SyntheticData make_data(const ExperimentConfig& cfg) {
  const DgpSection& d = cfg.dgp;
  SyntheticData s;
  s.truth = sample_dictionary(d.m, d.n, d.dict_kind, derive_seed(cfg.seed, "dgp-dict"));
  s.codes = sample_codes(d.n, d.k, d.samples, d.value_dist, derive_seed(cfg.seed, "dgp-codes"));
  s.batch = observe(s.truth, s.codes, d.noise_sigma, derive_seed(cfg.seed, "dgp-noise"), "truth");
  return s;
}

inline std::string provenance_json(const ExperimentConfig& cfg) {
  return Json{{"dictionary_id", "truth"},
              {"noise_sigma", cfg.dgp.noise_sigma},
              {"seed", cfg.seed},
              {"value_dist", std::string(to_string(cfg.dgp.value_dist))},
              {"dict_kind", std::string(to_string(cfg.dgp.dict_kind))}}
      .dump();
}

inline SolverConfig solver_config(const ExperimentConfig& cfg) {
  return SolverConfig{cfg.solver.lambda, cfg.solver.max_iters, cfg.solver.tol, cfg.solver.step_rule};
}

inline CsvTable codes_table(const Matrix& codes_nd) {
  std::vector<std::string> header{"sample"};
  for (Index j = 0; j < codes_nd.rows(); ++j) header.push_back("z" + std::to_string(j));
  CsvTable t(header);
  for (Index i = 0; i < codes_nd.cols(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (Index j = 0; j < codes_nd.rows(); ++j) row.push_back(format_double(codes_nd(j, i)));
    t.add_row(std::move(row));
  }
  return t;
}

inline CsvTable dict_trace_table(const DictLearnTrace& tr) {
  CsvTable t({"round", "loss", "reconstruction", "mean_sparsity", "dictionary_change", "dead_atoms"});
  for (std::size_t r = 0; r < tr.loss.size(); ++r)
    t.add_row({std::to_string(r + 1), format_double(tr.loss[r]), format_double(tr.reconstruction[r]),
               format_double(tr.mean_sparsity[r]), format_double(tr.dictionary_change[r]),
               std::to_string(tr.dead_atoms[r])});
  return t;
}

inline DictLearnConfig dict_config(const ExperimentConfig& cfg) {
  DictLearnConfig d;
  d.outer_rounds = cfg.dict.rounds;
  d.inner = solver_config(cfg);
  d.update_rule = cfg.dict.update_rule;
  d.dead_atom_policy = cfg.dict.dead_atom_policy;
  d.batch_size = cfg.dict.batch_size;
  return d;
}

inline LearnResult learn_with_snapshots(const ExperimentConfig& cfg, const ObservationBatch& batch, OutputSink& out) {
  SnapshotFn snap;
  if (cfg.snapshot_every > 0)
    snap = [&](int round, const Dictionary& d) {
      if (round % cfg.snapshot_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof(name), "snapshots/dictionary_round_%04d", round);
      out.splb(name, dictionary_splb(d));
    };
  return learn(batch, cfg.dict.n_atoms, dict_config(cfg), derive_seed(cfg.seed, "dict-learn"), snap);
}

// Rows are samples, as evalmetrics expects.
inline Matrix samples_by_units(const Matrix& codes_nd) { return codes_nd.transpose(); }

inline void run_gen(const ExperimentConfig& cfg, OutputSink& out) {
  const SyntheticData s = make_data(cfg);
  out.splb("truth_dictionary", dictionary_splb(s.truth));
  out.splb("observations", observations_splb(s.batch, provenance_json(cfg)));
  out.table("codes", codes_table(stack_codes(s.codes)));
  const SuperpositionReport sp = superposition_check(s.truth);
  out.json("dgp_summary", Json{{"m", cfg.dgp.m},
                               {"n", cfg.dgp.n},
                               {"k", cfg.dgp.k},
                               {"samples", cfg.dgp.samples},
                               {"coherence", sp.coherence},
                               {"is_superposed", sp.is_superposed},
                               {"offending_pairs", sp.offending_pairs}});
}

inline void run_solve(const ExperimentConfig& cfg, OutputSink& out) {
  const SyntheticData s = make_data(cfg);
  const Matrix& y = s.batch.samples();
  const auto sols = solve_batch(s.truth, y, cfg.solver.kind, solver_config(cfg), std::max<Index>(cfg.dgp.k, 1), cfg.jobs);
  Matrix est(cfg.dgp.n, y.cols());
  double objective_sum = 0.0, iters = 0.0, converged = 0.0;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    est.col(Index(i)) = sols[i].code;
    objective_sum += objective(s.truth, y.col(Index(i)), sols[i].code, cfg.solver.lambda);
    iters += sols[i].iterations_used;
    converged += sols[i].converged ? 1.0 : 0.0;
  }
  const double count = double(sols.size());
  out.table("codes", codes_table(est));
  out.json("solve_report",
           Json{{"solver", std::string(to_string(cfg.solver.kind))},
                {"mean_objective", objective_sum / count},
                {"mean_iterations", iters / count},
                {"converged_fraction", converged / count},
                {"recovery", to_json(match_codes(samples_by_units(stack_codes(s.codes)), samples_by_units(est)))}});
}

inline void run_learn_dict(const ExperimentConfig& cfg, OutputSink& out) {
  const SyntheticData s = make_data(cfg);
  const LearnResult r = learn_with_snapshots(cfg, s.batch, out);
  out.splb("learned_dictionary", dictionary_splb(r.dictionary));
  out.table("dict_trace", dict_trace_table(r.trace));
  out.json("recovery_report", to_json(match_dictionaries(s.truth, r.dictionary)));
}

inline void run_train_sae(const ExperimentConfig& cfg, OutputSink& out) {
  const SyntheticData s = make_data(cfg);
  SaeTrainConfig tc;
  tc.lambda = cfg.sae.lambda;
  tc.learning_rate = cfg.sae.learning_rate;
  tc.epochs = cfg.sae.epochs;
  tc.batch_size = cfg.sae.batch_size;
  tc.tie_weights = cfg.sae.tie_weights;
  tc.seed = derive_seed(cfg.seed, "sae");
  const SaeTrainResult r = train_sae(s.batch, cfg.sae.n_atoms, tc);
  out.splb("sae", sae_splb(r.params));
  CsvTable trace({"epoch", "loss"});
  for (std::size_t e = 0; e < r.loss_trace.size(); ++e)
    trace.add_row({std::to_string(e + 1), format_double(r.loss_trace[e])});
  out.table("sae_trace", trace);
  const Index probe = std::min<Index>(128, s.batch.count());
  const AmortizationGap gap = amortization_gap(r.params, s.batch.samples().leftCols(probe), cfg.sae.lambda);
  const Matrix codes = encode_batch(r.params, s.batch.samples());
  out.json("sae_report",
           Json{{"dictionary_recovery", to_json(match_dictionaries(s.truth, r.params.dictionary()))},
                {"code_recovery", to_json(match_codes(samples_by_units(stack_codes(s.codes)), samples_by_units(codes)))},
                {"amortization_gap_mean", gap.mean},
                {"amortization_gap_samples", probe}});
}

inline void run_identcheck(const ExperimentConfig& cfg, OutputSink& out) {
  const IdentSection& id = cfg.ident;
  struct SeedResult {
    double accuracy = 0.0, final_loss = 0.0, r2 = 0.0, base_r2 = 0.0, additivity = 0.0;
  };
  std::vector<SeedResult> res(static_cast<std::size_t>(id.seeds));
  ClassifierTrainConfig tc;
  tc.epochs = id.epochs;
  tc.learning_rate = id.learning_rate;
  tc.n_train = id.n_train;
  parallel_for(res.size(), cfg.jobs, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(cfg.seed, "ident", {std::uint64_t(i)});
    const ClusterDgpSpec spec = make_cluster_spec(id.n_classes, id.latent_dim, id.generator, s, id.spread);
    const ClassifierTrainResult r = train_classifier(spec, tc, s);
    const LinearityReport rep = linearity_score(r.model, initial_classifier(spec, tc, s), spec, id.n_test, s);
    res[i] = {r.train_accuracy, r.loss_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : r.loss_trace.back(),
              rep.r_squared, rep.baseline_r_squared, rep.additivity.mean};
  });
  CsvTable t({"seed_index", "train_accuracy", "final_loss", "r_squared", "baseline_r_squared", "additivity_mean"});
  std::vector<double> r2, base;
  for (std::size_t i = 0; i < res.size(); ++i) {
    t.add_row({std::to_string(i), format_double(res[i].accuracy), format_double(res[i].final_loss),
               format_double(res[i].r2), format_double(res[i].base_r2), format_double(res[i].additivity)});
    r2.push_back(res[i].r2);
    base.push_back(res[i].base_r2);
  }
  out.table("identcheck", t);

  // Additivity battery: a random linear map against the configured generator.
  const Index d = id.latent_dim;
  const Index k = std::max<Index>(1, std::min<Index>(2, d / 2));
  const Generator g(GeneratorSpec{id.generator, d, d, derive_seed(cfg.seed, "ident-generator"), std::nullopt});
  Rng rng = make_rng(derive_seed(cfg.seed, "ident-linear"));
  const Matrix phi = gaussian_matrix(d, d, rng);
  const LatentMap lin = [&](const Vector& z) -> Vector { return phi * z; };
  const LatentMap gen = [&](const Vector& z) -> Vector { return g.apply(z); };
  const auto pairs = random_pairs(d, k, id.pairs, ValueDist::kUniformSigned, derive_seed(cfg.seed, "ident-pairs"));
  const AdditivityStats lin_stats = additivity_test(lin, pairs, PairPolicy::kAny);
  const AdditivityStats gen_stats = additivity_test(gen, pairs, PairPolicy::kAny);
  Json summary{{"generator", std::string(to_string(id.generator))},
               {"seeds", id.seeds},
               {"trained_beats_baseline", sign_test(r2, base).wins},
               {"r_squared_sign_test", to_json(sign_test(r2, base))},
               {"additivity_linear", to_json(lin_stats)},
               {"additivity_generator", to_json(gen_stats)}};
  if (lin_stats.cosines.size() == gen_stats.cosines.size())
    summary["additivity_linear_vs_generator"] = to_json(sign_test(lin_stats.cosines, gen_stats.cosines));
  out.json("identcheck_summary", summary);
}

inline void run_eval(const ExperimentConfig& cfg, OutputSink& out) {
  const SyntheticData s = make_data(cfg);
  const BatchSolution inf = ista_batch(s.truth, s.batch.samples(), solver_config(cfg));
  const Matrix truth = samples_by_units(stack_codes(s.codes));
  const Matrix est = samples_by_units(inf.codes);
  out.json("eval_report",
           Json{{"recovery", to_json(match_codes(truth, est))},
                {"interpretability", to_json(interpretability_proxy(est, truth))},
                {"intrusion", to_json(intrusion_task(est, truth, cfg.eval.top_q, int(cfg.eval.intrusion_trials),
                                                     derive_seed(cfg.seed, "intrusion")))}});
}

inline void run_phase(const ExperimentConfig& cfg, OutputSink& out) {
  PhaseSweepConfig pc;
  pc.n = cfg.sweep.n;
  pc.k_values = cfg.sweep.k_values;
  pc.m_values = cfg.sweep.m_values;
  pc.trials_per_cell = cfg.sweep.trials;
  pc.solver = cfg.sweep.solver;
  pc.criterion = cfg.sweep.criterion;
  pc.ista = solver_config(cfg);
  pc.seed = derive_seed(cfg.seed, "phase-sweep");
  pc.jobs = cfg.jobs;
  const PhaseGrid grid = run_phase_sweep(pc);
  CsvTable t({"k", "m", "trials", "successes", "failures", "rate"});
  for (std::size_t ki = 0; ki < grid.k_values.size(); ++ki)
    for (std::size_t mi = 0; mi < grid.m_values.size(); ++mi)
      t.add_row({std::to_string(grid.k_values[ki]), std::to_string(grid.m_values[mi]),
                 std::to_string(grid.trials_per_cell), std::to_string(grid.successes(Index(ki), Index(mi))),
                 std::to_string(grid.failures(Index(ki), Index(mi))), format_double(grid.rate(Index(ki), Index(mi)))});
  out.table("phase_grid", t);
  const BoundaryFit fit = fit_boundary(grid);
  const MonotonicityReport mono = check_monotonicity(grid);
  Json rows = Json::array();
  for (std::size_t ki = 0; ki < grid.k_values.size(); ++ki)
    rows.push_back({{"k", grid.k_values[ki]},
                    {"m_star", fit.m_star[ki]},
                    {"flagged", bool(fit.flagged[ki])},
                    {"theoretical_min_m", theoretical_min_m(grid.k_values[ki], grid.n)}});
  out.json("boundary", Json{{"n", grid.n},
                            {"solver", std::string(to_string(grid.solver))},
                            {"criterion", std::string(to_string(grid.criterion))},
                            {"c", fit.c},
                            {"pearson_r", fit.pearson_r},
                            {"per_k", rows},
                            {"violations_in_m", mono.violations_in_m},
                            {"violations_in_k", mono.violations_in_k}});
  out.write("phase_heatmap.svg", emit_heatmap(grid, &fit));
}

inline void run_pipeline(const ExperimentConfig& cfg, OutputSink& out) {
  const SyntheticData s = make_data(cfg);
  const LearnResult r = learn_with_snapshots(cfg, s.batch, out);
  out.splb("learned_dictionary", dictionary_splb(r.dictionary));
  out.table("dict_trace", dict_trace_table(r.trace));
  const BatchSolution inf = ista_batch(r.dictionary, s.batch.samples(), solver_config(cfg));
  const Matrix truth = samples_by_units(stack_codes(s.codes));
  const Matrix est = samples_by_units(inf.codes);
  out.json("recovery_report", Json{{"dictionary", to_json(match_dictionaries(s.truth, r.dictionary))},
                                   {"codes", to_json(match_codes(truth, est))}});
  out.json("interpretability_score", to_json(interpretability_proxy(est, truth)));
}

}  // namespace detail

/// Runs the configured experiment into cfg.output_dir and writes
/// manifest.json (not listed in itself).
inline RunManifest run(const ExperimentConfig& cfg) {
  detail::OutputSink out(cfg.output_dir, cfg.format);
  const std::string config_text = serialize_config(cfg);
  out.write("config.txt", config_text);
  switch (cfg.experiment) {
    case ExperimentKind::kGen: detail::run_gen(cfg, out); break;
    case ExperimentKind::kSolve: detail::run_solve(cfg, out); break;
    case ExperimentKind::kLearnDict: detail::run_learn_dict(cfg, out); break;
    case ExperimentKind::kTrainSae: detail::run_train_sae(cfg, out); break;
    case ExperimentKind::kIdentCheck: detail::run_identcheck(cfg, out); break;
    case ExperimentKind::kEval: detail::run_eval(cfg, out); break;
    case ExperimentKind::kPhaseSweep: detail::run_phase(cfg, out); break;
    case ExperimentKind::kPipeline: detail::run_pipeline(cfg, out); break;
  }
  RunManifest m;
  m.experiment = std::string(to_string(cfg.experiment));
  m.config_hash = sha256_hex(config_text);
  m.timestamp = detail::utc_timestamp();
  m.files = out.entries();
  write_file((std::filesystem::path(cfg.output_dir) / "manifest.json").string(), to_json(m).dump(2) + "\n");
  return m;
}

/// Process exit code for an exception escaping run(): config 2,
/// divergence 3, I/O 4, anything else 1.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const InvalidArgument*>(&e)) return 2;
  return 1;
}

}  // namespace splin

#endif  // SPLIN_RUNNER_HPP
