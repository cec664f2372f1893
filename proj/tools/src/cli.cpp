#include "phylograd_cli/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "phylograd/engine.hpp"
#include "phylograd/error.hpp"
#include "phylograd/hmc.hpp"
#include "phylograd/model_config.hpp"
#include "phylograd/oracles.hpp"
#include "phylograd/simulate.hpp"
#include "phylograd_cli/bench.hpp"
#include "phylograd_cli/report.hpp"

namespace phylograd::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

std::uint64_t elapsed_ns(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

// To the named file, or to the stream when the path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  } else {
    write_file(path, text);
  }
}

int default_workers() {
  if (const char* env = std::getenv("PHYLOGRAD_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 4096) {
      throw ValidationError(std::string("PHYLOGRAD_WORKERS must be a positive integer, got '") +
                            env + "'");
    }
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Common {
  std::string tree;
  std::string alignment;
  std::string alphabet;
  std::string model_config;
  std::string backend = "serial";
  int workers = 0;  // 0: PHYLOGRAD_WORKERS or hardware threads
  int cbs = 0;      // 0: built-in defaults
  int pbs = 0;
  std::uint64_t seed = 1;
  std::string out;
  bool no_rescaling = false;
};

void add_backend_flags(CLI::App* app, Common& c) {
  app->add_option("--backend", c.backend, "serial or parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));
  app->add_option("--workers", c.workers, "worker threads (default: $PHYLOGRAD_WORKERS)")
      ->check(CLI::PositiveNumber);
  app->add_option("--cbs", c.cbs, "column block size")->check(CLI::PositiveNumber);
  app->add_option("--pbs", c.pbs, "peeling block size")->check(CLI::PositiveNumber);
}

void add_input_flags(CLI::App* app, Common& c, bool required) {
  auto* t = app->add_option("--tree", c.tree, "Newick tree file");
  auto* a = app->add_option("--alignment", c.alignment, "FASTA alignment file");
  if (required) {
    t->required();
    a->required();
  }
  app->add_option("--alphabet", c.alphabet, "nuc or codon (default: from the model)")
      ->check(CLI::IsMember({"nuc", "codon"}));
  app->add_option("--model-config", c.model_config, "model JSON (default: Jukes-Cantor)");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output file (default: stdout)");
  app->add_flag("--no-rescaling", c.no_rescaling, "disable partial-likelihood rescaling");
}

BackendConfig backend_config(const Common& c) {
  BackendConfig cfg;
  cfg.kind = parse_backend_kind(c.backend);
  cfg.workers = c.workers > 0 ? c.workers : default_workers();
  if (cfg.kind == BackendKind::serial) cfg.workers = 1;
  if (c.cbs > 0) {
    cfg.cbs_nucleotide = c.cbs;
    cfg.cbs_large_state = c.cbs;
  }
  if (c.pbs > 0) cfg.pbs = c.pbs;
  return cfg;
}

ModelConfig load_model_config(const Common& c, std::string& text) {
  if (c.model_config.empty()) {
    text.clear();
    return ModelConfig{};
  }
  text = read_file(c.model_config);
  return parse_model_config(text);
}

struct Inputs {
  std::string tree_text;
  std::string alignment_text;
  std::string config_text;
  ModelConfig config;
  Phylogeny tree;
  ModelInstance model;
  PatternizedAlignment data;
  std::string digest;
};

Inputs load_inputs(const Common& c) {
  Inputs in;
  in.config = load_model_config(c, in.config_text);
  const Alphabet alphabet = in.config.alphabet();
  if (!c.alphabet.empty() && parse_alphabet(c.alphabet) != alphabet) {
    throw ValidationError("--alphabet " + c.alphabet + " does not match model '" +
                          in.config.model + "'");
  }
  in.tree_text = read_file(c.tree);
  in.alignment_text = read_file(c.alignment);
  in.tree = parse_newick(in.tree_text);
  in.model = build_model(in.config);
  const GeneticCode& code = GeneticCode::by_name(in.config.genetic_code);
  in.data = compress_patterns(align_to_tree(parse_fasta(in.alignment_text, alphabet, code), in.tree));
  in.digest = hex_digest(fnv1a({in.tree_text, in.alignment_text, to_json(in.config)}));
  return in;
}

json base_report(const char* command, const Inputs& in, const BackendConfig& cfg) {
  return {{"schemaVersion", kSchemaVersion},
          {"command", command},
          {"inputsDigest", in.digest},
          {"tips", in.tree.tip_count()},
          {"states", in.model.states()},
          {"rateCategories", static_cast<int>(in.model.categories.rates.size())},
          {"patterns", in.data.patterns},
          {"columns", in.data.column_total()},
          {"backend", backend_json(cfg)}};
}

EngineOptions engine_options(const Common& c) {
  EngineOptions o;
  o.rescaling = !c.no_rescaling;
  return o;
}

// Integers are branch indices (the branch above node i); anything else is a
// tip name standing for its terminal branch. '#' starts a comment.
std::vector<int> read_branch_set(const std::string& path, const Phylogeny& tree) {
  std::istringstream lines(read_file(path));
  std::vector<int> branches;
  std::string line;
  while (std::getline(lines, line)) {
    line = line.substr(0, line.find('#'));
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      const bool numeric = tok.find_first_not_of("0123456789") == std::string::npos;
      int b = numeric ? std::stoi(tok) : tree.tip_index(tok);
      if (!numeric && b < 0) throw ValidationError("branch set: unknown tip '" + tok + "'");
      if (b >= tree.branch_count()) {
        throw ValidationError("branch set: branch " + tok + " out of range");
      }
      branches.push_back(b);
    }
  }
  if (branches.empty()) throw ValidationError("branch set " + path + " lists no branches");
  return branches;
}

// ---- loglik ----------------------------------------------------------------

int cmd_loglik(const Common& c, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  const Inputs in = load_inputs(c);
  const BackendConfig cfg = backend_config(c);
  Backend backend(cfg);
  LikelihoodEngine engine(in.tree, in.model, in.data, backend, engine_options(c));
  engine.update_transition_matrices();
  engine.postorder_traverse();
  const double ll = engine.log_likelihood();
  if (!std::isfinite(ll)) {
    err << "error: log-likelihood is -infinity: " << engine.diagnostic().value_or("") << '\n';
    return kExitNumerical;
  }
  json report = base_report("loglik", in, cfg);
  report["logLikelihood"] = ll;
  report["gradient"] = json::array();
  report["kernelTimings"] = timings_json(backend.profile().snapshot());
  report["wallTimeNs"] = elapsed_ns(start);
  emit(c.out, dump(report), out);
  return kExitOk;
}

// ---- gradient --------------------------------------------------------------

struct GradientArgs {
  std::string check;
  double fd_step = 1e-5;
  std::string branch_set;
  std::string timings;
};

int cmd_gradient(const Common& c, const GradientArgs& g, std::ostream& out) {
  const auto start = Clock::now();
  const Inputs in = load_inputs(c);
  const BackendConfig cfg = backend_config(c);
  Backend backend(cfg);
  LikelihoodEngine engine(in.tree, in.model, in.data, backend, engine_options(c));
  const GradientReport grad = engine.full_gradient();
  const std::uint64_t wall = elapsed_ns(start);

  json report = base_report("gradient", in, cfg);
  report["logLikelihood"] = grad.log_likelihood;
  report["gradient"] = grad.per_branch;
  report["kernelTimings"] = timings_json(grad.timings);
  report["wallTimeNs"] = wall;

  if (!g.check.empty()) {
    json check = json::object();
    if (g.check == "fd" || g.check == "both") {
      const auto fd = oracle::finite_difference_gradient(in.tree, in.model, in.data, g.fd_step);
      check["fd"] = {{"step", g.fd_step},
                     {"maxRelativeDeviation", max_relative_deviation(grad.per_branch, fd)},
                     {"gradient", fd}};
    }
    if (g.check == "quadratic" || g.check == "both") {
      const auto quad = oracle::quadratic_gradient(in.tree, in.model, in.data);
      check["quadratic"] = {
          {"maxRelativeDeviation", max_relative_deviation(grad.per_branch, quad.per_branch)},
          {"gradient", quad.per_branch}};
    }
    report["check"] = check;
  }
  if (!g.branch_set.empty()) {
    const std::vector<int> branches = read_branch_set(g.branch_set, in.tree);
    report["branchSet"] = {{"branches", branches},
                           {"gradient", aggregate_branches(grad.per_branch, branches)}};
  }
  if (!g.timings.empty()) write_file(g.timings, bench::timing_json(grad.timings));
  emit(c.out, dump(report), out);
  return kExitOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string mode = "kernels";
  std::vector<int> tips;
  std::vector<int> columns;
  int states = 0;
  int rates = 1;
  int iterations = 5;
  std::vector<int> worker_list;
  std::string summary;
  std::string timings;
};

int cmd_bench(const Common& c, BenchArgs b, std::ostream& out) {
  const bool large = b.mode == "columns" || b.mode == "workers";
  if (b.states == 0) b.states = large ? 61 : 4;
  if (b.states != 4 && b.states != 61) throw ValidationError("--states must be 4 or 61");
  if (b.tips.empty()) {
    if (b.mode == "scaling") {
      b.tips = {16, 32, 64, 128};
    } else {
      b.tips = {large ? 62 : 16};
    }
  }
  if (b.columns.empty()) {
    if (b.mode == "columns") {
      b.columns = {1, 64, 256, 1024, 2048};
    } else {
      b.columns = {large ? 1024 : 1000};
    }
  }
  if (b.worker_list.empty()) b.worker_list = {1, 2, 4, 8};
  for (int v : b.tips) {
    if (v < 2) throw ValidationError("--tips entries must be at least 2");
  }
  for (int v : b.columns) {
    if (v < 1) throw ValidationError("--columns entries must be positive");
  }

  std::vector<bench::Row> rows;
  json summary = {{"schemaVersion", kSchemaVersion},
                  {"mode", b.mode},
                  {"states", b.states},
                  {"rateCategories", b.rates},
                  {"iterations", b.iterations},
                  {"seed", c.seed}};
  const BackendConfig cfg = backend_config(c);

  if (b.mode == "kernels") {
    const auto f = bench::make_fixture(b.tips[0], b.columns[0], b.states, b.rates, c.seed);
    Backend backend(cfg);
    const auto m = bench::time_full_gradient(f, backend, b.iterations);
    rows = bench::rows_for(f, cfg, m, "fullGradient");
    summary["medianNs"] = m.median_ns;
    summary["kernels"] = json::parse(bench::timing_json(m.kernels))["kernels"];
    if (!b.timings.empty()) write_file(b.timings, bench::timing_json(m.kernels));
  } else if (b.mode == "scaling") {
    std::vector<double> n, full, quad;
    for (int tips : b.tips) {
      const auto f = bench::make_fixture(tips, b.columns[0], b.states, b.rates, c.seed);
      Backend backend(cfg);
      const auto m = bench::time_full_gradient(f, backend, b.iterations);
      const auto q = bench::time_quadratic_oracle(f, b.iterations);
      auto r = bench::rows_for(f, cfg, m, "fullGradient");
      rows.insert(rows.end(), r.begin(), r.end());
      bench::Row qr = r.back();
      qr.kernel = "quadraticOracle";
      qr.ns_total = q.total_ns;
      qr.calls = static_cast<std::uint64_t>(q.iterations);
      rows.push_back(qr);
      n.push_back(tips);
      full.push_back(static_cast<double>(m.median_ns));
      quad.push_back(static_cast<double>(q.median_ns));
    }
    summary["tips"] = b.tips;
    summary["fullGradientMedianNs"] = full;
    summary["quadraticOracleMedianNs"] = quad;
    if (n.size() >= 2) {
      summary["fullGradientExponent"] = bench::fit_exponent(n, full);
      summary["quadraticOracleExponent"] = bench::fit_exponent(n, quad);
    }
  } else if (b.mode == "columns") {
    std::vector<double> throughput;
    json per = json::array();
    for (int cols : b.columns) {
      const auto f = bench::make_fixture(b.tips[0], cols, b.states, b.rates, c.seed);
      Backend backend(cfg);
      const auto m = bench::time_full_gradient(f, backend, b.iterations);
      auto r = bench::rows_for(f, cfg, m, "fullGradient");
      rows.insert(rows.end(), r.begin(), r.end());
      const double tp = cols * 1e9 / static_cast<double>(m.median_ns);
      throughput.push_back(tp);
      per.push_back({{"columns", cols}, {"medianNs", m.median_ns}, {"columnsPerSecond", tp}});
    }
    summary["sweep"] = per;
    for (std::size_t i = 0; i < b.columns.size(); ++i) {
      for (std::size_t j = 0; j < b.columns.size(); ++j) {
        if (b.columns[i] == 1024 && b.columns[j] == 2048) {
          summary["throughputRatio2048vs1024"] = throughput[j] / throughput[i];
        }
      }
    }
  } else {  // workers
    const auto f = bench::make_fixture(b.tips[0], b.columns[0], b.states, b.rates, c.seed);
    BackendConfig serial_cfg = cfg;
    serial_cfg.kind = BackendKind::serial;
    serial_cfg.workers = 1;
    Backend serial(serial_cfg);
    const auto base = bench::time_full_gradient(f, serial, b.iterations);
    auto r = bench::rows_for(f, serial_cfg, base, "fullGradient");
    rows.insert(rows.end(), r.begin(), r.end());
    json per = json::array();
    for (int w : b.worker_list) {
      BackendConfig pc = cfg;
      pc.kind = BackendKind::parallel;
      pc.workers = w;
      Backend parallel(pc);
      const auto m = bench::time_full_gradient(f, parallel, b.iterations);
      auto pr = bench::rows_for(f, pc, m, "fullGradient");
      rows.insert(rows.end(), pr.begin(), pr.end());
      per.push_back({{"workers", w},
                     {"medianNs", m.median_ns},
                     {"speedup", static_cast<double>(base.median_ns) / m.median_ns}});
    }
    summary["serialMedianNs"] = base.median_ns;
    summary["hardwareThreads"] = std::thread::hardware_concurrency();
    summary["sweep"] = per;
  }

  std::ostringstream csv;
  bench::write_csv(csv, rows);
  emit(c.out, csv.str(), out);
  if (!b.summary.empty()) write_file(b.summary, dump(summary));
  return kExitOk;
}

// ---- hmc -------------------------------------------------------------------

struct HmcArgs {
  HmcConfig config;
  std::string parameterization = "lengths";
  std::vector<double> mass;
  std::string chain;
  std::string diagnostics;
};

int cmd_hmc(const Common& c, HmcArgs h, std::ostream& out) {
  const Inputs in = load_inputs(c);
  const BackendConfig cfg = backend_config(c);
  Backend backend(cfg);
  LikelihoodEngine engine(in.tree, in.model, in.data, backend, engine_options(c));
  h.config.seed = c.seed;
  h.config.parameterization = parse_parameterization(h.parameterization);
  h.config.mass_diagonal = h.mass;
  const HmcResult r = hmc_sample(engine, h.config);

  const char* prefix =
      h.config.parameterization == Parameterization::branch_lengths ? "length_" : "scalar_";
  std::ostringstream tsv;
  tsv.precision(17);
  tsv << "iteration\tlogPosterior";
  for (int b : r.free_branches) tsv << '\t' << prefix << b;
  tsv << '\n';
  for (std::size_t i = 0; i < r.chain.size(); ++i) {
    tsv << i << '\t' << r.log_posterior[i];
    for (double v : r.chain[i]) tsv << '\t' << v;
    tsv << '\n';
  }

  std::uint64_t iter_total = 0;
  for (auto ns : r.iteration_ns) iter_total += ns;
  json diag = {
      {"schemaVersion", kSchemaVersion},
      {"command", "hmc"},
      {"inputsDigest", in.digest},
      {"backend", backend_json(cfg)},
      {"parameterization", h.parameterization},
      {"stepSize", h.config.step_size},
      {"tunedStepSize", r.tuned_step_size},
      {"leapfrogSteps", h.config.leapfrog_steps},
      {"iterations", h.config.iterations},
      {"warmup", h.config.warmup},
      {"seed", h.config.seed},
      {"freeBranches", r.free_branches},
      {"acceptanceRate", r.acceptance_rate},
      {"divergences", r.divergences},
      {"warmupDivergences", r.warmup_divergences},
      {"ess", r.ess},
      {"posteriorMean", r.posterior_mean},
      {"posteriorSd", r.posterior_sd},
      {"meanIterationNs",
       r.iteration_ns.empty() ? 0.0 : static_cast<double>(iter_total) / r.iteration_ns.size()},
      {"gradientCalls", r.gradient_calls},
      {"gradientNs", r.gradient_ns},
      {"wallTimeNs", r.total_ns},
  };
  // Whatever has no file goes to stdout, chain first.
  emit(h.chain, tsv.str(), out);
  emit(!h.diagnostics.empty() ? h.diagnostics : c.out, dump(diag), out);
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  int tips = 8;
  int columns = 100;
  std::string shape = "random";
  double min_length = 0.02;
  double max_length = 0.4;
  double length = 0.1;
  bool pin_root = false;
  bool compress = false;
  std::string tree_out;
  std::string alignment_out;
};

int cmd_simulate(const Common& c, const SimulateArgs& s, std::ostream& out) {
  std::string config_text;
  const ModelConfig config = load_model_config(c, config_text);
  const ModelInstance model = build_model(config);
  Rng rng(c.seed);
  Phylogeny tree;
  if (!c.tree.empty()) {
    tree = parse_newick(read_file(c.tree));
  } else if (s.tips < 2) {
    throw ValidationError("--tips must be at least 2");
  } else if (s.shape == "balanced") {
    tree = balanced_tree(s.tips, s.length);
  } else if (s.shape == "caterpillar") {
    tree = caterpillar_tree(s.tips, s.length);
  } else {
    tree = random_tree(s.tips, rng, s.min_length, s.max_length);
  }
  if (s.pin_root) tree.set_branch_length(tree.children(tree.root())[0], 0.0);
  const RawAlignment raw = simulate_alignment(tree, model, s.columns, rng);
  const GeneticCode& code = GeneticCode::by_name(config.genetic_code);
  const std::string fasta = to_fasta(raw, config.alphabet(), code);
  emit(s.tree_out, to_newick(tree), out);
  emit(s.alignment_out, fasta, out);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"phylograd: linear-time phylogenetic likelihood gradients"};
  app.require_subcommand(1);

  Common lc, gc, bc, hc, sc;
  GradientArgs ga;
  BenchArgs ba;
  HmcArgs ha;
  SimulateArgs sa;

  auto* loglik = app.add_subcommand("loglik", "log-likelihood of an alignment on a fixed tree");
  add_input_flags(loglik, lc, true);
  add_backend_flags(loglik, lc);

  auto* gradient = app.add_subcommand("gradient", "log-likelihood and per-branch gradient");
  add_input_flags(gradient, gc, true);
  add_backend_flags(gradient, gc);
  gradient->add_option("--check", ga.check, "compare against oracles")
      ->check(CLI::IsMember({"fd", "quadratic", "both"}));
  gradient->add_option("--fd-step", ga.fd_step, "finite-difference step")
      ->check(CLI::PositiveNumber);
  gradient->add_option("--branch-set", ga.branch_set, "file listing branches to aggregate");
  gradient->add_option("--timings", ga.timings, "write per-kernel timing JSON here");

  auto* bench = app.add_subcommand("bench", "timing sweeps over simulated fixtures");
  add_backend_flags(bench, bc);
  bench->add_option("--mode", ba.mode, "kernels, scaling, columns or workers")
      ->check(CLI::IsMember({"kernels", "scaling", "columns", "workers"}));
  bench->add_option("--tips", ba.tips, "tip counts")->delimiter(',');
  bench->add_option("--columns", ba.columns, "column counts")->delimiter(',');
  bench->add_option("--states", ba.states, "4 or 61");
  bench->add_option("--rates", ba.rates, "gamma rate categories")->check(CLI::PositiveNumber);
  bench->add_option("--iterations", ba.iterations, "timed iterations per point")
      ->check(CLI::PositiveNumber);
  bench->add_option("--workers-list", ba.worker_list, "worker counts for --mode workers")
      ->delimiter(',');
  bench->add_option("--summary", ba.summary, "write the summary JSON here");
  bench->add_option("--timings", ba.timings, "write per-kernel timing JSON here");
  bench->add_option("--seed", bc.seed, "fixture seed");
  bench->add_option("--out", bc.out, "CSV output file (default: stdout)");

  auto* hmc = app.add_subcommand("hmc", "Hamiltonian Monte Carlo over branch parameters");
  add_input_flags(hmc, hc, true);
  add_backend_flags(hmc, hc);
  hmc->add_option("--step-size", ha.config.step_size)->check(CLI::PositiveNumber);
  hmc->add_option("--leapfrog-steps", ha.config.leapfrog_steps)->check(CLI::PositiveNumber);
  hmc->add_option("--iterations", ha.config.iterations)->check(CLI::PositiveNumber);
  hmc->add_option("--warmup", ha.config.warmup, "step-size tuning iterations");
  hmc->add_option("--target-acceptance", ha.config.target_acceptance);
  hmc->add_option("--parameterization", ha.parameterization, "lengths or scalars");
  hmc->add_option("--mass", ha.mass, "diagonal mass, one entry per free branch")
      ->delimiter(',');
  hmc->add_option("--chain", ha.chain, "chain TSV file");
  hmc->add_option("--diagnostics", ha.diagnostics, "diagnostics JSON file");

  auto* simulate = app.add_subcommand("simulate", "random tree and simulated alignment");
  simulate->add_option("--tree", sc.tree, "simulate on this Newick tree instead");
  simulate->add_option("--model-config", sc.model_config, "model JSON (default: Jukes-Cantor)");
  simulate->add_option("--seed", sc.seed, "random seed");
  simulate->add_option("--tips", sa.tips, "tip count");
  simulate->add_option("--columns", sa.columns, "alignment columns")->check(CLI::PositiveNumber);
  simulate->add_option("--shape", sa.shape, "random, balanced or caterpillar")
      ->check(CLI::IsMember({"random", "balanced", "caterpillar"}));
  simulate->add_option("--min-length", sa.min_length)->check(CLI::NonNegativeNumber);
  simulate->add_option("--max-length", sa.max_length)->check(CLI::NonNegativeNumber);
  simulate->add_option("--length", sa.length, "branch length for balanced/caterpillar")
      ->check(CLI::NonNegativeNumber);
  simulate->add_flag("--pin-root", sa.pin_root, "set one root branch to zero");
  simulate->add_option("--tree-out", sa.tree_out, "Newick output (default: stdout)");
  simulate->add_option("--alignment-out", sa.alignment_out, "FASTA output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (loglik->parsed()) return cmd_loglik(lc, out, err);
    if (gradient->parsed()) return cmd_gradient(gc, ga, out);
    if (bench->parsed()) return cmd_bench(bc, ba, out);
    if (hmc->parsed()) return cmd_hmc(hc, ha, out);
    if (simulate->parsed()) return cmd_simulate(sc, sa, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace phylograd::cli
