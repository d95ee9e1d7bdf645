// k_finder: generate data, identify the number of clusters, verify conditions,
// and run the elbow baseline or the 3-cover gadget. Reports are key=value lines.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kfinder/kfinder.hpp"

namespace {

using namespace kfinder;

struct Options {
  std::string input, output, labels, report, points;
  std::uint64_t seed = 0;
  std::optional<double> w0;
  double gamma = 5.0;
  std::string mode = "exact";
  std::string condition = "weak-ntsc";
  Index trials = 1000;
  Index directions = 16;
  Index kmax = 10;
  Index restarts = 10;
  std::optional<Index> n;
  Index universe = 9;
  std::string kind = "yes";
  std::vector<std::string> sets;
  bool timing = false;
};

struct Tuning {
  AlgoConstants constants;
  ConvexOptions convex;
};

/// Applies --set KEY=VALUE overrides; unknown keys are input errors.
Tuning apply_overrides(const std::vector<std::string>& sets) {
  Tuning t;
  auto& c = t.constants;
  const std::map<std::string, double*> reals = {
      {"r_coeff", &c.r_coeff},           {"prune_c", &c.prune_c},
      {"prune_exp", &c.prune_exp},       {"sep_test_coeff", &c.sep_test_coeff},
      {"sep_test_exp", &c.sep_test_exp}, {"stop_fraction", &c.stop_fraction},
      {"seed_fraction", &c.seed_fraction}, {"w_step", &c.w_step},
      {"mstar_coeff", &c.mstar_coeff},   {"mstar_exp", &c.mstar_exp},
      {"convex_tol", &t.convex.tol}};
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects KEY=VALUE, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (auto it = reals.find(key); it != reals.end()) {
      auto v = io::to_double(value);
      if (!v) throw ParseError("bad value for " + key);
      *it->second = *v;
    } else if (key == "tight_floor" || key == "convex_max_iter") {
      auto v = io::to_integer<Index>(value);
      if (!v) throw ParseError("bad value for " + key);
      (key == "tight_floor" ? c.tight_floor : t.convex.max_iter) = *v;
    } else if (key == "projected_nu" || key == "projected_program") {
      if (value != "true" && value != "false") throw ParseError("bad value for " + key);
      (key == "projected_nu" ? c.projected_nu : c.projected_program) = value == "true";
    } else {
      throw ParseError("unknown constant '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return t;
}

void add_constants(Report& r, const Tuning& t) {
  const auto& c = t.constants;
  r.add("constants.r_coeff", c.r_coeff);
  r.add("constants.prune_c", c.prune_c);
  r.add("constants.prune_exp", c.prune_exp);
  r.add("constants.sep_test_coeff", c.sep_test_coeff);
  r.add("constants.sep_test_exp", c.sep_test_exp);
  r.add("constants.stop_fraction", c.stop_fraction);
  r.add("constants.seed_fraction", c.seed_fraction);
  r.add("constants.tight_floor", c.tight_floor);
  r.add("constants.w_step", c.w_step);
  r.add("constants.mstar_coeff", c.mstar_coeff);
  r.add("constants.mstar_exp", c.mstar_exp);
  r.add("constants.projected_nu", c.projected_nu);
  r.add("constants.projected_program", c.projected_program);
  r.add("constants.convex_tol", t.convex.tol);
  r.add("constants.convex_max_iter", t.convex.max_iter);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

void add_run(Report& r, const RunReport& run) {
  r.add("algorithm", run.algorithm);
  r.add("k_hat", run.k_hat);
  r.add("w0", run.w0);
  r.add("subspace_rank", run.subspace_rank);
  r.add("seed_size", run.seed_size);
  r.add("stop_size", run.stop_size);
  for (Index j = 0; j < run.iterations.size(); ++j) {
    const auto& it = run.iterations[j];
    const std::string p = "iteration." + std::to_string(j + 1) + ".";
    r.add(p + "seed_center", it.seed_center);
    r.add(p + "seed_sigma", it.seed_sigma);
    r.add(p + "seed_mean", it.seed_mean);
    if (run.algorithm == "identify-k-convex") {
      r.add(p + "m_base", it.m_base);
      r.add(p + "m_star", it.m_star);
      r.add(p + "opt_base", it.opt_base);
      r.add(p + "opt_star", it.opt_star);
      r.add(p + "rounding_ratio", it.rounding_ratio);
      r.add(p + "mass_deficit", it.mass_deficit);
    } else {
      r.add(p + "radius", it.radius);
    }
    r.add(p + "peeled_size", it.peeled.size());
    r.add(p + "peeled_sigma", it.peeled_sigma);
    r.add(p + "peeled", it.peeled);
  }
  r.add("residual_size", run.residual.size());
  r.add("residual", run.residual);
  for (Index t = 0; t < run.w_hat_trace.size(); ++t) {
    const auto& w = run.w_hat_trace[t];
    const std::string p = "w_hat." + std::to_string(t + 1) + ".";
    r.add(p + "value", w.w_hat);
    r.add(p + "k_hat", w.k_hat);
    r.add(p + "failed", w.failed.empty() ? std::string("none") : w.failed);
  }
  r.add("flags", join(run.flags));
}

void add_witness(Report& r, const ConditionReport& c) {
  r.add("condition", c.condition);
  r.add("verdict", to_string(c.verdict));
  r.add("trials", c.trials);
  if (!c.witness) return;
  const auto& w = *c.witness;
  r.add("witness.cluster", w.cluster + 1);
  if (w.other_cluster) r.add("witness.other_cluster", *w.other_cluster + 1);
  if (!w.subset.empty()) r.add("witness.subset", w.subset);
  if (w.direction.size() > 0) r.add("witness.direction", w.direction);
  r.add("witness.lhs", w.lhs);
  r.add("witness.rhs", w.rhs);
}

struct Input {
  PointSet points;
  std::string hash;
};

Input load_points(const Options& o) {
  if (o.input.empty()) throw ParseError("--input is required");
  const std::string text = io::read_file(o.input);
  return {parse_points_text(text), io::hex64(io::fnv1a(text))};
}

void emit(const Options& o, const Report& r) {
  if (o.report.empty())
    std::cout << r.str();
  else
    io::write_file(o.report, r.str());
}

void header(Report& r, const std::string& command, const Options& o) {
  r.add("command", command);
  r.add("seed", o.seed);
  if (!o.input.empty()) r.add("input", o.input);
}

int gen(const std::string& command, const Options& o, Report& r) {
  if (o.input.empty()) throw ParseError("--input spec file is required");
  const std::string text = io::read_file(o.input);
  const GeneratorConfig cfg = parse_generator_spec_text(text);
  r.add("input_hash", io::hex64(io::fnv1a(text)));
  const std::uint64_t seed = o.seed ? o.seed : cfg.seed.value_or(0);
  LabeledSample s;
  if (command == "gen-gmm") {
    if (!cfg.mixture) throw ParseError("spec file has no [component] section");
    const Index n = o.n ? *o.n : cfg.n.value_or(0);
    if (n < 1) throw ParseError("sample size missing: give n= in the spec or --n");
    s = sample_gaussian_mixture(*cfg.mixture, n, seed);
  } else {
    if (!cfg.sbm) throw ParseError("spec file has no [sbm] section");
    SbmSpec spec = *cfg.sbm;
    if (o.n) spec.n = *o.n;
    s = sample_sbm(spec, seed);
  }
  r.add("generator_seed", seed);
  r.add("n", s.points.size());
  r.add("d", s.points.dim());
  const Clustering parts = s.clusters();
  r.add("k", parts.size());
  std::vector<double> sizes;
  for (const auto& c : parts) sizes.push_back(static_cast<double>(c.size()));
  r.add("cluster_sizes", sizes);
  r.add("min_weight", min_weight(parts));
  const std::string points = format_points(s.points);
  if (!o.output.empty()) {
    io::write_file(o.output, points);
    r.add("output", o.output);
    r.add("output_hash", io::hex64(io::fnv1a(points)));
  } else {
    std::cout << points;
  }
  if (!o.labels.empty()) {
    io::write_file(o.labels, format_labels(s.labels));
    r.add("labels", o.labels);
  }
  return 0;
}

int identify(const std::string& command, const Options& o, Report& r) {
  const Tuning t = apply_overrides(o.sets);
  const Input in = load_points(o);
  r.add("input_hash", in.hash);
  r.add("n", in.points.size());
  r.add("d", in.points.dim());
  add_constants(r, t);
  if (command == "identify-exhaustive") {
    const ExhaustiveResult e = exhaustive_identify(in.points, t.constants);
    r.add("k_hat", e.k);
    for (Index h = 0; h < e.partition.size(); ++h) r.add("part." + std::to_string(h + 1), e.partition[h]);
    r.add("min_weight", e.min_weight);
    r.add("size_hypothesis", e.size_hypothesis);
    return 0;
  }
  if (command == "identify-convex") {
    if (!o.w0) throw ParseError("identify-convex needs --w0");
    RunReport run = identify_k_convex(in.points, *o.w0, t.constants, t.convex);
    run.rng_seed = o.seed;
    add_run(r, run);
    return 0;
  }
  try {
    RunReport run = o.w0 ? identify_k_with_w0(in.points, *o.w0, t.constants) : identify_k(in.points, t.constants);
    run.rng_seed = o.seed;
    add_run(r, run);
  } catch (const NoAcceptableWeight& e) {
    add_run(r, e.report());
    throw;
  }
  return 0;
}

int verify(const Options& o, Report& r) {
  const Input in = load_points(o);
  r.add("input_hash", in.hash);
  if (o.labels.empty()) throw ParseError("verify needs --labels");
  const Clustering clusters = clusters_from_labels(parse_labels(o.labels, in.points.size()));
  r.add("k", clusters.size());
  r.add("min_weight", min_weight(clusters));
  ConditionReport c;
  if (o.condition == "weak-ntsc" || o.condition == "ntsc") {
    NtscOptions opt;
    if (o.mode != "exact" && o.mode != "sampled") throw ParseError("--mode must be exact or sampled");
    opt.mode = o.mode == "exact" ? CheckMode::exact : CheckMode::sampled;
    opt.trials = o.trials;
    opt.directions = o.directions;
    opt.seed = o.seed;
    r.add("mode", o.mode);
    c = o.condition == "ntsc" ? check_ntsc(in.points, clusters, opt) : check_weak_ntsc(in.points, clusters, opt);
  } else if (o.condition == "weak-separation" || o.condition == "strong-separation") {
    r.add("gamma", o.gamma);
    c = check_separation(in.points, clusters, o.gamma,
                         o.condition == "weak-separation" ? SeparationKind::weak : SeparationKind::strong);
  } else {
    throw ParseError("unknown condition '" + o.condition + "'");
  }
  add_witness(r, c);
  if (c.refuted()) r.add("witness_recomputes", witness_recomputes(in.points, clusters, c, o.gamma));
  return 0;
}

int bench_elbow(const Options& o, Report& r) {
  const Input in = load_points(o);
  r.add("input_hash", in.hash);
  r.add("kmax", o.kmax);
  r.add("restarts", o.restarts);
  const ElbowResult e = elbow_estimate(in.points, o.kmax, o.restarts, o.seed);
  r.add("deltas", e.deltas);
  r.add("ratios", e.ratios);
  r.add("k_star", e.k_star);
  return 0;
}

int gadget(const Options& o, Report& r) {
  ThreeCoverInstance inst;
  if (!o.input.empty()) {
    const std::string text = io::read_file(o.input);
    r.add("input_hash", io::hex64(io::fnv1a(text)));
    inst = parse_three_cover_text(text);
  } else {
    if (o.kind != "yes" && o.kind != "no") throw ParseError("--kind must be yes or no");
    inst = generate_three_cover(o.universe, o.kind == "yes", o.seed);
    r.add("generated_kind", o.kind);
  }
  r.add("universe", inst.universe);
  r.add("sets", inst.sets.size());
  const CheckNtscInstance g = build_checkntsc_instance(inst);
  const BruteForceDecision d = check_ntsc_decision_bruteforce(g.points, g.h);
  const auto cover = find_exact_cover(inst);
  r.add("h", g.h);
  r.add("decision", d.decision);
  r.add("best_sigma", d.best_sigma);
  r.add("best_subset", d.best);
  r.add("exact_cover", cover.has_value());
  if (cover) r.add("cover_sets", *cover);
  r.add("agree", d.decision == cover.has_value());
  if (!o.output.empty()) {
    io::write_file(o.output, format_three_cover(inst));
    r.add("output", o.output);
  }
  if (!o.points.empty()) {
    io::write_file(o.points, format_points(g.points));
    r.add("points", o.points);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Determine the number of clusters in a point set"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--input", o.input, "input file");
    s->add_option("--output", o.output, "output file");
    s->add_option("--report", o.report, "report file (default stdout)");
    s->add_option("--seed", o.seed, "random seed");
    s->add_flag("--timing", o.timing, "add wall time to the report");
  };
  auto tuning = [&](CLI::App* s) {
    s->add_option("--set", o.sets, "constant override KEY=VALUE")->take_all();
  };

  std::map<std::string, CLI::App*> commands;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    common(s);
    commands[name] = s;
    return s;
  };

  for (const char* name : {"gen-gmm", "gen-sbm"}) {
    auto* s = add(name, std::string("sample a ") + (std::string(name) == "gen-gmm" ? "mixture" : "block model") +
                            " from a spec file");
    s->add_option("--labels", o.labels, "write ground-truth labels here");
    s->add_option("--n", o.n, "sample size (overrides the spec file)");
  }
  {
    auto* s = add("identify-peel", "peeling identifier; sweeps w-hat when --w0 is absent");
    s->add_option("--w0", o.w0, "minimum cluster weight");
    tuning(s);
  }
  {
    auto* s = add("identify-convex", "convex-program identifier");
    s->add_option("--w0", o.w0, "minimum cluster weight")->required();
    tuning(s);
  }
  {
    auto* s = add("identify-exhaustive", "exhaustive identifier (n <= 14)");
    tuning(s);
  }
  {
    auto* s = add("verify", "check a labelled clustering against a condition");
    s->add_option("--labels", o.labels, "labels file")->required();
    s->add_option("--condition", o.condition, "weak-ntsc | ntsc | weak-separation | strong-separation");
    s->add_option("--mode", o.mode, "exact | sampled");
    s->add_option("--trials", o.trials, "random subsets per cluster in sampled mode");
    s->add_option("--directions", o.directions, "random directions per subset (ntsc)");
    s->add_option("--gamma", o.gamma, "separation factor");
  }
  {
    auto* s = add("bench-elbow", "elbow estimate from k-means costs");
    s->add_option("--kmax", o.kmax, "largest k");
    s->add_option("--restarts", o.restarts, "k-means++ restarts per k");
  }
  {
    auto* s = add("gadget-3cover", "3-cover reduction and brute-force decision");
    s->add_option("--universe", o.universe, "universe size when generating");
    s->add_option("--kind", o.kind, "yes | no when generating");
    s->add_option("--points", o.points, "write the gadget point set here");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string command;
  for (const auto& [name, s] : commands)
    if (s->parsed()) command = name;

  Report r;
  header(r, command, o);
  const auto start = std::chrono::steady_clock::now();
  int status = 0;
  try {
    if (command == "gen-gmm" || command == "gen-sbm")
      status = gen(command, o, r);
    else if (command.rfind("identify-", 0) == 0)
      status = identify(command, o, r);
    else if (command == "verify")
      status = verify(o, r);
    else if (command == "bench-elbow")
      status = bench_elbow(o, r);
    else
      status = gadget(o, r);
    r.add("status", "ok");
  } catch (const Error& e) {
    status = is_input_error(e) ? 2 : 1;
    r.add("status", "error");
    r.add("error", e.code());
    r.add("error_detail", e.what());
    std::cerr << "k_finder: " << e.what() << '\n';
  } catch (const std::exception& e) {
    status = 1;
    r.add("status", "error");
    r.add("error", "internal");
    r.add("error_detail", e.what());
    std::cerr << "k_finder: " << e.what() << '\n';
  }
  if (o.timing)
    r.add("wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  try {
    emit(o, r);
  } catch (const Error& e) {
    std::cerr << "k_finder: " << e.what() << '\n';
    return 2;
  }
  return status;
}
