#include "hermicone/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hermicone/random.hpp"
#include "hermicone/report.hpp"

namespace hermicone {

int thread_budget() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HERMICONE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(std::min<long>(v, hw));
  }
  return static_cast<int>(hw);
}

namespace {

constexpr double kIdentityThreshold = 1e-10;
constexpr double kPredicateTol = 1e-9;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ComplexLieModel load_model(const RunConfig& cfg) {
  if (!cfg.model_file.empty() && !cfg.catalog_name.empty())
    throw Error(ErrorCode::SchemaError, "give exactly one of --model and --catalog");
  if (!cfg.catalog_name.empty()) return catalog(cfg.catalog_name);
  if (!cfg.model_file.empty()) return parse_model(read_file(cfg.model_file));
  throw Error(ErrorCode::SchemaError, "a model is required (--model FILE or --catalog NAME)");
}

/// "identity", "random" (seeded), or a path to a metric JSON file.
HermitianMetric load_metric(int n, const std::string& source, std::uint64_t seed) {
  if (source == "identity") return HermitianMetric::identity(n);
  if (source == "random") {
    Rng rng(seed);
    return make_metric(random_metric_matrix(n, rng));
  }
  return parse_metric(n, read_file(source));
}

Json header(const RunConfig& cfg, const ComplexLieModel& m, const HermitianMetric& g) {
  Json h;
  h["command"] = cfg.subcommand;
  h["model"] = {{"name", m.name}, {"n", m.n}, {"hash", model_hash(m)}};
  h["metric"] = metric_to_json(g.H);
  h["seed"] = cfg.seed;
  return h;
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::SchemaError, "cannot write '" + cfg.out + "'");
  f << text;
}

void emit_json(const RunConfig& cfg, const Json& j, std::ostream& out) {
  emit(cfg, j.dump(2) + "\n", out);
}

int cmd_catalog(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.catalog_name.empty()) {
    emit(cfg, serialize_model(catalog(cfg.catalog_name)) + "\n", out);
    return 0;
  }
  if (cfg.format == "csv") {
    std::string text = "name,n,hash\n";
    for (const auto& name : catalog_names()) {
      const auto m = catalog(name);
      text += name + "," + std::to_string(m.n) + "," + model_hash(m) + "\n";
    }
    emit(cfg, text, out);
    return 0;
  }
  Json models = Json::array();
  for (const auto& name : catalog_names()) {
    const auto m = catalog(name);
    models.push_back({{"name", name}, {"n", m.n}, {"hash", model_hash(m)}});
  }
  emit_json(cfg, {{"command", "catalog"}, {"models", models}}, out);
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const ComplexLieModel m = load_model(cfg);
  const double thr = cfg.tol.value_or(kIdentityThreshold);
  const ValidationReport vr = validate_model(m);
  if (!vr.ok()) {
    Json j;
    j["command"] = cfg.subcommand;
    j["model"] = {{"name", m.name}, {"n", m.n}, {"hash", model_hash(m)}};
    j["validation"] = to_json(vr);
    j["passed"] = false;
    emit_json(cfg, j, out);
    return exit_code_for(vr.unimodular ? ErrorCode::ModelInvalid : ErrorCode::ModelNotUnimodular);
  }
  const HermitianMetric g = load_metric(m.n, cfg.metric, cfg.seed);
  const OperatorBundle b = build_bundle(m, g);
  const IdentityReport ir = identity_suite(b, cfg.seed, cfg.steps > 0 ? cfg.steps : 3);
  bool passed = ir.max_residual() <= thr;

  Json spaces = Json::object();
  for (int k = 0; k <= 2 * m.n; ++k) {
    const ThreeSpaceReport t = three_space_check(b, k);
    passed = passed && t.sum_residual <= thr && t.orthogonality_residual <= thr &&
             t.idempotence_residual <= thr;
    spaces[std::to_string(k)] = to_json(t);
  }
  Json j = header(cfg, m, g);
  j["tolerances"] = {{"residual_threshold", thr}, {"kernel_tol", kDefaultKernelTol}};
  j["validation"] = to_json(vr);
  j["identities"] = to_json(ir);
  j["three_space"] = spaces;
  j["predicates"] = to_json(predicates(b, kPredicateTol));
  j["passed"] = passed;
  emit_json(cfg, j, out);
  return passed ? 0 : exit_code_for(ErrorCode::ToleranceFailure);
}

int cmd_torsion(const RunConfig& cfg, std::ostream& out) {
  const ComplexLieModel m = load_model(cfg);
  const HermitianMetric g = load_metric(m.n, cfg.metric, cfg.seed);
  const OperatorBundle b = build_bundle(m, g);
  const double tol = cfg.tol.value_or(kPredicateTol);
  const Predicates pr = predicates(b, tol);
  const std::string which = cfg.functional;
  if (!which.empty() && which != "F" && which != "G")
    throw Error(ErrorCode::SchemaError, "torsion takes --functional F (rho) or G (Gamma)");

  Json j = header(cfg, m, g);
  j["tolerances"] = {{"tol", tol}, {"kernel_tol", kDefaultKernelTol}};
  j["predicates"] = to_json(pr);
  bool any = false;
  if (which == "F" || (which.empty() && pr.is_skt)) {
    j["rho"] = to_json(torsion_rho(b, tol));
    any = true;
  }
  if (which == "G" || (which.empty() && pr.is_balanced)) {
    j["Gamma"] = to_json(torsion_gamma(b, tol));
    any = true;
  }
  if (!any) throw Error(ErrorCode::NotSKT, "metric is neither SKT nor balanced");
  emit_json(cfg, j, out);
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const ComplexLieModel m = load_model(cfg);
  const HermitianMetric g = load_metric(m.n, cfg.metric, cfg.seed);
  const OperatorBundle b = build_bundle(m, g);
  const double tol = cfg.tol.value_or(kPredicateTol);
  const FunctionalKind kind = parse_functional(cfg.functional.empty() ? "F" : cfg.functional);
  const HermitianMetric nu = load_metric(m.n, cfg.nu, cfg.seed + 1);

  FunctionalValue v;
  switch (kind) {
    case FunctionalKind::F: v = eval_F(b, tol); break;
    case FunctionalKind::G: v = eval_G(b, tol); break;
    case FunctionalKind::H: v = eval_H(b, build_bundle(m, nu), tol); break;
    case FunctionalKind::FTilde: v = eval_F_tilde(b, nu, tol); break;
  }
  Json j = header(cfg, m, g);
  j["tolerances"] = {{"tol", tol}, {"kernel_tol", kDefaultKernelTol}};
  if (kind == FunctionalKind::H || kind == FunctionalKind::FTilde) j["nu"] = metric_to_json(nu.H);
  j["functional"] = functional_name(kind);
  j["value"] = v.value;
  j["ingredients"] = to_json(v)["ingredients"];
  const Predicates pr = predicates(b, tol);
  j["predicates"] = to_json(pr);
  j["is_kahler"] = pr.is_kahler;
  emit_json(cfg, j, out);
  return 0;
}

int cmd_varcheck(const RunConfig& cfg, std::ostream& out) {
  const ComplexLieModel m = load_model(cfg);
  const HermitianMetric g = load_metric(m.n, cfg.metric, cfg.seed);
  const HermitianMetric nu = load_metric(m.n, cfg.nu, cfg.seed + 1);
  BatteryOptions bopt;
  bopt.tuples = cfg.steps > 0 ? cfg.steps : 20;
  bopt.threads = thread_budget();
  if (cfg.tol) bopt.threshold = *cfg.tol;
  std::vector<VariationCheck> checks = variation_battery(m, cfg.seed, bopt);
  const auto fc = functional_checks(build_bundle(m, g), nu);
  checks.insert(checks.end(), fc.begin(), fc.end());

  int in_scope = 0;
  int failed = 0;
  for (const auto& c : checks) {
    if (!c.in_scope) continue;
    ++in_scope;
    if (!c.passed) ++failed;
  }
  if (cfg.format == "csv") {
    emit(cfg, checks_to_csv(checks), out);
  } else {
    Json j = header(cfg, m, g);
    j["tolerances"] = {{"threshold", bopt.threshold},
                       {"projector_threshold", bopt.projector_threshold},
                       {"abs_floor", 1e-10}};
    j["tuples"] = bopt.tuples;
    j["summary"] = {{"checks", checks.size()}, {"in_scope", in_scope}, {"failed", failed}};
    j["checks"] = to_json(checks);
    emit_json(cfg, j, out);
  }
  return failed == 0 ? 0 : exit_code_for(ErrorCode::ToleranceFailure);
}

int cmd_descend(const RunConfig& cfg, std::ostream& out) {
  const ComplexLieModel m = load_model(cfg);
  const HermitianMetric g = load_metric(m.n, cfg.metric, cfg.seed);
  const FunctionalKind kind = parse_functional(cfg.functional.empty() ? "F" : cfg.functional);
  DescentOptions opt;
  opt.max_iters = cfg.steps > 0 ? cfg.steps : 100;
  opt.nu = load_metric(m.n, cfg.nu, cfg.seed + 1);
  if (cfg.tol) opt.tol = *cfg.tol;
  const DescentTrace t = descend(m, kind, g, opt);
  if (cfg.format == "csv") {
    emit(cfg, trace_to_csv(t), out);
  } else {
    Json j = header(cfg, m, g);
    j["tolerances"] = {{"tol", opt.tol}, {"grad_tol", opt.grad_tol}, {"max_step", opt.max_step}};
    j["nu"] = metric_to_json(opt.nu->H);
    j["trace"] = to_json(t);
    emit_json(cfg, j, out);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Torsion functionals on invariant Hermitian metrics of complex Lie algebras",
               "hermicone"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto model_opts = [&](CLI::App* sub) {
    auto* mo = sub->add_option("--model", cfg.model_file, "Model JSON file");
    auto* co = sub->add_option("--catalog", cfg.catalog_name, "Built-in model name");
    mo->excludes(co);
  };
  auto common = [&](CLI::App* sub) {
    model_opts(sub);
    sub->add_option("--metric", cfg.metric, "Metric JSON file, 'identity' or 'random'");
    sub->add_option("--functional", cfg.functional, "F, G, H or Ftilde");
    sub->add_option("--nu", cfg.nu, "Reference metric file, 'identity' or 'random'");
    sub->add_option("--tol", cfg.tol, "Tolerance override")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--steps", cfg.steps, "Samples, tuples or iterations")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", cfg.out, "Output path (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  for (const char* name : {"verify", "torsion", "eval", "varcheck", "descend"}) {
    static const std::map<std::string, std::string> help = {
        {"verify", "Validate the model and check operator identities"},
        {"torsion", "Torsion forms rho and/or Gamma"},
        {"eval", "Evaluate F, G, H or Ftilde"},
        {"varcheck", "Variation formulas against finite differences"},
        {"descend", "Constrained descent of F, Ftilde or G"}};
    common(app.add_subcommand(name, help.at(name)));
  }
  auto* cat = app.add_subcommand("catalog", "List built-in models, or print one");
  cat->add_option("--catalog", cfg.catalog_name, "Model to print");
  cat->add_option("--out", cfg.out, "Output path (default stdout)");
  cat->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code_for(ErrorCode::SchemaError);
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (cfg.subcommand == "catalog") return cmd_catalog(cfg, out);
    if (cfg.subcommand == "verify") return cmd_verify(cfg, out);
    if (cfg.subcommand == "torsion") return cmd_torsion(cfg, out);
    if (cfg.subcommand == "eval") return cmd_eval(cfg, out);
    if (cfg.subcommand == "varcheck") return cmd_varcheck(cfg, out);
    if (cfg.subcommand == "descend") return cmd_descend(cfg, out);
  } catch (const Error& e) {
    err << "hermicone: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return exit_code_for(ErrorCode::SchemaError);
}

}  // namespace hermicone
