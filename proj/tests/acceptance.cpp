// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hermicone/cli.hpp"
#include "hermicone/errors.hpp"
#include "hermicone/functionals.hpp"
#include "hermicone/optimizer.hpp"
#include "hermicone/random.hpp"
#include "hermicone/variation.hpp"
#include "oracles.hpp"

using namespace hermicone;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (passed) detail << "first failure: " << what << "; ";
      passed = false;
    }
  }
};

double rel(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

OperatorBundle random_bundle(const ComplexLieModel& m, Rng& rng) {
  return build_bundle(m, make_metric(random_metric_matrix(m.n, rng)));
}

void identity_suite_check(Outcome& o) {
  double worst = 0.0;
  for (const auto& name : catalog_names()) {
    const auto m = catalog(name);
    Rng rng(1000);
    for (int s = 0; s < 20; ++s) {
      const auto r = identity_suite(random_bundle(m, rng), 1 + s);
      worst = std::max(worst, r.max_residual());
      for (const auto& [key, v] : r.residuals) o.require(v <= 1e-10, name + " " + key);
    }
  }
  o.detail << "max residual " << sci(worst) << " over 20 metrics x " << catalog_names().size()
           << " models";
}

void torsion_check(Outcome& o) {
  double worst = 0.0;
  auto compare = [&](const OperatorBundle& b, const TorsionReport& rep, const Vec& ref,
                     const std::string& tag) {
    const double err = b.l2_norm(Vec(rep.torsion.to_global() - ref)) /
                       std::max(1.0, b.l2_norm(ref));
    worst = std::max(worst, err);
    o.require(err <= 1e-9, tag + " oracle");
    o.require(rep.equation_residual <= 1e-9, tag + " equation residual");
    o.require(rep.kernel_residual <= 1e-9, tag + " kernel residual");
  };
  Rng rng(2000);
  for (int s = 0; s < 5; ++s) {
    const auto kt = random_bundle(catalog("kodaira_thurston"), rng);
    compare(kt, torsion_rho(kt), oracle::torsion_rho(kt), "rho");
    const auto iw = random_bundle(catalog("iwasawa"), rng);
    compare(iw, torsion_gamma(iw), oracle::torsion_gamma(iw), "Gamma");
  }
  for (const char* name : {"torus2", "torus3"}) {
    const auto t = random_bundle(catalog(name), rng);
    o.require(torsion_rho(t).torsion.max_abs() == 0.0, std::string(name) + " rho");
    o.require(torsion_gamma(t).torsion.max_abs() == 0.0, std::string(name) + " Gamma");
  }
  o.detail << "max relative oracle distance " << sci(worst);
}

void scaling_check(Outcome& o) {
  const auto kt = catalog("kodaira_thurston");
  const auto iw = catalog("iwasawa");
  Rng rng(3000);
  double worst_rel = 0.0, worst_ray = 0.0;
  for (int s = 0; s < 5; ++s) {
    const Eigen::MatrixXcd Hk = random_metric_matrix(2, rng);
    const Eigen::MatrixXcd Hi = random_metric_matrix(3, rng);
    const auto gamma_k = build_bundle(kt, make_metric(random_metric_matrix(2, rng)));
    const auto gamma_i = build_bundle(iw, make_metric(random_metric_matrix(3, rng)));
    const auto nu = make_metric(random_metric_matrix(2, rng));
    const auto bk = build_bundle(kt, make_metric(Hk));
    const auto bi = build_bundle(iw, make_metric(Hi));
    const Form Omega = normalized_power(bi.omega, 2);
    const double F = eval_F(bk).value, G = eval_G(bi).value;
    const double Hk0 = eval_H(bk, gamma_k).value, Hi0 = eval_H(bi, gamma_i).value;
    const double Ft = eval_F_tilde(bk, nu).value;
    for (double lambda : {0.5, 2.0, 3.0}) {
      const auto bk_l = build_bundle(kt, make_metric(lambda * Hk));
      const auto bi_root = build_bundle(iw, root_n_minus_1(cplx(lambda) * Omega));
      const double rf = rel(eval_F(bk_l).value, std::pow(lambda, 2) * F);
      const double rg = rel(eval_G(bi_root).value, std::pow(lambda, (3.0 + 1.0) / (3.0 - 1.0)) * G);
      worst_rel = std::max({worst_rel, rf, rg});
      o.require(rf <= 1e-9, "F scaling");
      o.require(rg <= 1e-9, "G scaling");
      const auto bi_l = build_bundle(iw, make_metric(lambda * Hi));
      const double ray = std::max({std::abs(eval_H(bk_l, gamma_k).value - Hk0),
                                   std::abs(eval_H(bi_l, gamma_i).value - Hi0),
                                   std::abs(eval_F_tilde(bk_l, nu).value - Ft)});
      worst_ray = std::max(worst_ray, ray);
      o.require(ray <= 1e-10, "ray invariance");
    }
  }
  o.detail << "max relative " << sci(worst_rel) << ", max ray drift " << sci(worst_ray);
}

void scaling_derivative_check(Outcome& o) {
  Rng rng(4000);
  double worst = 0.0, worst_fd = 0.0;
  for (int s = 0; s < 5; ++s) {
    const auto kt = s == 0 ? build_bundle(catalog("kodaira_thurston"), HermitianMetric::identity(2))
                           : random_bundle(catalog("kodaira_thurston"), rng);
    const auto d = dF(kt, kt.omega);
    const double rf = rel(d.analytic, 2.0 * eval_F(kt).value);
    const auto iw = s == 0 ? build_bundle(catalog("iwasawa"), HermitianMetric::identity(3))
                           : random_bundle(catalog("iwasawa"), rng);
    const auto g = dG(iw, normalized_power(iw.omega, 2));
    const double rg = rel(g.analytic, 2.0 * eval_G(iw).value);
    worst = std::max({worst, rf, rg});
    worst_fd = std::max({worst_fd, rel(d.analytic, d.fd), rel(g.analytic, g.fd)});
    o.require(rf <= 1e-8, "dF(omega) = 2F");
    o.require(rg <= 1e-8, "dG(omega_2) = 2G");
    o.require(rel(d.analytic, d.fd) <= 1e-5, "dF finite difference");
    o.require(rel(g.analytic, g.fd) <= 1e-5, "dG finite difference");
  }
  o.detail << "max relative " << sci(worst) << ", max FD relative " << sci(worst_fd);
}

void battery_check(Outcome& o) {
  BatteryOptions opt;
  opt.tuples = 20;
  opt.threads = thread_budget();
  int total = 0, in_scope = 0;
  for (const auto& name : catalog_names()) {
    for (const auto& c : variation_battery(catalog(name), 5000, opt)) {
      ++total;
      if (!c.in_scope) continue;
      ++in_scope;
      o.require(c.passed, name + " " + c.name);
    }
  }
  o.detail << in_scope << " in-scope checks of " << total;
}

void kahler_check(Outcome& o) {
  Rng rng(6000);
  double worst = 0.0;
  for (const char* name : {"torus2", "torus3"}) {
    const auto m = catalog(name);
    const auto b = random_bundle(m, rng);
    const auto g = random_bundle(m, rng);
    worst = std::max({worst, std::abs(eval_F(b).value), std::abs(eval_G(b).value),
                      std::abs(eval_H(b, g).value)});
    for (int s = 0; s < 5; ++s) {
      const Form gamma = random_real_11(m.n, rng);
      const Form Omega = balanced_form(m.n, random_hermitian(m.n, rng));
      worst = std::max({worst, std::abs(dF(b, gamma, {.compute_fd = false}).analytic),
                        std::abs(dG(b, Omega, {.compute_fd = false}).analytic)});
    }
    o.require(predicates(b).is_kahler, std::string(name) + " is Kahler");
  }
  o.require(worst <= 1e-10, "torus values and derivatives");
  const auto kt = random_bundle(catalog("kodaira_thurston"), rng);
  const double F = eval_F(kt).value;
  o.require(!predicates(kt).is_kahler, "kodaira_thurston not Kahler");
  o.require(F > 0.0, "kodaira_thurston F > 0");
  const double G = eval_G(random_bundle(catalog("iwasawa"), rng)).value;
  o.require(G > 0.0, "iwasawa G > 0");
  o.detail << "torus max " << sci(worst) << ", KT F " << sci(F) << ", Iwasawa G " << sci(G);
}

void df_consistency_check(Outcome& o) {
  Rng rng(7000);
  const auto m = catalog("kodaira_thurston");
  int bound = 0, diagnostic = 0;
  double worst = 0.0, worst_gap = 0.0;
  for (int s = 0; s < 10; ++s) {
    const auto b = random_bundle(m, rng);
    const auto d = dF(b, random_real_11(2, rng));
    if (d.a_norm <= 1e-10) {
      ++bound;
      worst = std::max(worst, rel(d.analytic, d.fd));
      o.require(rel(d.analytic, d.fd) <= 1e-5, "dF finite difference");
    } else {
      ++diagnostic;
      worst_gap = std::max(worst_gap, std::abs(d.analytic - d.fd));
    }
  }
  o.require(bound > 0, "at least one direction with A = 0");
  o.detail << bound << " directions with A = 0, max relative " << sci(worst) << "; " << diagnostic
           << " with A != 0";
  if (diagnostic > 0) o.detail << " (max |analytic - fd| " << sci(worst_gap) << ", diagnostic)";
}

void descent_check(Outcome& o) {
  const auto kt = catalog("kodaira_thurston");
  Rng rng(1);
  DescentOptions opt;
  opt.max_iters = 60;
  const auto t = descend(kt, FunctionalKind::FTilde, make_metric(random_metric_matrix(2, rng)), opt);
  const int iters = static_cast<int>(t.records.size()) - 1;
  o.require(iters >= 50, "at least 50 iterations");
  o.require(t.monotone(), "Ftilde monotone");
  double worst_skt = 0.0, min_eig = 1e300;
  const auto diff = differential_matrices(kt);
  for (const auto& r : t.records) {
    const Form omega = t.basis.combine(r.coefficients);
    worst_skt = std::max(worst_skt, ddbar_residual(diff, omega));
    min_eig = std::min(min_eig, min_eigenvalue(metric_matrix(omega)));
  }
  o.require(worst_skt <= 1e-9, "iterates SKT");
  o.require(min_eig > 0.0, "iterates positive");

  const auto torus = descend(catalog("torus3"), FunctionalKind::F, HermitianMetric::identity(3));
  o.require(torus.records.size() == 1 && torus.termination == Termination::GradientSmall,
            "torus terminates immediately");
  o.require(torus.records.back().value == 0.0, "torus F = 0");

  DescentOptions gopt;
  gopt.max_iters = 10;
  const auto iw = catalog("iwasawa");
  const auto g = descend(iw, FunctionalKind::G, HermitianMetric::identity(3), gopt);
  o.require(g.monotone(), "G monotone");
  const double gamma_norm =
      torsion_gamma(build_bundle(iw, g.final_metric)).torsion.max_abs();
  o.require(gamma_norm > 0.0, "final Gamma nonzero");
  o.detail << "KT " << iters << " iterations " << sci(t.records.front().value) << " -> "
           << sci(t.records.back().value) << " (" << termination_name(t.termination)
           << ", max SKT residual " << sci(worst_skt) << ", min eigenvalue " << sci(min_eig)
           << "); Iwasawa G " << sci(g.records.front().value) << " -> "
           << sci(g.records.back().value) << ", |Gamma|max " << sci(gamma_norm);
}

void root_check(Outcome& o) {
  Rng rng(9000);
  double worst = 0.0, worst_h = 0.0;
  for (int s = 0; s < 50; ++s) {
    const int n = 2 + s % 2;
    const Eigen::MatrixXcd H = random_metric_matrix(n, rng);
    const Form Omega = normalized_power(metric_form(H), n - 1);
    const double err = (root_n_minus_1(Omega).H - H).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    o.require(err <= 1e-10, "roundtrip");
    for (double lambda : {0.5, 2.0, 3.0}) {
      const Eigen::MatrixXcd expect = std::pow(lambda, 1.0 / (n - 1)) * root_n_minus_1(Omega).H;
      const double e = (root_n_minus_1(cplx(lambda) * Omega).H - expect).cwiseAbs().maxCoeff();
      worst_h = std::max(worst_h, e);
      o.require(e <= 1e-10, "homogeneity");
    }
  }
  o.detail << "max roundtrip " << sci(worst) << ", max homogeneity " << sci(worst_h);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"operator identities", identity_suite_check},
      {"torsion forms", torsion_check},
      {"scaling laws", scaling_check},
      {"scaling-direction derivatives", scaling_derivative_check},
      {"first-variation battery", battery_check},
      {"Kahler equivalences", kahler_check},
      {"dF consistency", df_consistency_check},
      {"descent properties", descent_check},
      {"root of omega_{n-1}", root_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << "exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
