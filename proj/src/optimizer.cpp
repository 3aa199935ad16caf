#include "hermicone/optimizer.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "hermicone/errors.hpp"

namespace hermicone {

const char* cone_name(Cone c) { return c == Cone::SKT ? "skt" : "balanced"; }

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::GradientSmall: return "GradientSmall";
    case Termination::PositivityBoundary: return "PositivityBoundary";
    case Termination::MaxIters: return "MaxIters";
    case Termination::NumericalStall: return "NumericalStall";
  }
  return "?";
}

namespace {

// E_jj, E_jk + E_kj, i(E_jk - E_kj): a real basis of n x n Hermitian matrices.
std::vector<Eigen::MatrixXcd> hermitian_basis(int n) {
  std::vector<Eigen::MatrixXcd> out;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(n, n);
    e(j, j) = 1.0;
    out.push_back(e);
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
      s(j, k) = s(k, j) = 1.0;
      out.push_back(s);
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
      a(j, k) = cplx(0.0, 1.0);
      a(k, j) = cplx(0.0, -1.0);
      out.push_back(a);
    }
  return out;
}

Form element_of(Cone cone, int n, const Eigen::MatrixXcd& E) {
  return cone == Cone::SKT ? metric_form(E) : balanced_form(n, E);
}

Eigen::MatrixXcd matrix_of(Cone cone, const Form& f) {
  return cone == Cone::SKT ? metric_matrix(f) : balanced_matrix(f);
}

Vec constraint_image(Cone cone, const DifferentialMatrices& diff, const Form& f) {
  const Vec v = f.to_global();
  return cone == Cone::SKT ? Vec(diff.del * (diff.delbar * v)) : Vec(diff.delbar * v);
}

double max_entry(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Smallest eigenpair of a Hermitian matrix.
std::pair<double, Eigen::VectorXcd> lowest(const Eigen::MatrixXcd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

}  // namespace

Form ConstraintBasis::combine(const Eigen::VectorXd& c) const {
  Form out(n);
  for (int i = 0; i < dimension(); ++i) out += cplx(c(i)) * forms[i];
  return out;
}

Eigen::VectorXd ConstraintBasis::coordinates(const Form& f, const OperatorBundle& ref,
                                             double* residual) const {
  Eigen::VectorXd c(dimension());
  for (int i = 0; i < dimension(); ++i) c(i) = ref.l2(f, forms[i]).real();
  if (residual) *residual = (combine(c) - f).max_abs();
  return c;
}

ConstraintBasis constraint_basis(const ComplexLieModel& m, Cone cone,
                                 const HermitianMetric& reference) {
  const OperatorBundle ref = build_bundle(m, reference);
  const int n = m.n;
  const auto params = hermitian_basis(n);
  const int P = static_cast<int>(params.size());

  std::vector<Form> raw;
  Eigen::MatrixXd R(2 * ref.size(), P);
  for (int k = 0; k < P; ++k) {
    raw.push_back(element_of(cone, n, params[k]));
    const Vec img = constraint_image(cone, ref.diff, raw.back());
    R.col(k) << img.real(), img.imag();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * smax) ++rank;
  const Eigen::MatrixXd null = svd.matrixV().rightCols(P - rank);

  std::vector<Form> kernel;
  for (int j = 0; j < null.cols(); ++j) {
    Form f(n);
    for (int k = 0; k < P; ++k) f += cplx(null(k, j)) * raw[k];
    kernel.push_back(f);
  }

  ConstraintBasis out;
  out.cone = cone;
  out.n = n;
  out.reference = reference;
  if (kernel.empty()) throw Error(ErrorCode::EmptyCone, "constraint kernel is trivial");

  const int dim = static_cast<int>(kernel.size());
  Eigen::MatrixXd M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = ref.l2(kernel[i], kernel[j]).real();
  const Eigen::MatrixXd Linv_t =
      M.llt().matrixL().transpose().solve(Eigen::MatrixXd::Identity(dim, dim));
  for (int j = 0; j < dim; ++j) {
    Form f(n);
    for (int i = 0; i < dim; ++i)
      if (Linv_t(i, j) != 0.0) f += cplx(Linv_t(i, j)) * kernel[i];
    out.forms.push_back(f);
    out.constraint_residual =
        std::max(out.constraint_residual, max_entry(constraint_image(cone, ref.diff, f)));
  }

  // Feasibility probe: project the reference element, then climb lambda_min.
  const Form ref_element =
      cone == Cone::SKT ? ref.omega : normalized_power(ref.omega, n - 1);
  Eigen::VectorXd c = out.coordinates(ref_element, ref, nullptr);
  std::vector<Eigen::MatrixXcd> mats;
  for (const Form& f : out.forms) mats.push_back(matrix_of(cone, f));
  auto assemble = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < dim; ++i) A += x(i) * mats[i];
    return A;
  };
  if (c.norm() == 0.0) c = Eigen::VectorXd::Ones(dim);
  c.normalize();
  for (int it = 0; it < 500; ++it) {
    const auto [lam, v] = lowest(assemble(c));
    if (lam > 0.0) {
      out.feasible_point = c;
      return out;
    }
    Eigen::VectorXd g(dim);
    for (int i = 0; i < dim; ++i) g(i) = v.dot(mats[i] * v).real();
    if (g.norm() == 0.0) break;
    c += 0.1 * g / g.norm();
    c.normalize();
  }
  throw Error(ErrorCode::EmptyCone, std::string("no positive element in the ") +
                                        cone_name(cone) + " constraint kernel");
}

HermitianMetric metric_of(Cone cone, const Form& element) {
  return cone == Cone::SKT ? make_metric(metric_matrix(element)) : root_n_minus_1(element);
}

bool DescentTrace::monotone() const {
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].value > records[i - 1].value) return false;
  return true;
}

namespace {

struct Evaluation {
  bool positive = false;
  bool certified = true;
  double value = 0.0;
  HermitianMetric metric;
  std::shared_ptr<OperatorBundle> bundle;
};

class Problem {
 public:
  Problem(const ComplexLieModel& m, FunctionalKind kind, Cone cone, ConstraintBasis basis,
          HermitianMetric nu, const DescentOptions& opt)
      : m_(m), kind_(kind), cone_(cone), basis_(std::move(basis)), nu_(std::move(nu)), opt_(opt),
        nu_form_(metric_form(nu_.H)) {}

  Evaluation evaluate(const Eigen::VectorXd& c) const {
    Evaluation e;
    try {
      e.metric = metric_of(cone_, basis_.combine(c));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::NotPositiveDefinite || err.code() == ErrorCode::NotPositive)
        return e;
      throw;
    }
    e.positive = true;
    e.bundle = std::make_shared<OperatorBundle>(build_bundle(m_, e.metric));
    try {
      e.value = value_at(*e.bundle);
    } catch (const Error& err) {
      // A trial the torsion solver cannot certify is rejected, not fatal.
      if (err.code() != ErrorCode::ToleranceFailure && err.code() != ErrorCode::ToleranceAmbiguity)
        throw;
      e.certified = false;
    }
    return e;
  }

  double value_at(const OperatorBundle& b) const {
    switch (kind_) {
      case FunctionalKind::F: return eval_F(b, opt_.tol).value;
      case FunctionalKind::FTilde: return eval_F_tilde(b, nu_, opt_.tol).value;
      case FunctionalKind::G: return eval_G(b, opt_.tol).value;
      default: break;
    }
    throw Error(ErrorCode::SchemaError, "unsupported functional");
  }

  double normalization(const Eigen::VectorXd& c) const {
    const Form f = basis_.combine(c);
    if (cone_ == Cone::SKT) return volume_pairing(f, nu_);
    return integrate(wedge(f, nu_form_)).real();
  }

  Eigen::VectorXd normalize(const Eigen::VectorXd& c) const {
    if (!opt_.normalize) return c;
    return c / normalization(c);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& c, const Evaluation& at, int* analytic) const {
    const int dim = basis_.dimension();
    Eigen::VectorXd g(dim);
    *analytic = 0;
    const Form element = basis_.combine(c);
    const Eigen::MatrixXcd base = matrix_of(cone_, element);
    DerivativeOptions dopt;
    dopt.compute_fd = false;
    dopt.tol = opt_.tol;
    for (int i = 0; i < dim; ++i) {
      const Form& dir = basis_.forms[i];
      if (opt_.analytic_gradient) {
        std::optional<FunctionalDerivative> d;
        switch (kind_) {
          case FunctionalKind::F: d = dF(*at.bundle, dir, dopt); break;
          case FunctionalKind::FTilde: d = dF_tilde(*at.bundle, dir, nu_, dopt); break;
          case FunctionalKind::G: d = dG(*at.bundle, dir, dopt); break;
          default: break;
        }
        const double a_scale = std::max(1.0, at.bundle->l2_norm(Vec(at.bundle->diff.del * at.bundle->omega.to_global())));
        if (d && d->a_norm <= opt_.tol * a_scale) {
          g(i) = d->analytic;
          ++*analytic;
          continue;
        }
      }
      const double h = default_fd_step(base, matrix_of(cone_, dir));
      auto f = [&](double t) {
        const HermitianMetric mt = metric_of(cone_, element + cplx(t) * dir);
        return value_at(build_bundle(m_, mt));
      };
      g(i) = fd_derivative(f, h).value;
    }
    return g;
  }

  double constraint_residual(const Eigen::VectorXd& c, const DifferentialMatrices& diff) const {
    return max_entry(constraint_image(cone_, diff, basis_.combine(c)));
  }

  const ConstraintBasis& basis() const { return basis_; }

 private:
  ComplexLieModel m_;
  FunctionalKind kind_;
  Cone cone_;
  ConstraintBasis basis_;
  HermitianMetric nu_;
  DescentOptions opt_;
  Form nu_form_;
};

}  // namespace

DescentTrace descend(const ComplexLieModel& m, FunctionalKind functional,
                     const HermitianMetric& start, const DescentOptions& opt) {
  Cone cone;
  switch (functional) {
    case FunctionalKind::F:
    case FunctionalKind::FTilde: cone = Cone::SKT; break;
    case FunctionalKind::G: cone = Cone::Balanced; break;
    default:
      throw Error(ErrorCode::SchemaError,
                  std::string("descend does not support functional ") +
                      functional_name(functional));
  }
  const int n = m.n;
  const OperatorBundle b0 = build_bundle(m, start);
  const double start_residual = cone == Cone::SKT ? ddbar_residual(b0.diff, b0.omega)
                                                  : balanced_residual(b0.diff, b0.omega);
  if (start_residual > opt.tol)
    throw Error(ErrorCode::InfeasibleStart, std::string("start metric is not ") +
                                                cone_name(cone) + " (residual " +
                                                sci(start_residual) + ")");

  DescentTrace trace;
  trace.functional = functional;
  trace.cone = cone;
  const HermitianMetric nu = opt.nu ? *opt.nu : HermitianMetric::identity(n);
  if (nu.n() != n) throw Error(ErrorCode::DimensionMismatch, "nu has the wrong dimension");
  const Problem prob(m, functional, cone, constraint_basis(m, cone, start), nu, opt);
  trace.basis = prob.basis();

  const Form start_element = cone == Cone::SKT ? b0.omega : normalized_power(b0.omega, n - 1);
  double proj_residual = 0.0;
  Eigen::VectorXd c = prob.basis().coordinates(start_element, b0, &proj_residual);
  if (proj_residual > opt.tol * std::max(1.0, start_element.max_abs()))
    throw Error(ErrorCode::InfeasibleStart, "start metric lies outside the constraint span");
  c = prob.normalize(c);
  Evaluation cur = prob.evaluate(c);
  if (!cur.positive) throw Error(ErrorCode::InfeasibleStart, "start metric is not positive");

  const double initial_value = cur.value;
  double step = 0.0;
  double rel = opt.max_step;
  for (int it = 0;; ++it) {
    int analytic = 0;
    const bool kahler_level = cur.value < 1e-12 * (initial_value + 1.0);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.size());
    bool gradient_failed = false;
    if (!kahler_level) {
      try {
        g = prob.gradient(c, cur, &analytic);
      } catch (const Error& e) {
        // Finite differences next to a degenerate metric can lose certification.
        if (e.code() != ErrorCode::ToleranceFailure && e.code() != ErrorCode::ToleranceAmbiguity &&
            e.code() != ErrorCode::StepTooLarge)
          throw;
        gradient_failed = true;
      }
    }

    DescentRecord rec;
    rec.iteration = it;
    rec.coefficients = c;
    rec.value = cur.value;
    rec.gradient_norm = g.norm();
    rec.min_eigenvalue = min_eigenvalue(cur.metric.H);
    rec.step = step;
    rec.normalization = prob.normalization(c);
    rec.constraint_residual = prob.constraint_residual(c, b0.diff);
    rec.analytic_components = analytic;
    trace.records.push_back(rec);
    trace.final_metric = cur.metric;

    if (gradient_failed) {
      trace.termination = Termination::NumericalStall;
      break;
    }
    if (kahler_level) {
      trace.kahler_detected = true;
      trace.termination = Termination::GradientSmall;
      trace.inconsistent = !predicates(*cur.bundle, 1e-6).is_kahler;
      break;
    }
    if (rec.gradient_norm <= opt.grad_tol) {
      trace.termination = Termination::GradientSmall;
      break;
    }
    if (it >= opt.max_iters) {
      trace.termination = Termination::MaxIters;
      break;
    }

    const Eigen::VectorXd dir = -g / g.norm();
    const double scale = c.norm();
    rel = std::min(opt.max_step, 2.0 * rel);
    bool accepted = false;
    bool only_positivity = true;
    while (rel >= 1e-16) {
      const Eigen::VectorXd trial = prob.normalize(c + rel * scale * dir);
      Evaluation e = prob.evaluate(trial);
      if (e.positive && e.certified && e.value < cur.value) {
        c = trial;
        cur = std::move(e);
        step = rel;
        accepted = true;
        break;
      }
      if (e.positive) only_positivity = false;
      ++trace.rejected_steps;
      rel *= 0.5;
    }
    if (!accepted) {
      trace.termination =
          only_positivity ? Termination::PositivityBoundary : Termination::NumericalStall;
      break;
    }
  }

  const Eigen::MatrixXcd& H = trace.final_metric.H;
  trace.degenerating =
      opt.normalize && min_eigenvalue(H) < 1e-6 * H.trace().real() / static_cast<double>(n);
  return trace;
}

}  // namespace hermicone
