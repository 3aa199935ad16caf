#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hermicone/variation.hpp"

namespace hermicone {

enum class Cone { SKT, Balanced };
const char* cone_name(Cone c);

/// Real basis of the constraint kernel: ker(del delbar) on real (1,1)-forms for
/// SKT, ker(delbar) on real (n-1,n-1)-forms for balanced. Orthonormal for
/// Re<<.,.>> of the reference metric.
struct ConstraintBasis {
  Cone cone = Cone::SKT;
  int n = 0;
  std::vector<Form> forms;
  HermitianMetric reference;
  Eigen::VectorXd feasible_point;  // coordinates of a positive element
  double constraint_residual = 0.0;  // max over basis elements, max-abs
  int dimension() const { return static_cast<int>(forms.size()); }

  Form combine(const Eigen::VectorXd& c) const;
  /// Orthogonal projection coordinates; `residual` gets the max-abs distance.
  Eigen::VectorXd coordinates(const Form& f, const OperatorBundle& ref, double* residual) const;
};

/// Throws EmptyCone when no positive element lies in the span.
ConstraintBasis constraint_basis(const ComplexLieModel& m, Cone cone,
                                 const HermitianMetric& reference);

/// The metric represented by a cone element: omega itself for SKT, the
/// (n-1)-st root for balanced. Throws NotPositiveDefinite / NotPositive.
HermitianMetric metric_of(Cone cone, const Form& element);

enum class Termination { GradientSmall, PositivityBoundary, MaxIters, NumericalStall };
const char* termination_name(Termination t);

struct DescentRecord {
  int iteration = 0;
  Eigen::VectorXd coefficients;
  double value = 0.0;
  double gradient_norm = 0.0;
  double min_eigenvalue = 0.0;
  double step = 0.0;  // relative displacement accepted to reach this iterate
  double normalization = 0.0;
  double constraint_residual = 0.0;
  int analytic_components = 0;  // gradient entries taken from the closed form
};

struct DescentOptions {
  int max_iters = 100;
  double grad_tol = 1e-10;
  bool normalize = true;
  std::optional<HermitianMetric> nu;  // identity when empty
  double tol = 1e-9;
  bool analytic_gradient = true;
  double max_step = 0.01;  // cap on the relative displacement |dc|/|c| per iteration
};

struct DescentTrace {
  FunctionalKind functional = FunctionalKind::F;
  Cone cone = Cone::SKT;
  std::vector<DescentRecord> records;
  Termination termination = Termination::MaxIters;
  bool kahler_detected = false;
  bool inconsistent = false;  // Kahler-level value without a Kahler metric
  bool degenerating = false;
  int rejected_steps = 0;
  HermitianMetric final_metric;
  ConstraintBasis basis;

  bool monotone() const;
};

/// Constrained steepest descent in orthonormal constraint coordinates.
/// F and Ftilde run on the SKT cone, G on the balanced cone.
/// Throws InfeasibleStart, SchemaError (unsupported functional).
DescentTrace descend(const ComplexLieModel& m, FunctionalKind functional,
                     const HermitianMetric& start, const DescentOptions& opt = {});

}  // namespace hermicone
