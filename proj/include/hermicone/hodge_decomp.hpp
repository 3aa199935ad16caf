#pragma once

#include "hermicone/metric.hpp"

namespace hermicone {

inline constexpr double kDefaultKernelTol = 1e-9;

struct SpectralDecomposition {
  Laplacian which = Laplacian::D;
  Space space;
  Eigen::VectorXd eigenvalues;  // ascending
  Mat eigenvectors;             // Gram-orthonormal columns
  double kernel_tol = kDefaultKernelTol;
  double threshold = 0.0;  // kernel_tol * max(1, lambda_max)
  int kernel_dim = 0;
  bool ambiguous = false;  // an eigenvalue lies in [threshold/10, 10*threshold]
};

SpectralDecomposition spectral_decomposition(const OperatorBundle& b, Laplacian which,
                                             const Space& s, double tol = kDefaultKernelTol);

/// Laplacian blocks: Del/Delbar take bidegree spaces, D takes total-degree spaces.
/// Each throws ToleranceAmbiguity when the spectrum crowds the kernel threshold.
OperatorMatrix harmonic_projector(const OperatorBundle& b, Laplacian which, const Space& s,
                                  double tol = kDefaultKernelTol);
OperatorMatrix green(const OperatorBundle& b, Laplacian which, const Space& s,
                     double tol = kDefaultKernelTol);

/// Block-diagonal assemblies over every space of the Laplacian.
Mat global_harmonic_projector(const OperatorBundle& b, Laplacian which,
                              double tol = kDefaultKernelTol);
Mat global_green(const OperatorBundle& b, Laplacian which, double tol = kDefaultKernelTol);

/// Block-diagonal assemblies over the listed spaces only (zero elsewhere);
/// out-of-range spaces are skipped.
Mat harmonic_on(const OperatorBundle& b, Laplacian which, const std::vector<Space>& spaces,
                double tol = kDefaultKernelTol);
Mat green_on(const OperatorBundle& b, Laplacian which, const std::vector<Space>& spaces,
             double tol = kDefaultKernelTol);

/// Projector onto Im d inside k-forms: d green(Delta) d*.
OperatorMatrix image_projector_d(const OperatorBundle& b, int k, double tol = kDefaultKernelTol);
/// Projector onto Im d* inside k-forms: d* green(Delta) d.
OperatorMatrix image_projector_d_star(const OperatorBundle& b, int k,
                                      double tol = kDefaultKernelTol);
/// Projector onto Im dbar inside (p,q)-forms: dbar green(Delta'') dbar*.
OperatorMatrix image_projector_dbar(const OperatorBundle& b, int p, int q,
                                    double tol = kDefaultKernelTol);
OperatorMatrix image_projector_dbar_star(const OperatorBundle& b, int p, int q,
                                         double tol = kDefaultKernelTol);

struct ThreeSpaceReport {
  double sum_residual = 0.0;         // |H + P_im + P_coim - Id|_max
  double orthogonality_residual = 0.0;  // max |P_i^dagger G P_j|, i != j
  double idempotence_residual = 0.0;
};

ThreeSpaceReport three_space_check(const OperatorBundle& b, int k,
                                   double tol = kDefaultKernelTol);

struct TorsionReport {
  enum class Kind { Rho, Gamma };
  Kind kind = Kind::Rho;
  HermitianMetric metric;
  Form source;          // del(omega), resp. omega_{n-1}
  Form torsion;         // rho, resp. Gamma
  Form harmonic_part;   // harmonic part of the source
  Form projected_part;  // projection of the source onto Im d, resp. Im dbar
  double equation_residual = 0.0;  // |d rho - P(source)|, L2
  double kernel_residual = 0.0;    // |component of torsion in ker d|, L2
  double norm_squared = 0.0;       // L2 norm squared of the torsion form
  double tol = 0.0;
};

/// Throws NotSKT, ToleranceFailure, ToleranceAmbiguity.
TorsionReport torsion_rho(const OperatorBundle& b, double tol = 1e-9,
                          double kernel_tol = kDefaultKernelTol);
/// Throws NotBalanced, ToleranceFailure, ToleranceAmbiguity.
TorsionReport torsion_gamma(const OperatorBundle& b, double tol = 1e-9,
                            double kernel_tol = kDefaultKernelTol);

/// Hermitian matrix B of an (n-1,n-1)-form: B_{kj} is the coefficient of
/// Omega ^ (i theta^j ^ thetabar^k) against Theta. For Omega = omega_{n-1},
/// B = det(H) H^{-1}.
Eigen::MatrixXcd balanced_matrix(const Form& omega_n_minus_1);
/// Inverse of balanced_matrix.
Form balanced_form(int n, const Eigen::MatrixXcd& B);

/// Unique positive H with omega_{n-1} = Omega. Throws NotPositive, DegenerateDimension.
HermitianMetric root_n_minus_1(const Form& Omega);

struct Predicates {
  bool is_skt = false;
  bool is_balanced = false;
  bool is_kahler = false;
  double ddbar_residual = 0.0;     // |del delbar omega|_max
  double balanced_residual = 0.0;  // |d omega_{n-1}|_max
  double kahler_residual = 0.0;    // |d omega|_max
};

/// Residuals are max-abs coefficients; these only depend on d and the metric form.
double ddbar_residual(const DifferentialMatrices& diff, const Form& omega);
double balanced_residual(const DifferentialMatrices& diff, const Form& omega);
double kahler_residual(const DifferentialMatrices& diff, const Form& omega);

Predicates predicates(const OperatorBundle& b, double tol = 1e-9);

}  // namespace hermicone
