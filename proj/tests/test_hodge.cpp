#include <doctest.h>

#include "hermicone/errors.hpp"
#include "hermicone/random.hpp"
#include "oracles.hpp"

using namespace hermicone;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::SchemaError;
}

std::vector<HermitianMetric> sample_metrics(int n, std::uint64_t seed, int count) {
  std::vector<HermitianMetric> out{HermitianMetric::identity(n)};
  Rng rng(seed);
  for (int i = 0; i < count; ++i) out.push_back(make_metric(random_metric_matrix(n, rng)));
  return out;
}

}  // namespace

TEST_CASE("rho matches the least-squares oracle") {
  for (const char* name : {"kodaira_thurston", "torus2", "torus3"}) {
    const auto m = catalog(name);
    for (const auto& g : sample_metrics(m.n, 31, 4)) {
      const auto b = build_bundle(m, g);
      const auto rep = torsion_rho(b);
      const Vec ref = oracle::torsion_rho(b);
      const double scale = std::max(1.0, b.l2_norm(ref));
      CHECK(b.l2_norm(Vec(rep.torsion.to_global() - ref)) <= 1e-9 * scale);
      CHECK(rep.equation_residual <= 1e-9);
      CHECK(rep.kernel_residual <= 1e-9);
    }
  }
}

TEST_CASE("Gamma matches the least-squares oracle") {
  for (const char* name : {"iwasawa", "torus3", "torus2"}) {
    const auto m = catalog(name);
    for (const auto& g : sample_metrics(m.n, 32, 4)) {
      const auto b = build_bundle(m, g);
      const auto rep = torsion_gamma(b);
      const Vec ref = oracle::torsion_gamma(b);
      CHECK(b.l2_norm(Vec(rep.torsion.to_global() - ref)) <= 1e-9 * std::max(1.0, b.l2_norm(ref)));
      CHECK(rep.equation_residual <= 1e-9);
      CHECK(rep.kernel_residual <= 1e-9);
    }
  }
}

TEST_CASE("torsion vanishes exactly on tori") {
  Rng rng(2);
  for (const char* name : {"torus2", "torus3"}) {
    const auto m = catalog(name);
    const auto b = build_bundle(m, make_metric(random_metric_matrix(m.n, rng)));
    CHECK(torsion_rho(b).torsion.max_abs() == 0.0);
    CHECK(torsion_gamma(b).torsion.max_abs() == 0.0);
    CHECK(torsion_rho(b).norm_squared == 0.0);
  }
}

TEST_CASE("torsion values on the identity metric") {
  // Kodaira-Thurston: del(omega) splits evenly between harmonic and exact parts.
  const auto kt = build_bundle(catalog("kodaira_thurston"), HermitianMetric::identity(2));
  const auto rho = torsion_rho(kt);
  CHECK(rho.norm_squared == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(kt.l2(rho.harmonic_part, rho.harmonic_part).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kt.l2(rho.projected_part, rho.projected_part).real() ==
        doctest::Approx(0.5).epsilon(1e-12));
  // Iwasawa: omega_2 is entirely exact for delbar.
  const auto iw = build_bundle(catalog("iwasawa"), HermitianMetric::identity(3));
  const auto gamma = torsion_gamma(iw);
  CHECK(gamma.norm_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("torsion preconditions") {
  const auto iw = build_bundle(catalog("iwasawa"), HermitianMetric::identity(3));
  CHECK(code_of([&] { torsion_rho(iw); }) == ErrorCode::NotSKT);
  const auto kt = build_bundle(catalog("kodaira_thurston"), HermitianMetric::identity(2));
  CHECK(code_of([&] { torsion_gamma(kt); }) == ErrorCode::NotBalanced);
}

TEST_CASE("three-space decomposition is orthogonal and complete") {
  Rng rng(3);
  for (const auto& name : catalog_names()) {
    const auto m = catalog(name);
    const auto b = build_bundle(m, make_metric(random_metric_matrix(m.n, rng)));
    for (int k = 0; k <= 2 * m.n; ++k) {
      const auto r = three_space_check(b, k);
      CHECK(r.sum_residual < 1e-10);
      CHECK(r.orthogonality_residual < 1e-10);
      CHECK(r.idempotence_residual < 1e-10);
    }
  }
}

TEST_CASE("image projector agrees with the oracle projection") {
  Rng rng(4);
  const auto m = catalog("kodaira_thurston");
  const auto b = build_bundle(m, make_metric(random_metric_matrix(2, rng)));
  const Space s2 = Space::total(2), s3 = Space::total(3);
  const Vec y = random_vector(b.basis->count(s3), rng);
  const auto ls = oracle::min_norm_solve(b.block(b.diff.d, s2, s3).matrix,
                                         b.block(b.gram, s2, s2).matrix,
                                         b.block(b.gram, s3, s3).matrix, y);
  const Mat P = image_projector_d(b, 3).matrix;
  CHECK(max_abs(Mat(P * y - ls.projected)) < 1e-10);
}

TEST_CASE("harmonic projector and green operator are consistent") {
  Rng rng(5);
  const auto m = catalog("iwasawa");
  const auto b = build_bundle(m, make_metric(random_metric_matrix(3, rng)));
  for (const Laplacian which : {Laplacian::Del, Laplacian::Delbar}) {
    for (const Space s : {Space::bidegree(1, 1), Space::bidegree(2, 1)}) {
      const Mat P = harmonic_projector(b, which, s).matrix;
      const Mat Gr = green(b, which, s).matrix;
      const Mat L = b.block(b.laplacian(which), s, s).matrix;
      const Mat Id = Mat::Identity(P.rows(), P.cols());
      CHECK(max_abs(Mat(P * P - P)) < 1e-10);
      CHECK(max_abs(Mat(L * Gr - (Id - P))) < 1e-10);
      CHECK(max_abs(Mat(L * P)) < 1e-10);
      CHECK(max_abs(Mat(Gr * P)) < 1e-10);
    }
  }
  const auto sd = spectral_decomposition(b, Laplacian::D, Space::total(0));
  CHECK(sd.kernel_dim == 1);  // constants
}

TEST_CASE("a crowded kernel threshold is reported as ambiguous") {
  const auto b = build_bundle(catalog("kodaira_thurston"), HermitianMetric::identity(2));
  // The nonzero D-eigenvalue on 2-forms sits inside [thr/10, 10 thr] for tol 0.2.
  const auto sd = spectral_decomposition(b, Laplacian::D, Space::total(2), 0.2);
  CHECK(sd.ambiguous);
  CHECK(code_of([&] { harmonic_projector(b, Laplacian::D, Space::total(2), 0.2); }) ==
        ErrorCode::ToleranceAmbiguity);
  CHECK_FALSE(spectral_decomposition(b, Laplacian::D, Space::total(2)).ambiguous);
}

TEST_CASE("balanced matrix equals the cofactor matrix") {
  Rng rng(6);
  for (int n : {2, 3, 4}) {
    const Eigen::MatrixXcd H = random_metric_matrix(n, rng);
    const Form Omega = normalized_power(metric_form(H), n - 1);
    CHECK((balanced_matrix(Omega) - oracle::adjugate(H)).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXcd B = random_hermitian(n, rng);
    CHECK((balanced_matrix(balanced_form(n, B)) - B).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(is_real(balanced_form(n, B)));
  }
}

TEST_CASE("root of omega_{n-1} roundtrips and is homogeneous") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 2;
    const Eigen::MatrixXcd H = random_metric_matrix(n, rng);
    const Form Omega = normalized_power(metric_form(H), n - 1);
    const HermitianMetric root = root_n_minus_1(Omega);
    CHECK((root.H - H).cwiseAbs().maxCoeff() < 1e-10);
    for (double lambda : {0.5, 2.0, 3.0}) {
      const HermitianMetric scaled = root_n_minus_1(cplx(lambda) * Omega);
      CHECK((scaled.H - std::pow(lambda, 1.0 / (n - 1)) * H).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("root rejects non-positive input") {
  const int n = 3;
  const Form Omega = normalized_power(metric_form(Eigen::MatrixXcd::Identity(n, n)), n - 1);
  CHECK(code_of([&] { root_n_minus_1(cplx(-1.0) * Omega); }) == ErrorCode::NotPositive);
  CHECK(code_of([&] { root_n_minus_1(cplx(0.0, 1.0) * Omega); }) == ErrorCode::NotPositive);
  CHECK(code_of([&] { root_n_minus_1(Form(1)); }) == ErrorCode::DegenerateDimension);
}

TEST_CASE("predicates on the catalog") {
  struct Expect {
    const char* name;
    bool skt, balanced, kahler;
  };
  for (const Expect e : {Expect{"torus2", true, true, true}, Expect{"torus3", true, true, true},
                         Expect{"iwasawa", false, true, false},
                         Expect{"kodaira_thurston", true, false, false}}) {
    const auto m = catalog(e.name);
    const auto p = predicates(build_bundle(m, HermitianMetric::identity(m.n)));
    CHECK_MESSAGE(p.is_skt == e.skt, e.name);
    CHECK_MESSAGE(p.is_balanced == e.balanced, e.name);
    CHECK_MESSAGE(p.is_kahler == e.kahler, e.name);
  }
}
