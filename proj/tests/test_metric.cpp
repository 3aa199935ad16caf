#include <doctest.h>

#include "hermicone/errors.hpp"
#include "hermicone/metric.hpp"
#include "hermicone/random.hpp"

using namespace hermicone;

namespace {

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

OperatorBundle random_bundle(const std::string& name, Rng& rng) {
  const auto m = catalog(name);
  return build_bundle(m, make_metric(random_metric_matrix(m.n, rng)));
}

}  // namespace

TEST_CASE("make_metric validates its input") {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(2, 2);
  CHECK(make_metric(H).n() == 2);
  H(0, 1) = 0.5;
  CHECK_THROWS_AS(make_metric(H), Error);  // not Hermitian
  H(1, 0) = 0.5;
  H(1, 1) = 0.1;
  CHECK_THROWS_AS(make_metric(H), Error);  // indefinite
  H(1, 1) = std::nan("");
  CHECK_THROWS_AS(make_metric(H), Error);
  try {
    make_metric(-Eigen::MatrixXcd::Identity(2, 2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("build_bundle checks dimensions and models") {
  CHECK_THROWS_AS(build_bundle(catalog("torus3"), HermitianMetric::identity(2)), Error);
  ComplexLieModel affine{"affine", 2, {{2, TermKind::Holo, 1, 2, cplx(1.0, 0.0)}}};
  try {
    build_bundle(affine, HermitianMetric::identity(2));
    FAIL("expected ModelNotUnimodular");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ModelNotUnimodular);
  }
}

TEST_CASE("identity suite holds on random metrics") {
  for (const auto& name : catalog_names()) {
    Rng rng(100);
    for (int s = 0; s < 5; ++s) {
      const auto b = random_bundle(name, rng);
      const auto r = identity_suite(b, 7 + s);
      for (const auto& [k, v] : r.residuals) CHECK_MESSAGE(v <= 1e-10, name << " " << k << " " << v);
    }
  }
}

TEST_CASE("Lefschetz commutator on (1,1) for n=3 is the identity") {
  const auto b = build_bundle(catalog("torus3"), HermitianMetric::identity(3));
  const Space s = Space::bidegree(1, 1);
  const Mat comm = b.block(Mat(b.lambda * b.lefschetz - b.lefschetz * b.lambda), s, s).matrix;
  CHECK(max_abs(comm - Mat::Identity(9, 9)) < 1e-14);
}

TEST_CASE("Hodge star realizes the defining pairing") {
  Rng rng(4);
  for (const auto& name : catalog_names()) {
    const auto b = random_bundle(name, rng);
    const int n = b.n();
    const Form vol = normalized_power(b.omega, n);
    for (const Bidegree bd : {Bidegree{1, 0}, Bidegree{1, 1}, Bidegree{2, 1}, Bidegree{0, 2}}) {
      const Form u = random_form(n, bd, rng);
      const Form v = random_form(n, bd, rng);
      const Form star_conj_v = b.to_form(b.star * conj(v).to_global());
      const cplx lhs = integrate(wedge(u, star_conj_v));
      const cplx rhs = b.inner(u.to_global(), v.to_global()) * integrate(vol);
      CHECK(std::abs(lhs - rhs) < 1e-11 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("pointwise norms of the metric and its powers") {
  Rng rng(8);
  for (int n : {2, 3}) {
    const auto b = build_bundle(catalog(n == 2 ? "torus2" : "torus3"),
                                make_metric(random_metric_matrix(n, rng)));
    const Form w = b.omega;
    CHECK(std::abs(b.inner(w.to_global(), w.to_global()) - cplx(n)) < 1e-12);
    const Vec wn1 = normalized_power(w, n - 1).to_global();
    CHECK(std::abs(b.inner(wn1, wn1) - cplx(n)) < 1e-12);
    const Vec vol = normalized_power(w, n).to_global();
    CHECK(std::abs(b.inner(vol, vol) - 1.0) < 1e-12);
    // The volume factor of the L2 product is the integral of omega_n.
    CHECK(std::abs(b.volume - integrate(normalized_power(w, n)).real()) < 1e-12);
  }
}

TEST_CASE("gram matrix is Hermitian positive definite") {
  Rng rng(12);
  const Eigen::MatrixXcd H = random_metric_matrix(3, rng);
  const Mat G = gram_matrix(H);
  CHECK(max_abs(G - G.adjoint()) < 1e-13);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("Laplacians are self-adjoint and nonnegative") {
  Rng rng(15);
  for (const auto& name : catalog_names()) {
    const auto b = random_bundle(name, rng);
    for (const Laplacian which : {Laplacian::Del, Laplacian::Delbar, Laplacian::D}) {
      const Mat& L = b.laplacian(which);
      CHECK(max_abs(b.adjoint(L) - L) < 1e-11);
      const Vec u = random_vector(b.size(), rng);
      CHECK(b.inner(Vec(L * u), u).real() >= -1e-12);
      CHECK(std::abs(b.inner(Vec(L * u), u).imag()) < 1e-11);
    }
  }
}

TEST_CASE("full Laplacian splits on pure-type forms") {
  Rng rng(16);
  for (const auto& name : catalog_names()) {
    const auto b = random_bundle(name, rng);
    for (int p = 0; p <= b.n(); ++p)
      for (int q = 0; q <= b.n(); ++q) {
        const Vec a = random_form(b.n(), {p, q}, rng).to_global();
        const cplx full = b.l2(Vec(b.lap_d * a), a);
        const cplx split = b.l2(Vec(b.lap_del * a), a) + b.l2(Vec(b.lap_delbar * a), a);
        CHECK(std::abs(full - split) < 1e-11 * std::max(1.0, std::abs(full)));
      }
  }
}

TEST_CASE("adjoints and Laplacians scale inversely with the metric") {
  Rng rng(17);
  const auto m = catalog("iwasawa");
  const Eigen::MatrixXcd H = random_metric_matrix(3, rng);
  const auto b1 = build_bundle(m, make_metric(H));
  for (double lambda : {0.5, 2.0, 3.0}) {
    const auto bl = build_bundle(m, make_metric(lambda * H));
    CHECK(max_abs(bl.d_star - b1.d_star / lambda) < 1e-11);
    CHECK(max_abs(bl.lap_d - b1.lap_d / lambda) < 1e-11);
    CHECK(max_abs(bl.lap_delbar - b1.lap_delbar / lambda) < 1e-11);
  }
}

TEST_CASE("del omega is primitive for the Iwasawa identity metric") {
  const auto b = build_bundle(catalog("iwasawa"), HermitianMetric::identity(3));
  const Vec del_omega = b.diff.del * b.omega.to_global();
  CHECK(del_omega.cwiseAbs().maxCoeff() > 0.5);
  CHECK((b.lambda * del_omega).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("spectral blocks diagonalize the Laplacian") {
  Rng rng(18);
  const auto b = random_bundle("kodaira_thurston", rng);
  for (int k = 0; k <= 4; ++k) {
    const Space s = Space::total(k);
    const auto& eb = b.eigen_block(Laplacian::D, s);
    const Mat L = b.block(b.lap_d, s, s).matrix;
    const Mat G = b.block(b.gram, s, s).matrix;
    const Mat V = eb.vectors;
    CHECK(max_abs(L * V - V * eb.values.cast<cplx>().asDiagonal()) < 1e-11);
    CHECK(max_abs(V.adjoint() * G * V - Mat::Identity(V.cols(), V.cols())) < 1e-11);
  }
}
