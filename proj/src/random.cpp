#include "hermicone/random.hpp"

namespace hermicone {

cplx random_complex(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

Vec random_vector(int size, Rng& rng) {
  Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = random_complex(rng);
  return v;
}

Eigen::MatrixXcd random_complex_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = random_complex(rng);
  return m;
}

Eigen::MatrixXcd random_hermitian(int n, Rng& rng) {
  const Eigen::MatrixXcd a = random_complex_matrix(n, n, rng);
  return 0.5 * (a + a.adjoint());
}

Eigen::MatrixXcd random_metric_matrix(int n, Rng& rng, double eps) {
  const Eigen::MatrixXcd b = random_complex_matrix(n, n, rng);
  Eigen::MatrixXcd h = b.adjoint() * b / static_cast<double>(2 * n);
  h += eps * Eigen::MatrixXcd::Identity(n, n);
  return 0.5 * (h + h.adjoint());
}

Form random_form(int n, Bidegree b, Rng& rng) {
  Form f(n);
  f.set_component(b, random_vector(ExteriorBasis::get(n)->count(b), rng));
  return f;
}

Form random_real_11(int n, Rng& rng) { return metric_form(random_hermitian(n, rng)); }

}  // namespace hermicone
