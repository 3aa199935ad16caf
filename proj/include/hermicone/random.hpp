#pragma once

#include <random>

#include "hermicone/exterior.hpp"

namespace hermicone {

using Rng = std::mt19937_64;

cplx random_complex(Rng& rng);
Vec random_vector(int size, Rng& rng);
Eigen::MatrixXcd random_complex_matrix(int rows, int cols, Rng& rng);
Eigen::MatrixXcd random_hermitian(int n, Rng& rng);

/// H = B^dagger B / n + eps * I with complex Gaussian B.
Eigen::MatrixXcd random_metric_matrix(int n, Rng& rng, double eps = 0.5);

Form random_form(int n, Bidegree b, Rng& rng);
/// Real (1,1)-form i * sum A_{jk} theta^j ^ thetabar^k with A random Hermitian.
Form random_real_11(int n, Rng& rng);

}  // namespace hermicone
