// Test-only reference computations, kept independent of the production
// quadrature and stencils they are used to check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/model.hpp"

namespace oracle {

// Frozen reference values (30-digit arithmetic, checked against closed forms).
inline constexpr double kPi52 = 17.493418327624863;          // pi^{5/2}
inline constexpr double kBallVolume5 = 5.2637890139143246;   // |B_1| in d=5
inline constexpr double kH1Gauss5 = 7.8247660761640038;      // ||exp(-r^2/2)||_H, d=5
inline constexpr double kMoment2Gauss5 = 43.733545819062157; // int |u|^2 r^2 dx, d=5
inline constexpr double kEnergyGauss5 = 25.358521391400889;  // p=1.6, V=0, u=exp(-r^2/2)
inline constexpr double kSphereArea5 = 26.318945069571623;   // sigma_4 = 8 pi^2 / 3

// Production-discretization ground eigenvalue of -Lap + bump(-50, 2), d=5,
// n=256, r_max=16 (independent dense solve), and its continuum limit.
inline constexpr double kLambda1Deep256 = -31.3153089108;
inline constexpr double kLambda1DeepConverged = -31.29165;
// Same for the shallow well bump(-10, 2).
inline constexpr double kLambda1Shallow256 = -1.4739294860;

// Composite Gauss-Legendre quadrature of sigma_{d-1} int_0^R f(r) r^{d-1} dr;
// independent of the production trapezoid rule.
inline double radial_integral(int d, const std::function<double(double)>& f, double R,
                              int panels = 4096) {
  static const double node[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                 0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
  static const double wt[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                               0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
  const double sigma = nlslab::sphere_area(d);
  const double h = R / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * h, m = a + 0.5 * h;
    for (int q = 0; q < 6; ++q) {
      const double r = m + 0.5 * h * node[q];
      acc += 0.5 * h * wt[q] * f(r) * std::pow(r, d - 1);
    }
  }
  return sigma * acc;
}

// int_0^inf r^k exp(-r^2) dr = Gamma((k+1)/2) / 2.
inline double gaussian_radial_moment(int k) {
  return 0.5 * std::exp(std::lgamma(0.5 * (k + 1)));
}

// Exact eigenvalues of the flat Dirichlet second-difference matrix (d = 3
// reduction): lambda_k = (4/dr^2) sin^2(k pi / (2(n+1))), k = 1..n.
inline double dirichlet_discrete_eigenvalue(int k, int n, double r_max) {
  const double dr = r_max / (n + 1);
  const double s = std::sin(0.5 * k * M_PI / (n + 1));
  return 4.0 * s * s / (dr * dr);
}

// Conservative flux-form discretization of -Lap + V on the same nodes; a
// different second-order scheme, used as an independent eigenvalue oracle.
inline double flux_form_ground_eigenvalue(int d, int n, double r_max,
                                          const nlslab::PotentialSpec& pot) {
  const double dr = r_max / (n + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double r = (j + 1) * dr;
    const double wl = std::pow(r - 0.5 * dr, d - 1);
    const double wr = std::pow(r + 0.5 * dr, d - 1);
    B(j, j) = std::pow(r, d - 1);
    A(j, j) = (wl + wr) / (dr * dr) + pot.value(r) * B(j, j);
    if (j > 0) A(j, j - 1) = -wl / (dr * dr);
    if (j + 1 < n) A(j, j + 1) = -wr / (dr * dr);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  return es.eigenvalues()[0];
}

// Smooth, localized, even random field: a few symmetrized Gaussian bumps.
inline nlslab::RadialField random_smooth_field(nlslab::GridPtr grid, std::mt19937_64& rng,
                                               double max_center, bool complex_phase = false) {
  const auto uniform = [&](double lo, double hi) {
    const double u = double(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  nlslab::RadialField f = nlslab::zero_field(grid);
  const int bumps = 2 + int(rng() % 4);
  for (int b = 0; b < bumps; ++b) {
    const double c = uniform(0.0, max_center);
    const double w = uniform(1.0, 3.0);
    const double amp = uniform(-1.0, 1.0);
    const double k = complex_phase ? uniform(-1.0, 1.0) : 0.0;
    for (int j = 0; j < grid->n; ++j) {
      const double r = grid->r[j];
      const double env = std::exp(-std::pow((r - c) / w, 2)) + std::exp(-std::pow((r + c) / w, 2));
      f.values[j] += amp * env * std::polar(1.0, k * r);
    }
  }
  return f;
}

}  // namespace oracle
