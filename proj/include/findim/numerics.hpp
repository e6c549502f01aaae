#ifndef FINDIM_NUMERICS_HPP
#define FINDIM_NUMERICS_HPP

#include <Eigen/Dense>
#include <vector>

namespace findim {

struct Quadrature {
    Eigen::ArrayXd nodes;    // in (0,1)
    Eigen::ArrayXd weights;  // sum to 1
};

/// Gauss-Legendre rule with q points mapped to [0,1] (Golub-Welsch).
Quadrature gauss_legendre_01(int q);

/// Composite Simpson weights for a uniform grid of n+1 points on [0,1]; n must be even.
Eigen::ArrayXd simpson_weights(int n);

/// Fourth-order first derivative of a matrix-valued function sampled on a
/// uniform grid with spacing h (5-point central stencil, one-sided at the ends).
std::vector<Eigen::MatrixXd> derivative_4th(const std::vector<Eigen::MatrixXd>& f, double h);

/// Fourth-order cumulative integral: out[i] approximates the integral of f from
/// grid point 0 to grid point i.  Interval increments use cubic interpolation
/// through four neighbouring samples.
std::vector<double> cumulative_integral_4th(const std::vector<double>& f, double h);

}  // namespace findim

#endif
