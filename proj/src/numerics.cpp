#include "findim/numerics.hpp"

#include <cassert>
#include <stdexcept>

namespace findim {

Quadrature gauss_legendre_01(int q) {
    if (q < 1) throw std::invalid_argument("gauss_legendre_01: need q >= 1");
    // Symmetric tridiagonal Jacobi matrix for Legendre polynomials on [-1,1]:
    // zero diagonal, off-diagonal b_k = k / sqrt(4k^2 - 1).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
    for (int k = 1; k < q; ++k) {
        double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k - 1, k) = b;
        J(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Quadrature out;
    out.nodes.resize(q);
    out.weights.resize(q);
    for (int k = 0; k < q; ++k) {
        double x = es.eigenvalues()(k);            // node on [-1,1]
        double w = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
        out.nodes(k) = 0.5 * (x + 1.0);
        out.weights(k) = 0.5 * w;                  // [0,1] has length 1
    }
    return out;
}

Eigen::ArrayXd simpson_weights(int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("simpson_weights: n must be even and >= 2");
    double h = 1.0 / n;
    Eigen::ArrayXd w = Eigen::ArrayXd::Zero(n + 1);
    for (int i = 0; i < n; i += 2) {
        w(i) += h / 3.0;
        w(i + 1) += 4.0 * h / 3.0;
        w(i + 2) += h / 3.0;
    }
    return w;
}

std::vector<Eigen::MatrixXd> derivative_4th(const std::vector<Eigen::MatrixXd>& f, double h) {
    int n = static_cast<int>(f.size());
    if (n < 5) throw std::invalid_argument("derivative_4th: need at least 5 samples");
    std::vector<Eigen::MatrixXd> d(n);
    double s = 1.0 / (12.0 * h);
    d[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    d[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for (int i = 2; i < n - 2; ++i)
        d[i] = s * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    d[n - 2] = s * (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]);
    d[n - 1] = s * (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]);
    return d;
}

std::vector<double> cumulative_integral_4th(const std::vector<double>& f, double h) {
    int n = static_cast<int>(f.size());
    if (n < 4) throw std::invalid_argument("cumulative_integral_4th: need at least 4 samples");
    // Increment over [i, i+1] integrates the cubic through four nearby samples.
    auto inc = [&](int i) {
        if (i == 0)
            return h * (3.0 / 8.0 * f[0] + 19.0 / 24.0 * f[1] - 5.0 / 24.0 * f[2] + 1.0 / 24.0 * f[3]);
        if (i == n - 2)
            return h * (3.0 / 8.0 * f[n - 1] + 19.0 / 24.0 * f[n - 2] - 5.0 / 24.0 * f[n - 3] + 1.0 / 24.0 * f[n - 4]);
        return h * (-1.0 / 24.0 * f[i - 1] + 13.0 / 24.0 * f[i] + 13.0 / 24.0 * f[i + 1] - 1.0 / 24.0 * f[i + 2]);
    };
    std::vector<double> out(n);
    out[0] = 0.0;
    for (int i = 0; i + 1 < n; ++i) out[i + 1] = out[i] + inc(i);
    return out;
}

}  // namespace findim
