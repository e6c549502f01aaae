#ifndef FINDIM_SPECTRUM_HPP
#define FINDIM_SPECTRUM_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace findim::spectrum {

/// One eigenvalue of -D d^2/dx^2 on (0,1) with Dirichlet conditions:
/// lambda = d_j pi^2 nu^2, tagged with its component j (1-based) and mode nu.
struct Entry {
    double lambda;
    int j;
    int nu;
};

struct SpectrumTable {
    std::vector<Entry> entries;  // ascending, ties kept as distinct entries
    double d_minus = 0.0;
    double d_plus = 0.0;
    int m = 0;
    int size() const { return static_cast<int>(entries.size()); }
};

/// Shared closed form so table entries and bound checks agree bit-for-bit.
double eigenvalue(double d_j, int nu);

/// N smallest eigenvalues over all components, by k-way heap merge.
SpectrumTable enumerate_spectrum(const Eigen::VectorXd& d, int N);

struct CountingReport {
    double max_violation = 0.0;  // distance outside [pi^2 d_-/m^2 n^2, pi^2 d_+ n^2]
    int worst_index = 0;         // 1-based n of the worst entry; 0 when clean
};
CountingReport verify_counting_bounds(const SpectrumTable& t);

struct GapGrowthReport {
    double sup_seen = 0.0;            // sup_n of (lambda_{n+1}-lambda_n)/n
    double threshold = 0.0;           // pi^2 d_- / (2 m^2)
    bool pass = false;                // threshold attained in the top decade
    std::vector<double> running_max;  // running max of the normalised gaps
};
GapGrowthReport gap_growth_proxy(const SpectrumTable& t);

struct GapWindow {
    double a_k;    // centre of the eigenvalue-free interval
    double xi_k;   // one third of the straddled gap
    int n_k;       // lower index of the gap pair
    double ratio;  // a_k^(alpha/2) / xi_k
};

/// Windows around every gap with lambda_{n+1} - lambda_n > eps * n.  Each
/// window is checked to be eigenvalue-free and to satisfy
/// a_k <= 27 pi^2 d_+ xi_k^2 / eps^2.  Throws EmptySelection if none qualify.
std::vector<GapWindow> construct_gap_sequence(const SpectrumTable& t, double alpha, double eps);

/// Default gap threshold: half the curvature constant of the lower counting
/// bound, pi^2 d_- / m^2.
double default_eps(const SpectrumTable& t);

struct SparsityReport {
    std::vector<double> ratios;
    bool xi_unbounded = false;  // last xi exceeds the first decade's max
    double tail_slope = 0.0;    // LS slope of log ratio vs log a_k, tail half
    bool pass = false;
};
SparsityReport test_sparsity_condition(const std::vector<GapWindow>& w, double alpha);

// CSV emitters; column order is part of the artifact contract.
void write_spectrum_csv(std::ostream& os, const SpectrumTable& t);
void write_gaps_csv(std::ostream& os, const std::vector<GapWindow>& w);

}  // namespace findim::spectrum

#endif
