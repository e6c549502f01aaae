#include "findim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <queue>

#include "findim/error.hpp"
#include "findim/util.hpp"

namespace findim::spectrum {

namespace {
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
}

double eigenvalue(double d_j, int nu) {
    return (d_j * kPi2) * (static_cast<double>(nu) * static_cast<double>(nu));
}

SpectrumTable enumerate_spectrum(const Eigen::VectorXd& d, int N) {
    if (N < 1) throw Error("enumerate_spectrum: N must be >= 1");
    int m = static_cast<int>(d.size());
    if (m < 1) throw Error("enumerate_spectrum: need at least one component");
    for (int j = 0; j < m; ++j)
        if (!(d(j) > 0.0)) throw NotPositive("diffusion coefficient d" + std::to_string(j + 1) +
                                             " is not positive");
    SpectrumTable t;
    t.m = m;
    t.d_minus = d.minCoeff();
    t.d_plus = d.maxCoeff();
    t.entries.reserve(N);

    auto order = [](const Entry& a, const Entry& b) {
        return std::tie(a.lambda, a.j, a.nu) > std::tie(b.lambda, b.j, b.nu);
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(order)> heap(order);
    for (int j = 1; j <= m; ++j) heap.push({eigenvalue(d(j - 1), 1), j, 1});
    while (t.size() < N) {
        Entry e = heap.top();
        heap.pop();
        t.entries.push_back(e);
        heap.push({eigenvalue(d(e.j - 1), e.nu + 1), e.j, e.nu + 1});
    }
    return t;
}

CountingReport verify_counting_bounds(const SpectrumTable& t) {
    if (t.size() == 0) throw Error("verify_counting_bounds: empty table");
    CountingReport rep;
    double msq = static_cast<double>(t.m) * static_cast<double>(t.m);
    for (int n = 1; n <= t.size(); ++n) {
        double nsq = static_cast<double>(n) * static_cast<double>(n);
        double lower = (t.d_minus * kPi2) * nsq / msq;
        double upper = (t.d_plus * kPi2) * nsq;
        double lam = t.entries[n - 1].lambda;
        double viol = std::max({lower - lam, lam - upper, 0.0});
        if (viol > rep.max_violation) {
            rep.max_violation = viol;
            rep.worst_index = n;
        }
    }
    return rep;
}

GapGrowthReport gap_growth_proxy(const SpectrumTable& t) {
    int N = t.size();
    if (N < 10) throw Error("gap_growth_proxy: need a table of at least 10 eigenvalues");
    GapGrowthReport rep;
    rep.threshold = kPi2 * t.d_minus / (2.0 * t.m * t.m);
    rep.running_max.resize(N - 1);
    double run = 0.0;
    int decade_start = N / 10;  // indices n > N/10 count as the top decade
    for (int n = 1; n < N; ++n) {
        double v = (t.entries[n].lambda - t.entries[n - 1].lambda) / n;
        run = std::max(run, v);
        rep.running_max[n - 1] = run;
        if (n > decade_start && v >= rep.threshold) rep.pass = true;
    }
    rep.sup_seen = run;
    return rep;
}

double default_eps(const SpectrumTable& t) { return kPi2 * t.d_minus / (t.m * t.m); }

std::vector<GapWindow> construct_gap_sequence(const SpectrumTable& t, double alpha, double eps) {
    if (!(alpha > 0.75 && alpha < 1.0)) throw ConfigError("alpha must lie in (3/4, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    int N = t.size();
    std::vector<GapWindow> out;
    double M = kPi2 * t.d_plus;
    for (int n = 1; n < N; ++n) {
        double lo = t.entries[n - 1].lambda, hi = t.entries[n].lambda;
        double gap = hi - lo;
        if (!(gap > eps * n)) continue;
        GapWindow w;
        w.n_k = n;
        w.a_k = 0.5 * (lo + hi);
        w.xi_k = gap / 3.0;
        w.ratio = std::pow(w.a_k, alpha / 2.0) / w.xi_k;
        // Quadratic bound from the qualifying condition; failure means the
        // table itself is corrupt.
        if (w.a_k > 27.0 * M * w.xi_k * w.xi_k / (eps * eps) * (1.0 + 1e-12))
            throw Error("gap window violates the quadratic bound — corrupt table");
        // The open window must straddle no eigenvalue.
        auto it = std::lower_bound(t.entries.begin(), t.entries.end(), w.a_k - w.xi_k,
                                   [](const Entry& e, double v) { return e.lambda <= v; });
        if (it != t.entries.end() && it->lambda < w.a_k + w.xi_k)
            throw Error("gap window contains an eigenvalue — corrupt table");
        out.push_back(w);
    }
    if (out.empty()) throw EmptySelection("no spectral gap exceeds eps * n in the computed range");
    return out;
}

SparsityReport test_sparsity_condition(const std::vector<GapWindow>& w, double alpha) {
    if (!(alpha > 0.75 && alpha < 1.0)) throw ConfigError("alpha must lie in (3/4, 1)");
    int K = static_cast<int>(w.size());
    if (K < 10) throw EmptySelection("sparsity trend needs at least 10 gap windows");
    SparsityReport rep;
    rep.ratios.reserve(K);
    for (const auto& win : w) rep.ratios.push_back(std::pow(win.a_k, alpha / 2.0) / win.xi_k);

    int decade = std::max(1, K / 10);
    double first_decade_max = 0.0;
    for (int k = 0; k < decade; ++k) first_decade_max = std::max(first_decade_max, w[k].xi_k);
    rep.xi_unbounded = w.back().xi_k > first_decade_max;

    // Least squares on (log a_k, log ratio) over the tail half.
    int start = K / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = K - start;
    for (int k = start; k < K; ++k) {
        double lx = std::log(w[k].a_k), ly = std::log(rep.ratios[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.tail_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.pass = rep.xi_unbounded && rep.tail_slope <= -0.01;
    return rep;
}

void write_spectrum_csv(std::ostream& os, const SpectrumTable& t) {
    os << "n,lambda,j,nu\n";
    for (int n = 1; n <= t.size(); ++n) {
        const Entry& e = t.entries[n - 1];
        os << n << ',' << format_double(e.lambda) << ',' << e.j << ',' << e.nu << '\n';
    }
}

void write_gaps_csv(std::ostream& os, const std::vector<GapWindow>& w) {
    os << "k,n_k,a_k,xi_k,ratio\n";
    for (std::size_t k = 0; k < w.size(); ++k) {
        os << k + 1 << ',' << w[k].n_k << ',' << format_double(w[k].a_k) << ','
           << format_double(w[k].xi_k) << ',' << format_double(w[k].ratio) << '\n';
    }
}

}  // namespace findim::spectrum
