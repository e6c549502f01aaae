#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "findim/error.hpp"
#include "findim/spectrum.hpp"
#include "findim/util.hpp"

using namespace findim;
namespace sp = findim::spectrum;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

Eigen::VectorXd dvec(std::initializer_list<double> v) {
    Eigen::VectorXd d(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) d(i++) = x;
    return d;
}

// Direct enumeration of all d_j nu^2 below a cutoff, for cross-checking the
// heap merge.
std::vector<double> brute_force(const Eigen::VectorXd& d, int N) {
    std::vector<double> all;
    double cap = 0.0;
    {
        auto t = sp::enumerate_spectrum(d, N);
        cap = t.entries.back().lambda;
    }
    for (int j = 0; j < d.size(); ++j) {
        for (int nu = 1;; ++nu) {
            double lam = sp::eigenvalue(d(j), nu);
            if (lam > cap) break;
            all.push_back(lam);
        }
    }
    std::sort(all.begin(), all.end());
    all.resize(N);
    return all;
}

}  // namespace

TEST_CASE("hand-checked spectra") {
    auto t = sp::enumerate_spectrum(dvec({1.0}), 3);
    REQUIRE(t.size() == 3);
    CHECK(t.entries[0].lambda == sp::eigenvalue(1.0, 1));
    CHECK(t.entries[1].lambda == sp::eigenvalue(1.0, 2));
    CHECK(t.entries[2].lambda == sp::eigenvalue(1.0, 3));
    CHECK(t.entries[2].nu == 3);
    CHECK(t.entries[0].lambda == doctest::Approx(kPi2).epsilon(1e-15));

    auto t2 = sp::enumerate_spectrum(dvec({1.0, 4.0}), 6);
    double over_pi2[6] = {1, 4, 4, 9, 16, 16};
    for (int n = 0; n < 6; ++n)
        CHECK(t2.entries[n].lambda == doctest::Approx(over_pi2[n] * kPi2).epsilon(1e-15));
    // the tie at 4 pi^2 carries both provenance tags
    CHECK(t2.entries[1].j == 1);
    CHECK(t2.entries[1].nu == 2);
    CHECK(t2.entries[2].j == 2);
    CHECK(t2.entries[2].nu == 1);

    auto t3 = sp::enumerate_spectrum(dvec({3.0, 2.0, 5.0}), 1);
    CHECK(t3.entries[0].lambda == sp::eigenvalue(2.0, 1));
    CHECK(t3.entries[0].j == 2);
}

TEST_CASE("negative or zero diffusion is rejected") {
    CHECK_THROWS_AS(sp::enumerate_spectrum(dvec({1.0, -2.0}), 5), NotPositive);
    CHECK_THROWS_AS(sp::enumerate_spectrum(dvec({0.0}), 5), NotPositive);
    CHECK_THROWS_AS(sp::enumerate_spectrum(dvec({1.0}), 0), Error);
}

TEST_CASE("heap merge agrees with brute force on random coefficient vectors") {
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> ud(0.1, 10.0);
    std::uniform_int_distribution<int> um(1, 4);
    for (int trial = 0; trial < 50; ++trial) {
        int m = um(rng);
        Eigen::VectorXd d(m);
        for (int j = 0; j < m; ++j) d(j) = ud(rng);
        int N = trial < 45 ? 200 : 2000;
        auto t = sp::enumerate_spectrum(d, N);
        auto bf = brute_force(d, N);
        REQUIRE(t.size() == N);
        for (int n = 0; n < N; ++n) CHECK(t.entries[n].lambda == bf[n]);
        // sortedness and tag consistency
        for (int n = 0; n < N; ++n) {
            CHECK(t.entries[n].lambda == sp::eigenvalue(d(t.entries[n].j - 1), t.entries[n].nu));
            if (n > 0) CHECK(t.entries[n].lambda >= t.entries[n - 1].lambda);
        }
        CHECK(sp::verify_counting_bounds(t).max_violation == 0.0);
    }
}

TEST_CASE("counting bounds are tight without violation in the equality cases") {
    auto t1 = sp::enumerate_spectrum(dvec({1.0}), 100);
    auto r1 = sp::verify_counting_bounds(t1);
    CHECK(r1.max_violation == 0.0);
    CHECK(r1.worst_index == 0);

    // m = 2, equal coefficients: lower bound is attained exactly at even n
    auto t2 = sp::enumerate_spectrum(dvec({1.0, 1.0}), 100);
    CHECK(sp::verify_counting_bounds(t2).max_violation == 0.0);

    auto t3 = sp::enumerate_spectrum(dvec({1.0, 4.0}), 100);
    CHECK(sp::verify_counting_bounds(t3).max_violation == 0.0);
}

TEST_CASE("fault injection: a corrupted eigenvalue is flagged with its index") {
    auto t = sp::enumerate_spectrum(dvec({1.0}), 10);
    t.entries[1].lambda *= 0.5;  // now 2 pi^2, below the lower bound 4 pi^2
    auto r = sp::verify_counting_bounds(t);
    CHECK(r.max_violation > 0.0);
    CHECK(r.worst_index == 2);
    CHECK(r.max_violation == doctest::Approx(2.0 * kPi2).epsilon(1e-12));
}

TEST_CASE("normalised gaps grow: scalar chain") {
    auto t = sp::enumerate_spectrum(dvec({1.0}), 100);
    auto r = sp::gap_growth_proxy(t);
    // gaps are pi^2 (2n+1), so the normalised gap is pi^2 (2 + 1/n): sup at n=1
    CHECK(r.sup_seen == doctest::Approx(3.0 * kPi2).epsilon(1e-13));
    CHECK(r.sup_seen >= 2.0 * kPi2 * (1.0 - 1.0 / 100));
    CHECK(r.threshold == doctest::Approx(0.5 * kPi2).epsilon(1e-13));
    CHECK(r.pass);
    REQUIRE(static_cast<int>(r.running_max.size()) == 99);
    for (std::size_t i = 1; i < r.running_max.size(); ++i)
        CHECK(r.running_max[i] >= r.running_max[i - 1]);
}

TEST_CASE("normalised gaps grow: multiplicities and incommensurable pairs") {
    auto t1 = sp::enumerate_spectrum(dvec({1.0, 1.0}), 400);
    CHECK(sp::gap_growth_proxy(t1).pass);
    auto t2 = sp::enumerate_spectrum(dvec({1.0, 2.0}), 400);
    auto r2 = sp::gap_growth_proxy(t2);
    CHECK(r2.pass);
    CHECK(r2.sup_seen > 0.0);
}

TEST_CASE("gap windows: scalar chain closed forms") {
    auto t = sp::enumerate_spectrum(dvec({1.0}), 200);
    auto w = sp::construct_gap_sequence(t, 0.8, kPi2);
    // gap pi^2 (2n+1) > pi^2 n always: every interior index qualifies
    REQUIRE(static_cast<int>(w.size()) == 199);
    CHECK(w[0].n_k == 1);
    CHECK(w[0].a_k == doctest::Approx(2.5 * kPi2).epsilon(1e-14));
    CHECK(w[0].xi_k == doctest::Approx(kPi2).epsilon(1e-14));
    // ratio ~ a^(0.4)/xi ~ n^(-0.2): decays along the list
    CHECK(w.back().ratio < w.front().ratio);
    auto rep = sp::test_sparsity_condition(w, 0.8);
    CHECK(rep.xi_unbounded);
    CHECK(rep.tail_slope == doctest::Approx(-0.1).epsilon(0.05));
    CHECK(rep.pass);
}

TEST_CASE("gap selection can come up empty") {
    auto t = sp::enumerate_spectrum(dvec({1.0}), 50);
    CHECK_THROWS_AS(sp::construct_gap_sequence(t, 0.8, 10.0 * kPi2), EmptySelection);
}

TEST_CASE("gap windows for an incommensurable pair at scale") {
    auto t = sp::enumerate_spectrum(dvec({1.0, 4.0}), 10000);
    auto w = sp::construct_gap_sequence(t, 0.8, 1.0);  // validates windows internally
    CHECK(!w.empty());
    auto rep = sp::test_sparsity_condition(w, 0.8);
    CHECK(rep.pass);
}

TEST_CASE("sparsity ratios are monotone in alpha") {
    auto t = sp::enumerate_spectrum(dvec({1.0}), 300);
    auto w = sp::construct_gap_sequence(t, 0.8, sp::default_eps(t));
    auto lo = sp::test_sparsity_condition(w, 0.8);
    auto hi = sp::test_sparsity_condition(w, 0.99);
    REQUIRE(lo.ratios.size() == hi.ratios.size());
    for (std::size_t k = 0; k < lo.ratios.size(); ++k) CHECK(hi.ratios[k] > lo.ratios[k]);
}

TEST_CASE("synthetic constant gaps fail the sparsity surrogate") {
    std::vector<sp::GapWindow> w;
    for (int k = 1; k <= 40; ++k) {
        sp::GapWindow win;
        win.n_k = k;
        win.a_k = 10.0 * k;
        win.xi_k = 1.0;  // bounded: xi does not grow
        win.ratio = std::pow(win.a_k, 0.4);
        w.push_back(win);
    }
    auto rep = sp::test_sparsity_condition(w, 0.8);
    CHECK(!rep.xi_unbounded);
    CHECK(!rep.pass);
}

TEST_CASE("scaling the coefficients scales every spectral quantity linearly") {
    double c = 3.7;
    auto t1 = sp::enumerate_spectrum(dvec({1.0, 2.5}), 500);
    auto t2 = sp::enumerate_spectrum(dvec({c * 1.0, c * 2.5}), 500);
    for (int n = 0; n < 500; ++n) {
        CHECK(std::abs(t2.entries[n].lambda - c * t1.entries[n].lambda) <=
              1e-12 * c * t1.entries[n].lambda);
    }
    auto w1 = sp::construct_gap_sequence(t1, 0.8, sp::default_eps(t1));
    auto w2 = sp::construct_gap_sequence(t2, 0.8, sp::default_eps(t2));
    REQUIRE(w1.size() == w2.size());
    for (std::size_t k = 0; k < w1.size(); ++k) {
        CHECK(w1[k].n_k == w2[k].n_k);
        CHECK(std::abs(w2[k].a_k - c * w1[k].a_k) <= 1e-12 * c * w1[k].a_k);
        CHECK(std::abs(w2[k].xi_k - c * w1[k].xi_k) <= 1e-12 * c * w1[k].xi_k);
    }
}

TEST_CASE("csv emitters fix the column order") {
    auto t = sp::enumerate_spectrum(dvec({1.0, 4.0}), 3);
    std::ostringstream os;
    sp::write_spectrum_csv(os, t);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "n,lambda,j,nu");
    std::getline(is, line);
    CHECK(line == "1," + format_double(sp::eigenvalue(1.0, 1)) + ",1,1");

    auto w = sp::construct_gap_sequence(t, 0.8, sp::default_eps(t));
    std::ostringstream og;
    sp::write_gaps_csv(og, w);
    std::istringstream ig(og.str());
    std::getline(ig, line);
    CHECK(line == "k,n_k,a_k,xi_k,ratio");
}
