#include "fracheat/stable_sampler.hpp"

#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

using namespace fracheat;

namespace {

// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        dmax = std::max({dmax, (i + 1) / n - f, f - i / n});
    }
    return dmax;
}

// Pearson chi-square p-value of counts against expected probabilities (the last bin absorbs the rest).
double chi_square_p(const std::vector<double>& counts, const std::vector<double>& probs, double n) {
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = n * probs[i];
        stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

} // namespace

TEST_SUITE("stable_sampler") {

TEST_CASE("positive 1/2-stable law is the Levy distribution") {
    // E[exp(-l S)] = exp(-sqrt(l))  <=>  P(S <= s) = erfc(1 / (2 sqrt(s)))
    rng_engine rng = make_stream(101, 0);
    const int n = 40000;
    std::vector<double> xs(n);
    for (double& x : xs)
        x = positive_stable_sample(0.5, rng);
    const double dstat = ks_statistic(xs, [](double s) { return std::erfc(0.5 / std::sqrt(s)); });
    CHECK(dstat < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("positive stable Laplace transform") {
    for (double beta : {0.2, 0.375, 0.75, 0.95}) {
        CAPTURE(beta);
        rng_engine rng = make_stream(202, 0);
        welford acc;
        for (int i = 0; i < 100000; ++i)
            acc.add(std::exp(-2.0 * positive_stable_sample(beta, rng)));
        CHECK(std::abs(acc.mean() - std::exp(-std::pow(2.0, beta))) < 4 * acc.std_error());
    }
}

TEST_CASE("isotropic increments have characteristic function exp(-t |xi|^alpha)") {
    for (double alpha : {0.5, 1.0, 1.5, 2.0})
        for (int d : {2, 3}) {
            CAPTURE(alpha);
            CAPTURE(d);
            const stability_index index(alpha, d);
            rng_engine rng = make_stream(303, d);
            const double t = 0.7;
            const point xi = d == 2 ? point{0.6, -0.8} : point{0.0, 1.2, -0.5}; // |xi| = 1 and 1.3
            const double norm = std::sqrt(std::inner_product(xi.begin(), xi.end(), xi.begin(), 0.0));
            welford re, im;
            for (int i = 0; i < 200000; ++i) {
                const point x = isotropic_increment(index, t, rng);
                const double phase = std::inner_product(xi.begin(), xi.end(), x.begin(), 0.0);
                re.add(std::cos(phase));
                im.add(std::sin(phase));
            }
            CHECK(std::abs(re.mean() - std::exp(-t * std::pow(norm, alpha))) < 4 * re.std_error());
            CHECK(std::abs(im.mean()) < 4 * im.std_error());
        }
}

TEST_CASE("gaussian increments have per-coordinate variance 2t") {
    rng_engine rng = make_stream(404, 0);
    welford v;
    for (int i = 0; i < 100000; ++i) {
        const point x = isotropic_increment(stability_index(2.0, 2), 0.25, rng);
        v.add(x[0] * x[0]);
    }
    CHECK(std::abs(v.mean() - 0.5) < 4 * v.std_error());
}

TEST_CASE("radial law of increments matches the kernel (chi-square)") {
    for (double alpha : {0.75, 1.5}) {
        CAPTURE(alpha);
        const stability_index index(alpha, 2);
        const auto k = shared_kernel(index);
        const std::vector<double> edges{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0};
        std::vector<double> probs, counts(edges.size(), 0.0);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            probs.push_back(k->radial_mass(1.0, edges[i], edges[i + 1]));
        probs.push_back(k->tail_probability(1.0, edges.back()));
        rng_engine rng = make_stream(505, 0);
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const point x = isotropic_increment(index, 1.0, rng);
            const double r = std::hypot(x[0], x[1]);
            const auto bin = std::upper_bound(edges.begin(), edges.end(), r) - edges.begin() - 1;
            counts[bin] += 1;
        }
        CHECK(chi_square_p(counts, probs, n) > 0.001);
    }
}

TEST_CASE("free path skeleton layout") {
    rng_engine rng = make_stream(606, 0);
    const path_skeleton p = sample_path_skeleton(point{0.1, 0.2}, 0.5, 8, stability_index(1.5, 2), rng);
    REQUIRE(p.times.size() == 9);
    REQUIRE(p.points.size() == 9);
    CHECK(p.points.front() == point{0.1, 0.2});
    for (int j = 0; j <= 8; ++j)
        CHECK(p.times[j] == doctest::Approx(0.5 * j / 8));
}

TEST_CASE("occupation fraction and survival on a hand-built path") {
    const shape sq = parse_shape("box:d=2,lo=0,0,hi=1,1");
    path_skeleton p;
    p.times = {0.0, 0.25, 0.5, 0.75, 1.0};
    p.points = {{0.5, 0.5}, {2.0, 0.5}, {0.5, 0.5}, {0.5, 0.6}, {3.0, 3.0}};
    CHECK(occupation_fraction(p, sq) == doctest::Approx(0.75));
    CHECK_FALSE(stayed_inside(p, sq));
    p.points[1] = {0.4, 0.4};
    p.points[4] = {0.9, 0.9};
    CHECK(stayed_inside(p, sq));
    std::ostringstream csv;
    write_skeleton_csv(csv, std::span<const path_skeleton>(&p, 1));
    CHECK(csv.str().rfind("path_id,s,x_1,x_2\n0,0,0.5,0.5\n", 0) == 0);
}

TEST_CASE("gaussian bridge midpoint has variance 2 s (t - s) / t") {
    const auto k = shared_kernel(stability_index(2.0, 2));
    rng_engine rng = make_stream(707, 0);
    const std::vector<double> times{0.5};
    welford v, m;
    for (int i = 0; i < 20000; ++i) {
        const bridge_skeleton b = sample_bridge_skeleton(point{0, 0}, point{1, 0}, 1.0, times, *k, rng);
        REQUIRE(b.points.size() == 3);
        CHECK(b.points.back() == point{1, 0});
        m.add(b.points[1][0]);
        v.add(b.points[1][1] * b.points[1][1]);
    }
    CHECK(std::abs(m.mean() - 0.5) < 4 * m.std_error());
    CHECK(std::abs(v.mean() - 0.5) < 4 * v.std_error());
}

TEST_CASE("bridge rejection reports a stall instead of looping") {
    const auto k = shared_kernel(stability_index(2.0, 2));
    rng_engine rng = make_stream(808, 0);
    const std::vector<double> times{0.01};
    bridge_config cfg;
    cfg.warmup_attempts = 1000;
    cfg.acceptance_floor = 1e-2;
    CHECK_THROWS_AS(sample_bridge_skeleton(point{0, 0}, point{3, 0}, 0.02, times, *k, rng, cfg), rejection_stall);
    const std::vector<double> unordered{0.5, 0.2};
    CHECK_THROWS_AS(sample_bridge_skeleton(point{0, 0}, point{0, 0}, 1.0, unordered, *k, rng), std::invalid_argument);
}

}
