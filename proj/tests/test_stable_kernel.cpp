#include "fracheat/stable_kernel.hpp"

#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

using namespace fracheat;
using std::numbers::pi;

namespace {

// Test-only oracle: termwise Bessel expansion of the radial inversion,
// p_1(r) = sum_k (-1)^k Gamma((2k+d)/alpha) r^(2k) / (alpha k! Gamma(k+d/2) 2^(2k+d-1) pi^(d/2)).
// Entire in r for alpha > 1.
double small_r_series(double alpha, int d, double r) {
    if (r == 0.0)
        return std::exp(boost::math::lgamma(d / alpha) - std::log(alpha) - boost::math::lgamma(d / 2.0) -
                        (d - 1) * std::log(2.0) - d / 2.0 * std::log(pi));
    double sum = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double log_mag = boost::math::lgamma((2.0 * k + d) / alpha) + 2.0 * k * std::log(r) -
                               std::log(alpha) - boost::math::lgamma(k + 1.0) - boost::math::lgamma(k + d / 2.0) -
                               (2.0 * k + d - 1) * std::log(2.0) - d / 2.0 * std::log(pi);
        const double term = (k % 2 ? -1.0 : 1.0) * std::exp(log_mag);
        sum += term;
        if (k > 5 && std::abs(term) < 1e-18 * std::abs(sum))
            break;
    }
    return sum;
}

double poisson(int d, double t, double r) { return kappa_const(d) * t / std::pow(t * t + r * r, (d + 1) / 2.0); }

} // namespace

TEST_SUITE("stable_kernel") {

TEST_CASE("stability index validates its domain") {
    CHECK_THROWS(stability_index(0.0, 2));
    CHECK_THROWS(stability_index(2.5, 2));
    CHECK_THROWS(stability_index(1.5, 1));
    CHECK_NOTHROW(stability_index(2.0, 3));
}

TEST_CASE("closed-form constants") {
    CHECK(beta_const(stability_index(1.0, 2)) == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-14));
    CHECK(beta_const(stability_index(1.0, 3)) == doctest::Approx(kappa_const(3)).epsilon(1e-14));
    CHECK(kappa_const(3) == doctest::Approx(1.0 / (pi * pi)).epsilon(1e-14));
    CHECK(beta_const(stability_index(2.0, 2)) == 0.0);
    CHECK(c_star_const(2.0) == doctest::Approx(4.0 / (15.0 * std::sqrt(pi))).epsilon(1e-14));
    CHECK(density_at_origin(stability_index(2.0, 2)) == doctest::Approx(1.0 / (4 * pi)).epsilon(1e-14));
    CHECK(density_at_origin(stability_index(1.0, 2)) == doctest::Approx(kappa_const(2)).epsilon(1e-14));
    CHECK(kappa_const(1) == doctest::Approx(1.0 / pi).epsilon(1e-14));
    // second gamma implementation: the C library
    CHECK(beta_const(stability_index(0.5, 3)) ==
          doctest::Approx(0.5 * std::pow(2.0, -0.5) * std::pow(pi, -2.5) * std::sin(pi / 4) * std::tgamma(1.75) *
                          std::tgamma(0.25))
              .epsilon(1e-13));
    CHECK(c_star_const(1.5) == doctest::Approx(2.25 * std::tgamma(1.0 / 3) / (pi * 2.5 * 4)).epsilon(1e-13));
    double prev = c_star_const(1.5);
    for (double a : {1.3, 1.1, 1.01, 1.001}) {
        CHECK(c_star_const(a) > prev);
        prev = c_star_const(a);
    }
    CHECK_THROWS(c_star_const(1.0));
    CHECK(unit_sphere_area(3) == doctest::Approx(4 * pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4 * pi / 3));
}

TEST_CASE("radial quadrature matches the independent small-r series") {
    for (double alpha : {1.2, 1.5, 1.8})
        for (int d : {2, 3})
            for (double r : {0.0, 0.05, 0.3, 1.0, 2.0}) {
                CAPTURE(alpha);
                CAPTURE(d);
                CAPTURE(r);
                const double q = r > 0 ? radial_density_quadrature(alpha, d, r)
                                       : density_at_origin(stability_index(alpha, d));
                CHECK(q == doctest::Approx(small_r_series(alpha, d, r)).epsilon(1e-9));
            }
}

TEST_CASE("radial quadrature reproduces the Poisson kernel") {
    for (int d : {2, 3})
        for (double r : {0.01, 0.5, 3.0, 20.0})
            CHECK(radial_density_quadrature(1.0, d, r) == doctest::Approx(poisson(d, 1.0, r)).epsilon(1e-9));
}

TEST_CASE("large-r series agrees with quadrature and leads with beta") {
    for (double alpha : {0.5, 1.5}) {
        const stability_index index(alpha, 2);
        const auto s = radial_density_series(alpha, 2, 30.0);
        CHECK(s.value == doctest::Approx(radial_density_quadrature(alpha, 2, 30.0)).epsilon(1e-7));
        // the first correction is relatively O(r^-alpha)
        const double r = std::pow(1e6, 1 / alpha);
        const auto far = radial_density_series(alpha, 2, r);
        CHECK(far.value * std::pow(r, 2 + alpha) == doctest::Approx(beta_const(index)).epsilon(1e-4));
        CHECK(far.log_slope == doctest::Approx(-(2 + alpha)).epsilon(1e-3));
    }
}

TEST_CASE("radial derivative identity p_d' = -2 pi r p_(d+2)") {
    const double alpha = 1.5, r = 0.7, h = 1e-4;
    const double fd = (radial_density_quadrature(alpha, 2, r + h) - radial_density_quadrature(alpha, 2, r - h)) / (2 * h);
    CHECK(fd == doctest::Approx(-2 * pi * r * radial_density_quadrature(alpha, 4, r)).epsilon(1e-6));
}

TEST_CASE("kernel scaling, monotonicity and mass") {
    for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
        CAPTURE(alpha);
        const auto k = shared_kernel(stability_index(alpha, 2));
        double prev = std::numeric_limits<double>::infinity();
        for (double r = 0.0; r < 50.0; r = r * 1.3 + 0.01) {
            const double p = (*k)(1.0, r);
            CHECK(p > 0.0);
            CHECK(p <= prev * (1 + 1e-12));
            prev = p;
        }
        const double t = 0.03, r = 0.2;
        CHECK((*k)(t, r) ==
              doctest::Approx(std::pow(t, -2.0 / alpha) * (*k)(1.0, r * std::pow(t, -1.0 / alpha))).epsilon(1e-10));
        CHECK(k->radial_mass(1.0, 0.0, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(k->radial_mass(t, 0.0, 0.5) + k->tail_probability(t, 0.5) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(k->tail_probability(t, 1.0) < k->tail_probability(t, 0.5));
    }
}

TEST_CASE("closed-form kernel values") {
    CHECK((*shared_kernel(stability_index(2.0, 2)))(1.0, 0.0) == doctest::Approx(1.0 / (4 * pi)).epsilon(1e-14));
    const auto cauchy = shared_kernel(stability_index(1.0, 2));
    CHECK((*cauchy)(2.0, 1.0) == doctest::Approx(2 * kappa_const(2) / std::pow(5.0, 1.5)).epsilon(1e-14));
    CHECK((*cauchy)(2.0, 1.0) == doctest::Approx((*cauchy)(1.0, 0.5) / 4).epsilon(1e-14));
    CHECK_THROWS((*cauchy)(0.0, 1.0));
    CHECK_THROWS((*cauchy)(-1.0, 1.0));
}

TEST_CASE("scaling law on random (t, r)") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> logu(-4.0, 1.0);
    for (double alpha : {0.5, 1.5}) {
        const auto k = shared_kernel(stability_index(alpha, 2));
        for (int i = 0; i < 100; ++i) {
            const double t = std::pow(10.0, logu(rng)), r = std::pow(10.0, logu(rng) + 0.5);
            CHECK((*k)(t, r) ==
                  doctest::Approx(std::pow(t, -2.0 / alpha) * (*k)(1.0, r * std::pow(t, -1.0 / alpha))).epsilon(1e-8));
        }
    }
}

TEST_CASE("normalization at several times by direct integration") {
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double alpha : {0.5, 1.0, 1.5, 2.0})
        for (int d : {2, 3})
            for (double t : {0.1, 1.0, 10.0}) {
                CAPTURE(alpha);
                CAPTURE(d);
                CAPTURE(t);
                const auto k = shared_kernel(stability_index(alpha, d));
                const double mass = integrator.integrate(
                    [&](double r) { return unit_sphere_area(d) * std::pow(r, d - 1) * (*k)(t, r); }, 1e-12);
                CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
            }
}

TEST_CASE("small-time limit p_t(1) / t -> beta") {
    for (double alpha : {0.5, 1.0, 1.5}) {
        CAPTURE(alpha);
        const stability_index index(alpha, 2);
        const auto k = shared_kernel(index);
        const double beta = beta_const(index);
        std::vector<double> ratio;
        for (double t : {1e-2, 1e-3, 1e-4})
            ratio.push_back((*k)(t, 1.0) / t);
        // non-increasing distance; alpha = 1/2 already sits on the stitched tail at t = 1e-3
        CHECK(std::abs(ratio[1] - beta) <= std::abs(ratio[0] - beta) + 1e-15);
        CHECK(std::abs(ratio[2] - beta) <= std::abs(ratio[1] - beta) + 1e-15);
        // first correction is O(t): Richardson on the two smallest times
        const double extrapolated = (10 * ratio[2] - ratio[1]) / 9;
        CHECK(extrapolated == doctest::Approx(beta).epsilon(0.01));
    }
}

TEST_CASE("alpha = 1/2 tail approaches beta from the profile") {
    const stability_index index(0.5, 2);
    const auto k = shared_kernel(index);
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {20.0, 40.0, 80.0}) {
        const double gap = std::abs((*k)(1.0, r) * std::pow(r, 2.5) / beta_const(index) - 1);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("profile matches the Poisson closed form and the tail constant") {
    const kernel_profile profile = build_profile(stability_index(1.0, 2));
    for (double r = 0.0; r <= 10.0; r += 0.137)
        CHECK(profile(r) == doctest::Approx(poisson(2, 1.0, r)).epsilon(1e-6));
    CHECK(profile.tail_constant() == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-12));
    CHECK(profile.switch_radius() >= 10.0);
}

TEST_CASE("profile for a non-integer index follows the series oracle") {
    const auto k = shared_kernel(stability_index(1.5, 2));
    REQUIRE(k->profile() != nullptr);
    for (double r : {0.0, 0.01, 0.2, 0.77, 1.5, 2.5})
        CHECK((*k)(1.0, r) == doctest::Approx(small_r_series(1.5, 2, r)).epsilon(1e-6));
    const double big = 5 * k->profile()->switch_radius();
    CHECK((*k)(1.0, big) * std::pow(big, 3.5) == doctest::Approx(beta_const(stability_index(1.5, 2))).epsilon(1e-3));
}

TEST_CASE("profile CSV round trip") {
    const auto k = shared_kernel(stability_index(1.5, 2));
    std::stringstream buf;
    k->profile()->write_csv(buf);
    CHECK(buf.str().rfind("# fracheat-kernel-profile v1\n", 0) == 0);
    const kernel_profile back = kernel_profile::read_csv(buf);
    CHECK(back.index() == k->profile()->index());
    for (double r : {0.0, 0.003, 0.5, 7.0, 123.0, 1e5})
        CHECK(back(r) == doctest::Approx((*k->profile())(r)).epsilon(1e-14));

    std::stringstream bad("# something else\n");
    CHECK_THROWS(kernel_profile::read_csv(bad));
}

TEST_CASE("two-sided comparison constant is finite and at least one") {
    const auto k = shared_kernel(stability_index(1.5, 2));
    const std::vector<double> times{1e-3, 1e-2, 1e-1};
    const std::vector<double> radii{1e-3, 0.1, 1.0, 10.0};
    const double c = fit_two_sided_constant(*k, times, radii);
    CHECK(c >= 1.0);
    CHECK(std::isfinite(c));
    for (double t : times)
        for (double r : radii) {
            const double m = std::min(std::pow(t, -2 / 1.5), t / std::pow(r, 3.5));
            CHECK((*k)(t, r) <= c * m * (1 + 1e-12));
            CHECK((*k)(t, r) >= m / c * (1 - 1e-12));
        }
}

}
