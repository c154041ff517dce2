#include "fracheat/functionals.hpp"
#include "fracheat/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

using namespace fracheat;
using std::numbers::pi;

namespace {

functional_config small_config(std::uint64_t n = 100000) {
    functional_config cfg;
    cfg.n_samples = n;
    cfg.n_steps = 16;
    cfg.seed = 77;
    cfg.quadrature_nodes = 8;
    return cfg;
}

bool within(const estimate& e, double target, double sigmas = 4.0, double slack = 0.0) {
    return std::abs(e.value - target) <= sigmas * e.std_error + slack;
}

} // namespace

TEST_SUITE("functionals") {

TEST_CASE("gaussian overlap closed form against direct quadrature") {
    for (double t : {1e-4, 0.01, 0.3, 5.0})
        for (double len : {0.5, 1.0, 3.0}) {
            auto f = [&](double h) { return (len - h) * std::exp(-h * h / (4 * t)) / std::sqrt(4 * pi * t); };
            const double direct = 2 * quad::adaptive(f, 0.0, len, 1e-13).value;
            CHECK(gaussian_overlap_1d(len, t) == doctest::Approx(direct).epsilon(1e-10));
        }
    const shape sq = parse_shape("box:d=2,lo=0,0,hi=1,2");
    CHECK(box_heat_content_exact(sq, 0.01) == doctest::Approx(gaussian_overlap_1d(1, 0.01) * gaussian_overlap_1d(2, 0.01)));
}

TEST_CASE("deficit quadrature agrees with closed forms and Monte Carlo") {
    const shape sq = parse_shape("box:d=2,lo=0,0,hi=1,1");
    const shape disk = parse_shape("ball:d=2,r=1");
    const auto gauss = shared_kernel(stability_index(2.0, 2));
    for (double t : {1e-3, 0.05})
        CHECK(deficit_quadrature(sq, *gauss, t) == doctest::Approx(1.0 - box_heat_content_exact(sq, t)).epsilon(1e-7));
    for (double alpha : {0.5, 1.0, 1.5, 2.0})
        for (const shape* s : {&sq, &disk}) {
            CAPTURE(alpha);
            CAPTURE(s->spec());
            const stability_index index(alpha, 2);
            const double t = 0.02;
            const heat_content_result h = heat_content(*s, index, t, small_config(200000));
            CHECK(within(h.deficit, deficit_quadrature(*s, *shared_kernel(index), t)));
            CHECK(h.heat.value + h.deficit.value == doctest::Approx(s->volume()).epsilon(1e-12));
        }
}

TEST_CASE("gaussian heat content of a 3-box against the erf product") {
    const shape cube = parse_shape("box:d=3,lo=0,0,0,hi=1,1,2");
    const heat_content_result h = heat_content(cube, stability_index(2.0, 3), 0.01, small_config(200000));
    CHECK(within(h.heat, box_heat_content_exact(cube, 0.01)));
    CHECK(deficit_quadrature(cube, *shared_kernel(stability_index(2.0, 3)), 0.01) ==
          doctest::Approx(2.0 - box_heat_content_exact(cube, 0.01)).epsilon(1e-8));
}

TEST_CASE("heat content is reproducible and thread independent") {
    const shape disk = parse_shape("ball:d=2,r=1");
    functional_config cfg = small_config(50000);
    cfg.chunk_size = 1000;
    const auto a = heat_content(disk, stability_index(1.5, 2), 0.01, cfg);
    cfg.threads = 3;
    const auto b = heat_content(disk, stability_index(1.5, 2), 0.01, cfg);
    CHECK(a.heat.value == b.heat.value);
    CHECK(a.heat.std_error == b.heat.std_error);
    cfg.seed += 1;
    CHECK(heat_content(disk, stability_index(1.5, 2), 0.01, cfg).heat.value != a.heat.value);
}

TEST_CASE("spectral heat content is dominated sample by sample") {
    const shape sq = parse_shape("box:d=2,lo=0,0,hi=1,1");
    for (double alpha : {0.5, 1.5, 2.0}) {
        const spectral_result q = spectral_heat_content(sq, stability_index(alpha, 2), 0.01, small_config(50000));
        CHECK(q.fine_steps == 2 * q.coarse_steps);
        CHECK(q.fine.value <= q.coarse.value);
        CHECK(q.fine.value <= q.heat.value);
        CHECK(q.refinement_gap() >= 0.0);
        CHECK(q.fine.value >= 0.0);
    }
}

TEST_CASE("occupation functionals respect their deterministic bounds") {
    const shape disk = parse_shape("ball:d=2,r=1");
    const double t = 0.05;
    const occupation_result o = occupation_functionals(disk, stability_index(1.5, 2), t, small_config(50000));
    const double vol = disk.volume();
    CHECK(o.psi.value >= 0.0);
    CHECK(o.psi.value <= t * vol);
    CHECK(o.excess.value == doctest::Approx(o.psi.value + t * (t / 2 - 1) * vol).epsilon(1e-9));
    CHECK(o.t2.value <= t * t * vol * (1 + 1e-12));
    CHECK(o.t3.value <= t * t * t * vol * (1 + 1e-12));
    CHECK(o.remainder_above_lower.value >= -4 * o.remainder_above_lower.std_error);
    CHECK(o.remainder_below_upper.value >= -4 * o.remainder_below_upper.std_error);
    CHECK(o.remainder.value == doctest::Approx(o.psi.value - t * vol + o.t2.value / 2).epsilon(1e-8));
    CHECK(o.bias_bound == 0.0);
}

TEST_CASE("moments") {
    const shape disk = parse_shape("ball:d=2,r=1");
    const stability_index index(1.5, 2);
    CHECK(t_moment(disk, index, 0.01, 1, small_config()).value == 0.01 * pi);
    CHECK(t_moment(disk, index, 0.01, 1, small_config()).std_error == 0.0);
    const double t = 1e-3;
    for (int k : {2, 3}) {
        const estimate e = t_moment(disk, index, t, k, small_config(50000));
        CHECK(e.value / std::pow(t, k) == doctest::Approx(pi).epsilon(0.02));
    }
    CHECK_THROWS(t_moment(disk, index, t, 4, small_config()));
}

TEST_CASE("T^(2) from Monte Carlo deficits agrees with the quadrature deficit") {
    const shape disk = parse_shape("ball:d=2,r=1");
    const stability_index index(1.5, 2);
    functional_config mc = small_config(50000);
    functional_config qd = mc;
    qd.deficit = deficit_source::quadrature;
    const estimate a = weighted_deficit_integral(disk, index, 0.01, mc);
    const estimate b = weighted_deficit_integral(disk, index, 0.01, qd);
    CHECK(b.std_error == 0.0);
    CHECK(within(a, b.value));
}

TEST_CASE("direct, decomposed and padded Psi routes agree") {
    const shape disk = parse_shape("ball:d=2,r=1");
    const stability_index index(1.5, 2);
    const double t = 0.02;
    const functional_config cfg = small_config(100000);
    const psi_result direct = psi_direct(disk, index, t, cfg);
    const psi_result decomposed = psi_decomposed(disk, index, t, cfg);
    CHECK(decomposed.r_lower <= decomposed.r_upper);
    const double sigma = std::hypot(direct.excess.std_error, decomposed.excess.std_error);
    CHECK(std::abs(direct.excess.value - decomposed.excess.value) <=
          4 * sigma + (decomposed.r_upper - decomposed.r_lower) / 2);

    functional_config padded = cfg;
    padded.route = psi_route::padded_box;
    const psi_result boxed = psi_direct(disk, index, t, padded);
    CHECK(boxed.bias_bound > 0.0);
    CHECK(std::abs(boxed.psi.value - direct.psi.value) <=
          4 * std::hypot(boxed.psi.std_error, direct.psi.std_error) + boxed.bias_bound);
}

TEST_CASE("simplex integrals: closed forms against nested quadrature") {
    CHECK(simplex_integral(simplex_kind::linear) == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(simplex_integral(simplex_kind::log_linear) == doctest::Approx(-5.0 / 36).epsilon(1e-15));
    CHECK(simplex_integral(simplex_kind::power, 2.0) == doctest::Approx(4.0 / 15).epsilon(1e-15));
    CHECK(std::abs(simplex_integral_quadrature(simplex_kind::linear) - 1.0 / 6) < 1e-10);
    CHECK(std::abs(simplex_integral_quadrature(simplex_kind::log_linear) + 5.0 / 36) < 1e-10);
    for (double alpha : {0.5, 1.5, 2.0})
        CHECK(std::abs(simplex_integral_quadrature(simplex_kind::power, alpha) -
                       simplex_integral(simplex_kind::power, alpha)) < 1e-10);
    const auto f = [](double x) { return x * x * std::exp(-x); };
    CHECK(simplex_2d(f) == doctest::Approx(simplex_reduced(f)).epsilon(1e-10));
    CHECK_THROWS(simplex_integral(simplex_kind::power));
}

TEST_CASE("estimate CSV rows") {
    std::ostringstream out;
    write_estimate_header(out);
    estimate_row row;
    row.alpha = 0.5;
    row.d = 2;
    row.shape = "ball:d=2,r=1";
    row.t = std::numeric_limits<double>::quiet_NaN();
    row.quantity = "alpha_perimeter";
    row.method = "quadrature";
    row.value = {62.5, 0.0, 0, 3};
    write_estimate_row(out, row);
    CHECK(out.str() == "alpha,d,shape,t,quantity,method,value,stderr,n_samples,n_steps,seed\n"
                       "0.5,2,\"ball:d=2,r=1\",,alpha_perimeter,quadrature,62.5,0,0,0,3\n");
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
    CHECK(csv_field("a\"b,c") == "\"a\"\"b,c\"");
}

TEST_CASE("argument validation") {
    const shape disk = parse_shape("ball:d=2,r=1");
    CHECK_THROWS_AS(heat_content(disk, stability_index(1.5, 2), 0.0, small_config()), std::invalid_argument);
    CHECK_THROWS_AS(heat_content(disk, stability_index(1.5, 3), 0.1, small_config()), std::invalid_argument);
    functional_config bad = small_config();
    bad.n_steps = 0;
    CHECK_THROWS_AS(psi_direct(disk, stability_index(1.5, 2), 0.1, bad), std::invalid_argument);
}

}
