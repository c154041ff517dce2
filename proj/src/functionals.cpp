#include "fracheat/functionals.hpp"

#include "fracheat/quadrature.hpp"
#include "fracheat/stable_sampler.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fracheat {

namespace {

constexpr double pi = std::numbers::pi;
constexpr int max_dim = 64;

// salts separating the substreams of the different estimators
enum : std::uint64_t {
    salt_heat = 0x48,
    salt_spectral = 0x51,
    salt_anchored = 0x41,
    salt_padded = 0x50,
    salt_delta_node = 0x44,
};

void require_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument("t must be positive and finite");
}

void require_config(const functional_config& cfg) {
    if (cfg.n_samples < 2)
        throw std::invalid_argument("n_samples must be at least 2");
    if (cfg.n_steps < 1)
        throw std::invalid_argument("n_steps must be at least 1");
    if (cfg.quadrature_nodes < 1)
        throw std::invalid_argument("quadrature_nodes must be at least 1");
}

void require_match(const shape& s, const stability_index& index) {
    if (s.dim() != index.dim())
        throw std::invalid_argument("shape dimension and process dimension differ");
    if (s.dim() > max_dim)
        throw std::invalid_argument("dimension too large");
}

chunk_plan plan_of(const functional_config& cfg) { return {cfg.n_samples, cfg.chunk_size, cfg.threads}; }

estimate with_seed(estimate e, std::uint64_t seed) {
    e.seed = seed;
    return e;
}

// g(A) / A with g(A) = 1 - e^{-A} - A + A^2 / 2, without cancellation for small A
double g_over_a(double a) {
    if (a < 0.1) {
        // sum_{k >= 3} (-1)^(k+1) a^(k-1) / k!
        double term = a * a / 6.0;
        double sum = 0.0;
        for (int k = 3; k <= 14; ++k) {
            sum += term;
            term *= -a / (k + 1);
        }
        return sum;
    }
    return (-std::expm1(-a) - a + 0.5 * a * a) / a;
}

double one_minus_exp_over_a(double a) { return a == 0.0 ? 1.0 : -std::expm1(-a) / a; }

void step(const stability_index& index, double dt, rng_engine& rng, double* x) {
    double inc[max_dim];
    isotropic_increment_into(index, dt, rng, inc);
    for (int i = 0; i < index.dim(); ++i)
        x[i] += inc[i];
}

} // namespace

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos)
        return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

heat_content_result heat_content(const shape& s, const stability_index& index, double t,
                                 const functional_config& cfg) {
    require_time(t);
    require_config(cfg);
    require_match(s, index);
    const std::uint64_t seed = derive_seed(cfg.seed, {salt_heat, salt_of(t)});
    const auto acc = sample_means(plan_of(cfg), seed, 1, [&](rng_engine& rng, double* out) {
        double x[max_dim];
        sample_uniform_into(s, rng, x);
        step(index, t, rng, x);
        out[0] = s.contains_unchecked(x) ? 0.0 : 1.0;
    });
    const double v = s.volume();
    heat_content_result r;
    r.deficit = with_seed(to_estimate(acc[0], v, cfg.seed), cfg.seed);
    r.heat = r.deficit;
    r.heat.value = v - r.deficit.value;
    return r;
}

double gaussian_overlap_1d(double length, double t) {
    require_time(t);
    const double rt = std::sqrt(t);
    return length * std::erf(length / (2.0 * rt)) +
           2.0 * rt / std::sqrt(pi) * std::expm1(-length * length / (4.0 * t));
}

double box_heat_content_exact(const shape& s, double t) {
    if (!s.is_box())
        throw std::invalid_argument("box_heat_content_exact requires a box");
    const auto& b = s.as_box();
    double h = 1.0;
    for (int i = 0; i < s.dim(); ++i)
        h *= gaussian_overlap_1d(b.hi[i] - b.lo[i], t);
    return h;
}

namespace {

// int_a^b f(r) dr in the variable u = ln r, split at decades
double log_integral(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a))
        return 0.0;
    auto g = [&](double u) {
        const double r = std::exp(u);
        return r * f(r);
    };
    std::vector<double> cuts{std::log(a), std::log(b)};
    for (double u = std::ceil(std::log10(a)); u < std::log10(b); u += 1.0)
        cuts.push_back(u * std::numbers::ln10);
    return quad::adaptive_split(g, cuts, 1e-10, 8).value;
}

} // namespace

double deficit_quadrature(const shape& s, const kernel& k, double t) {
    require_time(t);
    const stability_index& index = k.index();
    require_match(s, index);
    const int d = s.dim();
    const double scale = std::pow(t, 1.0 / index.alpha());
    const double v = s.volume();

    if (s.is_box() && index.gaussian())
        return v - box_heat_content_exact(s, t);

    if (s.is_ball()) {
        const double two_r = 2.0 * s.as_ball().radius;
        const double r_lo = 1e-9 * std::min(scale, two_r);
        auto f = [&](double r) { return std::pow(r, d - 1) * k(t, r) * s.ball_covariogram_deficit(r); };
        return unit_sphere_area(d) * log_integral(f, r_lo, two_r) + v * k.tail_probability(t, two_r);
    }

    if (d != 2)
        throw std::invalid_argument("deficit_quadrature supports boxes in d = 2 only (any d for alpha = 2)");
    const auto& b = s.as_box();
    const double L1 = b.hi[0] - b.lo[0];
    const double L2 = b.hi[1] - b.lo[1];
    const double r_lo = 1e-9 * std::min({scale, L1, L2});
    auto moment = [&](int power, double a) {
        return log_integral([&](double r) { return std::pow(r, power) * k(t, r); }, r_lo, a);
    };
    // radial part of the deficit along direction theta: below rmax the covariogram is (L1 - rc)(L2 - rs)
    auto angular = [&](double theta) {
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        const double rmax = std::min(c > 0.0 ? L1 / c : std::numeric_limits<double>::infinity(),
                                     sn > 0.0 ? L2 / sn : std::numeric_limits<double>::infinity());
        return (L1 * sn + L2 * c) * moment(2, rmax) - c * sn * moment(3, rmax) +
               v * k.tail_probability(t, rmax) / (2.0 * pi);
    };
    const double corner = std::atan2(L2, L1);
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double a = gk::integrate(angular, 0.0, corner, 8, 1e-10);
    const double c = gk::integrate(angular, corner, pi / 2.0, 8, 1e-10);
    return 4.0 * (a + c);
}

spectral_result spectral_heat_content(const shape& s, const stability_index& index, double t,
                                      const functional_config& cfg) {
    require_time(t);
    require_config(cfg);
    require_match(s, index);
    const int n = cfg.n_steps;
    const int fine_steps = 2 * n;
    const double dt = t / fine_steps;
    const std::uint64_t seed = derive_seed(cfg.seed, {salt_spectral, salt_of(t), static_cast<std::uint64_t>(n)});
    const auto acc = sample_means(plan_of(cfg), seed, 3, [&](rng_engine& rng, double* out) {
        double x[max_dim];
        sample_uniform_into(s, rng, x);
        bool coarse = true;
        bool fine = true;
        for (int j = 1; j <= fine_steps; ++j) {
            step(index, dt, rng, x);
            if (!s.contains_unchecked(x)) {
                fine = false;
                if (j % 2 == 0)
                    coarse = false;
            }
        }
        out[0] = coarse ? 1.0 : 0.0;
        out[1] = fine ? 1.0 : 0.0;
        out[2] = s.contains_unchecked(x) ? 1.0 : 0.0;
    });
    const double v = s.volume();
    spectral_result r;
    r.coarse = to_estimate(acc[0], v, cfg.seed);
    r.fine = to_estimate(acc[1], v, cfg.seed);
    r.heat = to_estimate(acc[2], v, cfg.seed);
    r.coarse_steps = n;
    r.fine_steps = fine_steps;
    return r;
}

occupation_result occupation_functionals(const shape& s, const stability_index& index, double t,
                                         const functional_config& cfg) {
    require_time(t);
    require_config(cfg);
    require_match(s, index);
    const int d = s.dim();
    const int n = cfg.n_steps;
    const double dt = t / n;
    const double v = s.volume();
    const double decay = std::exp(-t);
    occupation_result r;
    r.route = cfg.route;

    if (cfg.route == psi_route::anchored) {
        // int dx E_x[phi(A)] = sum_j (t/n) int dx E_x[1_Omega(X_j) phi(A)/A]. Lebesgue measure is invariant
        // and the process is symmetric, so the path seen from X_j = z is a two-sided free path and the
        // integral equals t |Omega| E[phi(A)/A] with j uniform on the grid and z uniform in Omega.
        const std::uint64_t seed = derive_seed(cfg.seed, {salt_anchored, salt_of(t), static_cast<std::uint64_t>(n)});
        const auto acc = sample_means(plan_of(cfg), seed, 7, [&](rng_engine& rng, double* out) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            const int anchor = pick(rng);
            double z[max_dim], x[max_dim];
            sample_uniform_into(s, rng, z);
            int inside = 1;
            std::copy(z, z + d, x);
            for (int j = 0; j < anchor; ++j) {
                step(index, dt, rng, x);
                inside += s.contains_unchecked(x) ? 1 : 0;
            }
            std::copy(z, z + d, x);
            for (int j = anchor + 1; j < n; ++j) {
                step(index, dt, rng, x);
                inside += s.contains_unchecked(x) ? 1 : 0;
            }
            const double a = t * inside / n;
            const double outside = t * (n - inside) / n;
            const double rem = g_over_a(a);
            out[0] = one_minus_exp_over_a(a);
            out[1] = 0.5 * outside + rem;
            out[2] = a;
            out[3] = a * a;
            out[4] = rem;
            out[5] = rem - decay * a * a / 6.0;
            out[6] = t * t / 6.0 - rem;
        });
        const double w = t * v;
        r.psi = to_estimate(acc[0], w, cfg.seed);
        r.excess = to_estimate(acc[1], w, cfg.seed);
        r.t2 = to_estimate(acc[2], w, cfg.seed);
        r.t3 = to_estimate(acc[3], w, cfg.seed);
        r.remainder = to_estimate(acc[4], w, cfg.seed);
        r.remainder_above_lower = to_estimate(acc[5], w, cfg.seed);
        r.remainder_below_upper = to_estimate(acc[6], w, cfg.seed);
        return r;
    }

    if (cfg.truncation_padding < 0.0)
        throw std::invalid_argument("truncation_padding must be positive");
    const double pad =
        cfg.truncation_padding > 0.0 ? cfg.truncation_padding : 4.0 * std::pow(t, 1.0 / index.alpha());
    point lo = s.bounding_lo();
    point hi = s.bounding_hi();
    double box_volume = 1.0;
    for (int i = 0; i < d; ++i) {
        lo[i] -= pad;
        hi[i] += pad;
        box_volume *= hi[i] - lo[i];
    }
    const std::uint64_t seed = derive_seed(cfg.seed, {salt_padded, salt_of(t), static_cast<std::uint64_t>(n)});
    const auto acc = sample_means(plan_of(cfg), seed, 5, [&](rng_engine& rng, double* out) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double x[max_dim];
        for (int i = 0; i < d; ++i)
            x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
        int inside = s.contains_unchecked(x) ? 1 : 0;
        for (int j = 1; j < n; ++j) {
            step(index, dt, rng, x);
            inside += s.contains_unchecked(x) ? 1 : 0;
        }
        const double a = t * inside / n;
        const double g = a * g_over_a(a);
        out[0] = -std::expm1(-a);
        out[1] = a * a;
        out[2] = a * a * a;
        out[3] = g;
        out[4] = g - decay * a * a * a / 6.0;
    });
    r.psi = to_estimate(acc[0], box_volume, cfg.seed);
    r.excess = r.psi;
    r.excess.value = r.psi.value + t * (0.5 * t - 1.0) * v;
    r.t2 = to_estimate(acc[1], box_volume, cfg.seed);
    r.t3 = to_estimate(acc[2], box_volume, cfg.seed);
    r.remainder = to_estimate(acc[3], box_volume, cfg.seed);
    r.remainder_above_lower = to_estimate(acc[4], box_volume, cfg.seed);
    r.remainder_below_upper = r.remainder;
    r.remainder_below_upper.value = v * t * t * t / 6.0 - r.remainder.value;
    // starts outside the padded box are at distance >= pad from Omega, and
    // int_{far} E_x[1 - e^{-A}] dx <= int_{far} E_x[A] dx <= t |Omega| P(|X_t| > pad)
    r.bias_bound = t * v * shared_kernel(index)->tail_probability(t, pad);
    return r;
}

psi_result psi_direct(const shape& s, const stability_index& index, double t, const functional_config& cfg) {
    const occupation_result occ = occupation_functionals(s, index, t, cfg);
    psi_result r;
    r.method = psi_method::direct;
    r.psi = occ.psi;
    r.excess = occ.excess;
    r.r_lower = std::exp(-t) * occ.t3.value / 6.0;
    r.r_upper = s.volume() * t * t * t / 6.0;
    r.bias_bound = occ.bias_bound;
    r.psi.std_error += occ.bias_bound;
    r.excess.std_error += occ.bias_bound;
    return r;
}

estimate weighted_deficit_integral(const shape& s, const stability_index& index, double t,
                                   const functional_config& cfg) {
    require_time(t);
    require_config(cfg);
    const quad::rule gl = quad::gauss_legendre_unit(cfg.quadrature_nodes);
    std::shared_ptr<const kernel> k;
    if (cfg.deficit == deficit_source::quadrature)
        k = shared_kernel(index);
    double sum = 0.0;
    double var = 0.0;
    std::uint64_t samples = 0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double delta = gl.nodes[i];
        const double w = gl.weights[i] * (1.0 - delta);
        if (k) {
            sum += w * deficit_quadrature(s, *k, t * delta);
            continue;
        }
        functional_config node_cfg = cfg;
        node_cfg.seed = derive_seed(cfg.seed, {salt_delta_node, salt_of(t), i});
        const estimate def = heat_content(s, index, t * delta, node_cfg).deficit;
        sum += w * def.value;
        var += w * w * def.std_error * def.std_error;
        samples += def.n_samples;
    }
    const double scale = 2.0 * t * t;
    return {scale * sum, scale * std::sqrt(var), samples, cfg.seed};
}

psi_result psi_decomposed(const shape& s, const stability_index& index, double t, const functional_config& cfg) {
    require_time(t);
    const double v = s.volume();
    const estimate weighted = weighted_deficit_integral(s, index, t, cfg);
    functional_config path_cfg = cfg;
    path_cfg.route = psi_route::anchored;
    const estimate t3 = occupation_functionals(s, index, t, path_cfg).t3;

    psi_result r;
    r.method = psi_method::decomposed;
    r.r_lower = std::exp(-t) * t3.value / 6.0;
    r.r_upper = v * t * t * t / 6.0;
    const double mid = 0.5 * (r.r_lower + r.r_upper);
    // t^2 int (1 - D) deficit = weighted / 2
    r.excess.value = 0.5 * weighted.value + mid;
    r.excess.std_error = std::hypot(0.5 * weighted.std_error, std::exp(-t) * t3.std_error / 12.0);
    r.excess.n_samples = weighted.n_samples + t3.n_samples;
    r.excess.seed = cfg.seed;
    r.psi = r.excess;
    r.psi.value = r.excess.value - t * (0.5 * t - 1.0) * v;
    return r;
}

estimate t_moment(const shape& s, const stability_index& index, double t, int k, const functional_config& cfg) {
    require_time(t);
    require_match(s, index);
    if (k == 1)
        return {t * s.volume(), 0.0, 0, cfg.seed};
    if (k == 2) {
        // T^(2) = 2 t^2 int_0^1 (1 - D) H(t D) dD = t^2 |Omega| - 2 t^2 int (1 - D)(|Omega| - H(t D))
        estimate w = weighted_deficit_integral(s, index, t, cfg);
        w.value = t * t * s.volume() - w.value;
        return w;
    }
    if (k == 3) {
        functional_config path_cfg = cfg;
        path_cfg.route = psi_route::anchored;
        return occupation_functionals(s, index, t, path_cfg).t3;
    }
    throw std::invalid_argument("t_moment supports k in {1, 2, 3}");
}

estimate remainder_R(const shape& s, const stability_index& index, double t, const functional_config& cfg) {
    return occupation_functionals(s, index, t, cfg).remainder;
}

double simplex_integral(simplex_kind kind, std::optional<double> alpha) {
    switch (kind) {
    case simplex_kind::linear:
        return 1.0 / 6.0;
    case simplex_kind::log_linear:
        return -5.0 / 36.0;
    case simplex_kind::power: {
        if (!alpha)
            throw std::invalid_argument("simplex_integral: power kind needs alpha");
        const double a = *alpha;
        if (!(a > 0.0))
            throw std::invalid_argument("simplex_integral: alpha must be positive");
        return a * a / ((1.0 + a) * (1.0 + 2.0 * a));
    }
    }
    throw std::invalid_argument("simplex_integral: unknown kind");
}

double simplex_2d(const std::function<double(double)>& f) {
    boost::math::quadrature::tanh_sinh<double> outer_rule;
    boost::math::quadrature::tanh_sinh<double> inner_rule;
    auto outer = [&](double l2) {
        if (l2 <= 0.0)
            return 0.0;
        auto inner = [&](double l1) { return f(l2 - l1); };
        return inner_rule.integrate(inner, 0.0, l2, 1e-13);
    };
    return outer_rule.integrate(outer, 0.0, 1.0, 1e-12);
}

double simplex_reduced(const std::function<double(double)>& f) {
    boost::math::quadrature::tanh_sinh<double> rule;
    return rule.integrate([&](double x) { return (1.0 - x) * f(x); }, 0.0, 1.0, 1e-14);
}

double simplex_integral_quadrature(simplex_kind kind, std::optional<double> alpha) {
    switch (kind) {
    case simplex_kind::linear:
        return simplex_2d([](double x) { return x; });
    case simplex_kind::log_linear:
        return simplex_2d([](double x) { return x > 0.0 ? x * std::log(x) : 0.0; });
    case simplex_kind::power: {
        if (!alpha)
            throw std::invalid_argument("simplex_integral_quadrature: power kind needs alpha");
        const double e = 1.0 / *alpha;
        return simplex_2d([e](double x) { return x > 0.0 ? std::pow(x, e) : 0.0; });
    }
    }
    throw std::invalid_argument("simplex_integral_quadrature: unknown kind");
}

void write_estimate_header(std::ostream& out) {
    out << "alpha,d,shape,t,quantity,method,value,stderr,n_samples,n_steps,seed\n";
}

void write_estimate_row(std::ostream& out, const estimate_row& row) {
    // t is left empty for time-independent quantities
    out << format_double(row.alpha) << ',' << row.d << ',' << csv_field(row.shape) << ','
        << (std::isnan(row.t) ? std::string() : format_double(row.t)) << ',' << csv_field(row.quantity) << ',' << csv_field(row.method) << ',' << format_double(row.value.value)
        << ',' << format_double(row.value.std_error) << ',' << row.value.n_samples << ',' << row.n_steps << ','
        << row.value.seed << '\n';
}

} // namespace fracheat
