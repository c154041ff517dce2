#include "fracheat/geometry.hpp"

#include "fracheat/quadrature.hpp"
#include "fracheat/stable_kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace fracheat {

namespace {

constexpr double pi = std::numbers::pi;

void require_dim(int d) {
    if (d < 2)
        throw std::invalid_argument("shape dimension must be >= 2, got " + std::to_string(d));
}

std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
        throw std::invalid_argument("malformed number '" + text + "' in shape spec");
    return value;
}

} // namespace

shape shape::make_ball(point center, double radius) {
    const int d = static_cast<int>(center.size());
    require_dim(d);
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("ball radius must be positive and finite");
    return shape(ball{std::move(center), radius}, d);
}

shape shape::make_box(point lo, point hi) {
    const int d = static_cast<int>(lo.size());
    require_dim(d);
    if (hi.size() != lo.size())
        throw std::invalid_argument("box corners must have the same dimension");
    for (int i = 0; i < d; ++i)
        if (!(hi[i] > lo[i]) || !std::isfinite(hi[i] - lo[i]))
            throw std::invalid_argument("box requires lo < hi in every coordinate");
    return shape(box{std::move(lo), std::move(hi)}, d);
}

double shape::volume() const {
    if (is_ball())
        return unit_ball_volume(_d) * std::pow(as_ball().radius, _d);
    const auto& b = as_box();
    double v = 1.0;
    for (int i = 0; i < _d; ++i)
        v *= b.hi[i] - b.lo[i];
    return v;
}

double shape::perimeter() const {
    if (is_ball())
        return unit_sphere_area(_d) * std::pow(as_ball().radius, _d - 1);
    const auto& b = as_box();
    double total = 0.0;
    for (int i = 0; i < _d; ++i) {
        double face = 1.0;
        for (int j = 0; j < _d; ++j)
            if (j != i)
                face *= b.hi[j] - b.lo[j];
        total += 2.0 * face;
    }
    return total;
}

double shape::diameter() const {
    if (is_ball())
        return 2.0 * as_ball().radius;
    const auto& b = as_box();
    double s = 0.0;
    for (int i = 0; i < _d; ++i)
        s += (b.hi[i] - b.lo[i]) * (b.hi[i] - b.lo[i]);
    return std::sqrt(s);
}

bool shape::contains(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != _d)
        throw std::invalid_argument("point dimension does not match shape dimension");
    return contains_unchecked(x.data());
}

bool shape::contains_unchecked(const double* x) const noexcept {
    if (const auto* b = std::get_if<ball>(&_v)) {
        double s = 0.0;
        for (int i = 0; i < _d; ++i) {
            const double u = x[i] - b->center[i];
            s += u * u;
        }
        return s <= b->radius * b->radius;
    }
    const auto& b = std::get<box>(_v);
    for (int i = 0; i < _d; ++i)
        if (x[i] < b.lo[i] || x[i] > b.hi[i])
            return false;
    return true;
}

point shape::bounding_lo() const {
    if (is_ball()) {
        point p = as_ball().center;
        for (double& v : p)
            v -= as_ball().radius;
        return p;
    }
    return as_box().lo;
}

point shape::bounding_hi() const {
    if (is_ball()) {
        point p = as_ball().center;
        for (double& v : p)
            v += as_ball().radius;
        return p;
    }
    return as_box().hi;
}

point shape::bounding_center() const {
    if (is_ball())
        return as_ball().center;
    const auto& b = as_box();
    point c(_d);
    for (int i = 0; i < _d; ++i)
        c[i] = 0.5 * (b.lo[i] + b.hi[i]);
    return c;
}

double shape::bounding_radius() const { return is_ball() ? as_ball().radius : 0.5 * diameter(); }

double shape::ball_covariogram_deficit(double r) const {
    const double radius = as_ball().radius;
    const double v = volume();
    if (r <= 0.0)
        return 0.0;
    if (r >= 2.0 * radius)
        return v;
    // g(h) = |B| I_{1 - h^2/4R^2}((d+1)/2, 1/2), so |B| - g = |B| I_{h^2/4R^2}(1/2, (d+1)/2)
    const double x = r * r / (4.0 * radius * radius);
    return v * boost::math::ibeta(0.5, 0.5 * (_d + 1), x);
}

double shape::covariogram(std::span<const double> h) const {
    if (static_cast<int>(h.size()) != _d)
        throw std::invalid_argument("covariogram: dimension mismatch");
    if (is_ball()) {
        double s = 0.0;
        for (double v : h)
            s += v * v;
        return volume() - ball_covariogram_deficit(std::sqrt(s));
    }
    const auto& b = as_box();
    double g = 1.0;
    for (int i = 0; i < _d; ++i)
        g *= std::max(0.0, (b.hi[i] - b.lo[i]) - std::abs(h[i]));
    return g;
}

double shape::chord_length(std::span<const double> base, std::span<const double> u) const {
    if (static_cast<int>(base.size()) != _d || static_cast<int>(u.size()) != _d)
        throw std::invalid_argument("chord_length: dimension mismatch");
    if (is_ball()) {
        const auto& b = as_ball();
        double along = 0.0, norm2 = 0.0;
        for (int i = 0; i < _d; ++i) {
            const double w = base[i] - b.center[i];
            along += w * u[i];
            norm2 += w * w;
        }
        const double h2 = b.radius * b.radius - (norm2 - along * along);
        return h2 > 0.0 ? 2.0 * std::sqrt(h2) : 0.0;
    }
    const auto& b = as_box();
    double enter = -std::numeric_limits<double>::infinity();
    double leave = std::numeric_limits<double>::infinity();
    for (int i = 0; i < _d; ++i) {
        if (u[i] == 0.0) {
            if (base[i] < b.lo[i] || base[i] > b.hi[i])
                return 0.0;
            continue;
        }
        const double a = (b.lo[i] - base[i]) / u[i];
        const double c = (b.hi[i] - base[i]) / u[i];
        enter = std::max(enter, std::min(a, c));
        leave = std::min(leave, std::max(a, c));
    }
    return std::max(0.0, leave - enter);
}

std::string shape::spec() const {
    auto list = [](const point& p) {
        std::string s;
        for (std::size_t i = 0; i < p.size(); ++i)
            s += (i ? "," : "") + format_number(p[i]);
        return s;
    };
    if (is_ball()) {
        const auto& b = as_ball();
        std::string s = "ball:d=" + std::to_string(_d) + ",r=" + format_number(b.radius);
        if (std::any_of(b.center.begin(), b.center.end(), [](double v) { return v != 0.0; }))
            s += ",c=" + list(b.center);
        return s;
    }
    const auto& b = as_box();
    return "box:d=" + std::to_string(_d) + ",lo=" + list(b.lo) + ",hi=" + list(b.hi);
}

shape parse_shape(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("shape spec '" + spec + "' must look like ball:... or box:...");
    const std::string kind = spec.substr(0, colon);
    if (kind != "ball" && kind != "box")
        throw std::invalid_argument("unknown shape kind '" + kind + "'");

    // tokens without '=' continue the list of the preceding key
    std::map<std::string, std::vector<std::string>> values;
    std::string current;
    std::size_t pos = colon + 1;
    while (pos <= spec.size()) {
        const auto comma = std::min(spec.find(',', pos), spec.size());
        const std::string token = spec.substr(pos, comma - pos);
        pos = comma + 1;
        const auto eq = token.find('=');
        if (eq != std::string::npos) {
            current = token.substr(0, eq);
            if (values.count(current))
                throw std::invalid_argument("duplicate key '" + current + "' in shape spec");
            values[current].push_back(token.substr(eq + 1));
        } else {
            if (current.empty())
                throw std::invalid_argument("value '" + token + "' without a key in shape spec");
            values[current].push_back(token);
        }
    }

    const std::vector<std::string> allowed =
        kind == "ball" ? std::vector<std::string>{"d", "r", "c"} : std::vector<std::string>{"d", "lo", "hi"};
    for (const auto& [key, _] : values)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("unknown key '" + key + "' for shape " + kind);

    auto scalar = [&](const std::string& key) -> double {
        auto it = values.find(key);
        if (it == values.end())
            throw std::invalid_argument("shape spec is missing '" + key + "'");
        if (it->second.size() != 1)
            throw std::invalid_argument("key '" + key + "' takes one value");
        return parse_number(it->second[0]);
    };
    const double d_value = scalar("d");
    if (d_value != std::floor(d_value) || d_value < 2 || d_value > 64)
        throw std::invalid_argument("shape dimension d must be an integer >= 2");
    const int d = static_cast<int>(d_value);

    auto vec = [&](const std::string& key, bool required) -> point {
        auto it = values.find(key);
        if (it == values.end()) {
            if (required)
                throw std::invalid_argument("shape spec is missing '" + key + "'");
            return point(d, 0.0);
        }
        if (static_cast<int>(it->second.size()) != d)
            throw std::invalid_argument("key '" + key + "' needs exactly d = " + std::to_string(d) + " values");
        point p;
        for (const auto& s : it->second)
            p.push_back(parse_number(s));
        return p;
    };

    if (kind == "ball")
        return shape::make_ball(vec("c", false), scalar("r"));
    return shape::make_box(vec("lo", true), vec("hi", true));
}

void sample_uniform_into(const shape& s, rng_engine& rng, double* out) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int d = s.dim();
    if (s.is_box()) {
        const auto& b = s.as_box();
        for (int i = 0; i < d; ++i)
            out[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * unit(rng);
        return;
    }
    const auto& b = s.as_ball();
    for (;;) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double u = 2.0 * unit(rng) - 1.0;
            out[i] = u;
            r2 += u * u;
        }
        if (r2 <= 1.0) {
            for (int i = 0; i < d; ++i)
                out[i] = b.center[i] + b.radius * out[i];
            return;
        }
    }
}

point sample_uniform(const shape& s, rng_engine& rng) {
    point p(s.dim());
    sample_uniform_into(s, rng, p.data());
    return p;
}

namespace {

estimate alpha_perimeter_quadrature(const shape& s, double alpha) {
    const int d = s.dim();
    if (s.is_ball()) {
        const double R = s.as_ball().radius;
        // u = r^(1 - alpha) turns deficit(r) r^(-1-alpha) dr into deficit(r) / r du / (1 - alpha), which stays
        // bounded as r -> 0 for every alpha < 1
        const double e = 1.0 / (1.0 - alpha);
        auto f = [&](double u) {
            const double r = std::max(std::pow(u, e), 1e-290);
            return s.ball_covariogram_deficit(r) / r * e;
        };
        boost::math::quadrature::tanh_sinh<double> rule;
        double err = 0.0;
        const double inner = rule.integrate(f, 0.0, std::pow(2.0 * R, 1.0 - alpha), 1e-12, &err);
        const double area = unit_sphere_area(d);
        const double value = area * (inner + s.volume() * std::pow(2.0 * R, -alpha) / alpha);
        return {value, area * std::abs(err), 0, 0};
    }
    if (d != 2)
        throw std::invalid_argument("alpha_perimeter quadrature supports boxes in d = 2 only");
    const auto& b = s.as_box();
    const double L1 = b.hi[0] - b.lo[0];
    const double L2 = b.hi[1] - b.lo[1];
    const double area = L1 * L2;
    // radial integral of the deficit in direction theta, done in closed form
    auto angular = [&](double theta) {
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        const double rmax = std::min(c > 0.0 ? L1 / c : std::numeric_limits<double>::infinity(),
                                     sn > 0.0 ? L2 / sn : std::numeric_limits<double>::infinity());
        return (L1 * sn + L2 * c) * std::pow(rmax, 1.0 - alpha) / (1.0 - alpha) -
               c * sn * std::pow(rmax, 2.0 - alpha) / (2.0 - alpha) + area * std::pow(rmax, -alpha) / alpha;
    };
    const double corner = std::atan2(L2, L1);
    double e1 = 0.0, e2 = 0.0;
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double v1 = gk::integrate(angular, 0.0, corner, 15, 1e-13, &e1);
    const double v2 = gk::integrate(angular, corner, pi / 2.0, 15, 1e-13, &e2);
    return {4.0 * (v1 + v2), 4.0 * (std::abs(e1) + std::abs(e2)), 0, 0};
}

estimate alpha_perimeter_chords(const shape& s, double alpha, const perimeter_config& cfg) {
    const int d = s.dim();
    const point center = s.bounding_center();
    const double R = s.bounding_radius() * (1.0 + 1e-12);
    const double slice = unit_ball_volume(d - 1) * std::pow(R, d - 1);
    const double weight = unit_sphere_area(d) * slice / (alpha * (1.0 - alpha));

    const auto acc = sample_means({cfg.n_samples, 8192, cfg.threads}, cfg.seed, 1, [&](rng_engine& rng, double* out) {
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double u[64], v[64], base[64];
        double nu = 0.0;
        for (int i = 0; i < d; ++i) {
            u[i] = normal(rng);
            nu += u[i] * u[i];
        }
        nu = std::sqrt(nu);
        for (int i = 0; i < d; ++i)
            u[i] /= nu;
        // uniform point of the (d-1)-ball of radius R in the hyperplane orthogonal to u
        double dot = 0.0, nv = 0.0;
        for (int i = 0; i < d; ++i) {
            v[i] = normal(rng);
            dot += v[i] * u[i];
        }
        for (int i = 0; i < d; ++i) {
            v[i] -= dot * u[i];
            nv += v[i] * v[i];
        }
        nv = std::sqrt(nv);
        const double rho = R * std::pow(unit(rng), 1.0 / (d - 1));
        for (int i = 0; i < d; ++i)
            base[i] = center[i] + rho * v[i] / nv;
        const double L = s.chord_length({base, static_cast<std::size_t>(d)}, {u, static_cast<std::size_t>(d)});
        out[0] = L > 0.0 ? std::pow(L, 1.0 - alpha) : 0.0;
    });
    return to_estimate(acc[0], weight, cfg.seed);
}

} // namespace

estimate alpha_perimeter(const shape& s, double alpha, perimeter_method method, const perimeter_config& cfg) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha_perimeter requires 0 < alpha < 1");
    if (method == perimeter_method::quadrature)
        return alpha_perimeter_quadrature(s, alpha);
    return alpha_perimeter_chords(s, alpha, cfg);
}

double lambda_inner_integral(int d) {
    auto f = [d](double r) { return std::pow(r, d) / std::pow(1.0 + r * r, 0.5 * (d + 1)); };
    return quad::adaptive(f, 0.0, 1.0, 1e-14).value;
}

double lambda_const(const shape& s) {
    const int d = s.dim();
    const double diam = s.diameter();
    return s.volume() * unit_sphere_area(d) * kappa_const(d) / diam +
           s.perimeter() / pi * (std::log(diam) + lambda_inner_integral(d));
}

} // namespace fracheat
