#include "fracheat/stable_kernel.hpp"

#include "fracheat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace fracheat {

namespace {

constexpr double pi = std::numbers::pi;

void require_profile_alpha(double alpha, int d) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::invalid_argument("profile requires 0 < alpha < 2");
    if (d < 1)
        throw std::invalid_argument("profile requires d >= 1");
}

} // namespace

stability_index::stability_index(double alpha, int d) : _alpha{alpha}, _d{d} {
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::invalid_argument("stability index requires 0 < alpha <= 2, got " + std::to_string(alpha));
    if (d < 2)
        throw std::invalid_argument("stability index requires d >= 2, got " + std::to_string(d));
}

double beta_const(const stability_index& index) {
    const double a = index.alpha();
    const double d = index.dim();
    if (index.gaussian())
        return 0.0;
    return a * std::pow(2.0, a - 1.0) * std::pow(pi, -1.0 - d / 2.0) * std::sin(pi * a / 2.0) *
           std::tgamma((d + a) / 2.0) * std::tgamma(a / 2.0);
}

double kappa_const(int d) {
    if (d < 1)
        throw std::invalid_argument("kappa_const requires d >= 1");
    return std::tgamma((d + 1) / 2.0) / std::pow(pi, (d + 1) / 2.0);
}

double c_star_const(double alpha) {
    if (!(alpha > 1.0 && alpha <= 2.0))
        throw std::domain_error("c_star_const requires 1 < alpha <= 2");
    return alpha * alpha * std::tgamma(1.0 - 1.0 / alpha) / (pi * (1.0 + alpha) * (1.0 + 2.0 * alpha));
}

double unit_sphere_area(int d) { return 2.0 * std::pow(pi, d / 2.0) / std::tgamma(d / 2.0); }

double unit_ball_volume(int d) { return std::pow(pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0); }

double density_at_origin(const stability_index& index) {
    const double a = index.alpha();
    const double d = index.dim();
    return std::pow(2.0, 1.0 - d) * std::pow(pi, -d / 2.0) * std::tgamma(d / a) / (a * std::tgamma(d / 2.0));
}

double radial_density_quadrature(double alpha, int d, double r) {
    require_profile_alpha(alpha, d);
    if (!(r > 0.0))
        throw std::invalid_argument("radial_density_quadrature requires r > 0");

    const double nu = 0.5 * d - 1.0;
    // exp(-s^alpha) < 2e-22 beyond s_max
    const double s_max = std::pow(50.0, 1.0 / alpha);
    auto integrand = [=](double s) {
        if (s <= 0.0)
            return 0.0;
        return std::exp(-std::pow(s, alpha)) * std::pow(s, 0.5 * d) * boost::math::cyl_bessel_j(nu, s * r);
    };

    // s^alpha is not smooth at the origin; tanh-sinh absorbs the endpoint behaviour there
    boost::math::quadrature::tanh_sinh<double> endpoint_rule;
    auto panel = [&](double a, double b) {
        std::vector<double> cuts{a, b};
        for (double p = 1e-2; p < b; p *= 10.0)
            if (p > a)
                cuts.push_back(p);
        std::sort(cuts.begin(), cuts.end());
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (cuts[i] == 0.0)
                sum += endpoint_rule.integrate(integrand, 0.0, cuts[i + 1], 1e-14);
            else
                sum += quad::adaptive(integrand, cuts[i], cuts[i + 1], 1e-13, 12).value;
        }
        return sum;
    };

    constexpr int max_panels = 200000;
    constexpr int min_panels_for_acceleration = 12;
    constexpr int stable_needed = 4;

    quad::wynn_epsilon accelerator(25);
    double partial = 0.0;
    double left = 0.0;
    int stable = 0;
    double integral = std::numeric_limits<double>::quiet_NaN();
    for (int k = 1; k <= max_panels; ++k) {
        const double zero = boost::math::cyl_bessel_j_zero(nu, k) / r;
        const double right = std::min(zero, s_max);
        partial += panel(left, right);
        left = right;
        if (right >= s_max) {
            integral = partial;
            break;
        }
        const double est = accelerator.push(partial);
        if (k >= min_panels_for_acceleration) {
            const double scale = std::max(std::abs(est), 1e-300);
            stable = (accelerator.last_change() <= 1e-14 * scale) ? stable + 1 : 0;
            if (stable >= stable_needed) {
                integral = est;
                break;
            }
        }
    }
    if (!std::isfinite(integral))
        throw quadrature_error("Bessel-panel quadrature did not converge at r = " + std::to_string(r), r);
    return std::pow(2.0 * pi, -0.5 * d) * std::pow(r, 1.0 - 0.5 * d) * integral;
}

series_value radial_density_series(double alpha, int d, double r) {
    require_profile_alpha(alpha, d);
    if (!(r > 0.0))
        throw std::invalid_argument("radial_density_series requires r > 0");

    const double log_r = std::log(r);
    const double base = -(0.5 * d + 1.0) * std::log(pi);
    double sum = 0.0;
    double slope_sum = 0.0;
    double abs_sum = 0.0;
    double prev_mag = std::numeric_limits<double>::infinity();
    double error = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 400; ++k) {
        const double half = 0.5 * k * alpha;
        if (std::abs(half - std::round(half)) < 1e-12)
            continue; // sin(pi k alpha / 2) == 0
        const double s = std::sin(pi * half);
        const double log_mag = k * alpha * std::numbers::ln2 + base + std::lgamma(half + 1.0) +
                               std::lgamma(0.5 * (d + k * alpha)) - std::lgamma(k + 1.0) +
                               std::log(std::abs(s)) - (d + k * alpha) * log_r;
        const double mag = std::exp(log_mag);
        if (alpha >= 1.0 && mag > prev_mag) {
            error = mag; // asymptotic: stop at the smallest term
            break;
        }
        const double sign = ((k % 2 == 1) ? 1.0 : -1.0) * (s > 0.0 ? 1.0 : -1.0);
        const double term = sign * mag;
        sum += term;
        slope_sum += -(d + k * alpha) * term;
        abs_sum += mag;
        prev_mag = mag;
        if (mag <= 1e-18 * std::abs(sum)) {
            error = mag;
            break;
        }
    }
    series_value out;
    out.value = sum;
    out.log_slope = (sum != 0.0) ? slope_sum / sum : 0.0;
    out.error = error;
    out.cancellation = (sum != 0.0) ? abs_sum / std::abs(sum) : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

struct profile_point {
    double density;
    double log_slope;
};

profile_point evaluate_profile_point(double alpha, int d, double r) {
    const series_value s = radial_density_series(alpha, d, r);
    if (s.value > 0.0 && s.error <= 1e-14 * s.value && s.cancellation < 1e3)
        return {s.value, s.log_slope};
    const double p = radial_density_quadrature(alpha, d, r);
    // p_d'(r) = -2 pi r p_{d+2}(r)
    const double p_up = radial_density_quadrature(alpha, d + 2, r);
    return {p, -2.0 * pi * r * r * p_up / p};
}

// Fritsch-Carlson limiter on (x, y) data with derivative estimates m.
void limit_monotone(std::span<const double> x, std::span<const double> y, std::span<double> m) {
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if (delta == 0.0) {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        double a = m[i] / delta;
        double b = m[i + 1] / delta;
        if (a < 0.0) {
            m[i] = 0.0;
            a = 0.0;
        }
        if (b < 0.0) {
            m[i + 1] = 0.0;
            b = 0.0;
        }
        const double norm = a * a + b * b;
        if (norm > 9.0) {
            const double tau = 3.0 / std::sqrt(norm);
            m[i] = tau * a * delta;
            m[i + 1] = tau * b * delta;
        }
    }
}

} // namespace

kernel_profile::kernel_profile(stability_index index, std::vector<double> radii, std::vector<double> density,
                               std::vector<double> log_slopes, double tail_constant, double switch_radius)
    : _index{index}
    , _radii{std::move(radii)}
    , _density{std::move(density)}
    , _slopes{std::move(log_slopes)}
    , _tail{tail_constant}
    , _switch{switch_radius} {
    const std::size_t n = _radii.size();
    if (n < 3 || _density.size() != n || _slopes.size() != n)
        throw std::invalid_argument("kernel_profile: radii, density and slopes must have equal length >= 3");
    if (_radii[0] != 0.0)
        throw std::invalid_argument("kernel_profile: first radius must be 0");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(_density[i] > 0.0))
            throw std::invalid_argument("kernel_profile: density must be positive");
        if (i > 0 && !(_radii[i] > _radii[i - 1]))
            throw std::invalid_argument("kernel_profile: radii must be strictly increasing");
        if (i > 0 && _density[i] > _density[i - 1])
            throw std::invalid_argument("kernel_profile: density must be non-increasing");
    }
    if (_switch != _radii.back())
        throw std::invalid_argument("kernel_profile: switch radius must be the last grid radius");
    _log_r.assign(n, -std::numeric_limits<double>::infinity());
    _log_p.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0)
            _log_r[i] = std::log(_radii[i]);
        _log_p[i] = std::log(_density[i]);
    }
}

double kernel_profile::interpolate(double rho) const {
    const std::size_t n = _radii.size();
    const double x = std::log(rho);
    const double h_guess = (_log_r[n - 1] - _log_r[1]) / static_cast<double>(n - 2);
    auto i = static_cast<std::size_t>(std::clamp((x - _log_r[1]) / h_guess, 0.0, static_cast<double>(n - 3))) + 1;
    while (i > 1 && x < _log_r[i])
        --i;
    while (i + 2 < n && x > _log_r[i + 1])
        ++i;
    const double h = _log_r[i + 1] - _log_r[i];
    const double u = (x - _log_r[i]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double y = (2 * u3 - 3 * u2 + 1) * _log_p[i] + (u3 - 2 * u2 + u) * h * _slopes[i] +
                     (-2 * u3 + 3 * u2) * _log_p[i + 1] + (u3 - u2) * h * _slopes[i + 1];
    return std::exp(y);
}

double kernel_profile::operator()(double rho) const {
    if (rho < 0.0)
        throw std::invalid_argument("kernel_profile: negative radius");
    const int d = _index.dim();
    const double a = _index.alpha();
    if (rho >= _switch)
        return _tail * std::pow(rho, -d - a);
    const double r1 = _radii[1];
    if (rho <= r1) {
        const double q = rho / r1;
        return _density[0] + (_density[1] - _density[0]) * q * q;
    }
    return interpolate(rho);
}

double kernel_profile::radial_mass(double a, double b) const {
    if (!(b > a))
        return 0.0;
    const int d = _index.dim();
    const double alpha = _index.alpha();
    const double area = unit_sphere_area(d);
    double total = 0.0;

    // inner quadratic piece, integrated with a fixed rule in r
    const double r1 = _radii[1];
    if (a < r1) {
        const double hi = std::min(b, r1);
        auto f = [&](double r) { return std::pow(r, d - 1) * (*this)(r); };
        total += boost::math::quadrature::gauss<double, 10>::integrate(f, a, hi);
    }
    // interpolated range, one fixed rule per knot interval in log r
    auto g = [&](double u) {
        const double r = std::exp(u);
        return std::pow(r, d) * interpolate(r);
    };
    for (std::size_t i = 1; i + 1 < _radii.size(); ++i) {
        const double lo = std::max(a, _radii[i]);
        const double hi = std::min(b, _radii[i + 1]);
        if (hi > lo)
            total += boost::math::quadrature::gauss<double, 8>::integrate(g, std::log(lo), std::log(hi));
    }
    // analytic tail
    if (b > _switch) {
        const double lo = std::max(a, _switch);
        const double upper = std::isinf(b) ? 0.0 : std::pow(b, -alpha);
        total += _tail * (std::pow(lo, -alpha) - upper) / alpha;
    }
    return area * total;
}

void kernel_profile::write_csv(std::ostream& out) const {
    std::ostringstream buf;
    buf << std::setprecision(17);
    buf << "# fracheat-kernel-profile v1\n";
    buf << "# alpha=" << _index.alpha() << ",d=" << _index.dim() << ",tail_constant=" << _tail
        << ",switch_radius=" << _switch << "\n";
    buf << "r,p1_of_r,dlogp_dlogr\n";
    for (std::size_t i = 0; i < _radii.size(); ++i)
        buf << _radii[i] << ',' << _density[i] << ',' << _slopes[i] << '\n';
    out << buf.str();
}

kernel_profile kernel_profile::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "# fracheat-kernel-profile v1")
        throw std::runtime_error("kernel profile: missing or unsupported version line");
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("kernel profile: missing parameter line");

    std::map<std::string, std::string> params;
    std::stringstream fields(line.substr(2));
    std::string item;
    while (std::getline(fields, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("kernel profile: malformed parameter '" + item + "'");
        params[item.substr(0, eq)] = item.substr(eq + 1);
    }
    for (const char* key : {"alpha", "d", "tail_constant", "switch_radius"})
        if (!params.count(key))
            throw std::runtime_error(std::string("kernel profile: missing parameter ") + key);

    if (!std::getline(in, line) || line != "r,p1_of_r,dlogp_dlogr")
        throw std::runtime_error("kernel profile: unexpected column header");

    std::vector<double> r, p, m;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
            throw std::runtime_error("kernel profile: malformed row '" + line + "'");
        r.push_back(std::stod(a));
        p.push_back(std::stod(b));
        m.push_back(std::stod(c));
    }
    stability_index index(std::stod(params["alpha"]), std::stoi(params["d"]));
    return kernel_profile(index, std::move(r), std::move(p), std::move(m), std::stod(params["tail_constant"]),
                          std::stod(params["switch_radius"]));
}

kernel_profile build_profile(const stability_index& index, const profile_grid_config& config) {
    const double alpha = index.alpha();
    const int d = index.dim();
    require_profile_alpha(alpha, d);
    if (!(config.r_min > 0.0) || config.points_per_decade < 4)
        throw std::invalid_argument("build_profile: invalid grid configuration");

    const double beta = beta_const(index);
    const double exponent = d + alpha;
    std::vector<double> radii{0.0};
    std::vector<double> density{density_at_origin(index)};
    std::vector<double> slopes{0.0};

    const int ppd = config.points_per_decade;
    const unsigned workers = std::max(1u, config.threads);
    double switch_radius = -1.0;
    for (int decade = 0; switch_radius < 0.0; ++decade) {
        std::vector<double> block(ppd);
        for (int j = 0; j < ppd; ++j)
            block[j] = config.r_min * std::pow(10.0, decade + static_cast<double>(j) / ppd);
        if (block.front() > config.max_radius)
            throw quadrature_error("build_profile: tail never matched beta / r^(d+alpha)", block.front());

        std::vector<profile_point> values(ppd);
        std::vector<std::exception_ptr> failures(workers);
        auto work = [&](unsigned w) {
            try {
                for (int j = static_cast<int>(w); j < ppd; j += static_cast<int>(workers))
                    values[j] = evaluate_profile_point(alpha, d, block[j]);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back(work, w);
            for (auto& th : pool)
                th.join();
        }
        for (auto& f : failures)
            if (f)
                std::rethrow_exception(f);

        for (int j = 0; j < ppd; ++j) {
            radii.push_back(block[j]);
            density.push_back(values[j].density);
            slopes.push_back(values[j].log_slope);
            const double ratio = values[j].density * std::pow(block[j], exponent) / beta;
            if (block[j] >= config.min_switch_radius && std::abs(ratio - 1.0) <= config.tail_tolerance) {
                switch_radius = block[j];
                break;
            }
        }
    }

    // monotone Hermite in log-log: slopes are d log p / d log r on the positive radii
    std::vector<double> log_r, log_p;
    for (std::size_t i = 1; i < radii.size(); ++i) {
        log_r.push_back(std::log(radii[i]));
        log_p.push_back(std::log(density[i]));
    }
    limit_monotone(log_r, log_p, std::span<double>(slopes).subspan(1));
    return kernel_profile(index, std::move(radii), std::move(density), std::move(slopes), beta, switch_radius);
}

kernel::kernel(stability_index index) : _index{index} {
    if (!index.gaussian() && !index.cauchy())
        _profile = std::make_shared<const kernel_profile>(build_profile(index));
}

kernel::kernel(stability_index index, std::shared_ptr<const kernel_profile> profile)
    : _index{index}, _profile{std::move(profile)} {
    if (_profile && !(_profile->index() == _index))
        throw std::invalid_argument("kernel: profile index does not match");
    if (!_profile && !index.gaussian() && !index.cauchy())
        throw std::invalid_argument("kernel: a profile is required for alpha not in {1, 2}");
}

double kernel::unit_density(double rho) const {
    const int d = _index.dim();
    if (_profile)
        return (*_profile)(rho);
    if (_index.gaussian())
        return std::pow(4.0 * pi, -0.5 * d) * std::exp(-rho * rho / 4.0);
    return kappa_const(d) / std::pow(1.0 + rho * rho, 0.5 * (d + 1));
}

double kernel::operator()(double t, double r) const {
    if (!(t > 0.0))
        throw std::invalid_argument("kernel: t must be positive");
    if (r < 0.0)
        throw std::invalid_argument("kernel: r must be nonnegative");
    const int d = _index.dim();
    const double a = _index.alpha();
    if (!_profile && _index.gaussian())
        return std::pow(4.0 * pi * t, -0.5 * d) * std::exp(-r * r / (4.0 * t));
    if (!_profile && _index.cauchy())
        return kappa_const(d) * t / std::pow(t * t + r * r, 0.5 * (d + 1));
    const double scale = std::pow(t, 1.0 / a);
    return std::pow(scale, -d) * unit_density(r / scale);
}

double kernel::radial_mass(double t, double a, double b) const {
    if (!(t > 0.0))
        throw std::invalid_argument("kernel: t must be positive");
    if (!(b > a))
        return 0.0;
    const int d = _index.dim();
    if (_profile) {
        const double scale = std::pow(t, 1.0 / _index.alpha());
        return _profile->radial_mass(a / scale, std::isinf(b) ? b : b / scale);
    }
    if (_index.gaussian()) {
        // |X_t|^2 / (2t) is chi-square with d degrees of freedom
        auto upper = [&](double r) {
            return std::isinf(r) ? 0.0 : boost::math::gamma_q(0.5 * d, r * r / (4.0 * t));
        };
        return upper(a) - upper(b);
    }
    // Cauchy: P(|X_t| > r) = I_{t^2 / (t^2 + r^2)}(1/2, d/2)
    auto upper = [&](double r) {
        return std::isinf(r) ? 0.0 : boost::math::ibeta(0.5, 0.5 * d, t * t / (t * t + r * r));
    };
    return upper(a) - upper(b);
}

double kernel::tail_probability(double t, double radius) const {
    return radial_mass(t, radius, std::numeric_limits<double>::infinity());
}

std::shared_ptr<const kernel> shared_kernel(const stability_index& index) {
    static std::mutex guard;
    static std::map<std::pair<double, int>, std::shared_ptr<const kernel>> cache;
    const std::lock_guard lock(guard);
    auto& slot = cache[{index.alpha(), index.dim()}];
    if (!slot)
        slot = std::make_shared<const kernel>(index);
    return slot;
}

double fit_two_sided_constant(const kernel& k, std::span<const double> times, std::span<const double> radii) {
    const int d = k.index().dim();
    const double a = k.index().alpha();
    double c = 1.0;
    for (double t : times)
        for (double r : radii) {
            const double bound = std::min(std::pow(t, -d / a), t / std::pow(r, d + a));
            const double q = k(t, r) / bound;
            c = std::max({c, q, 1.0 / q});
        }
    return c;
}

} // namespace fracheat
