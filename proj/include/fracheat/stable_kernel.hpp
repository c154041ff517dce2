#ifndef FRACHEAT_STABLE_KERNEL_HPP
#define FRACHEAT_STABLE_KERNEL_HPP

#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracheat {

/// Stability index alpha in (0, 2] and spatial dimension d >= 2.
class stability_index {
public:
    stability_index(double alpha, int d);

    double alpha() const noexcept { return _alpha; }
    int dim() const noexcept { return _d; }
    bool gaussian() const noexcept { return _alpha == 2.0; }
    bool cauchy() const noexcept { return _alpha == 1.0; }

    friend bool operator==(const stability_index&, const stability_index&) = default;

private:
    double _alpha;
    int _d;
};

/// Leading small-time / large-distance constant: p_t(r) / t -> beta / r^(d + alpha).
/// Returns 0 at alpha = 2, where the tail is Gaussian rather than polynomial.
double beta_const(const stability_index& index);

/// Gamma((d + 1) / 2) / pi^((d + 1) / 2), the Poisson kernel normalisation.
double kappa_const(int d);

/// alpha^2 Gamma(1 - 1/alpha) / (pi (1 + alpha)(1 + 2 alpha)); defined for 1 < alpha <= 2.
double c_star_const(double alpha);

/// (d-1)-measure of the unit sphere in R^d.
double unit_sphere_area(int d);
/// Lebesgue measure of the unit ball in R^d.
double unit_ball_volume(int d);

/// p_1(0) in closed form: 2^(1-d) pi^(-d/2) Gamma(d/alpha) / (alpha Gamma(d/2)).
double density_at_origin(const stability_index& index);

class quadrature_error : public std::runtime_error {
public:
    quadrature_error(const std::string& what, double radius)
        : std::runtime_error(what), _radius{radius} {}
    double radius() const noexcept { return _radius; }

private:
    double _radius;
};

/// Radial Fourier inversion of exp(-|xi|^alpha) in dimension d at radius r > 0:
/// (2 pi)^(-d/2) r^(1-d/2) int_0^inf exp(-s^alpha) s^(d/2) J_(d/2-1)(s r) ds.
/// The integral is split at zeros of the Bessel function and the panel sums are
/// Wynn-accelerated once the integrand envelope decays slowly.
double radial_density_quadrature(double alpha, int d, double r);

struct series_value {
    double value = 0.0;
    double log_slope = 0.0; ///< r p'(r) / p(r)
    double error = 0.0;     ///< magnitude of the first neglected term
    double cancellation = 0.0; ///< sum |terms| / |sum|
};

/// Large-r expansion of p_1(r) = sum_k a_k r^(-d - k alpha). The k = 1 coefficient is beta.
/// Convergent for alpha < 1, asymptotic for alpha > 1; truncated at the smallest term.
series_value radial_density_series(double alpha, int d, double r);

struct profile_grid_config {
    double r_min = 1e-3;
    int points_per_decade = 40;
    /// relative agreement between the profile and beta / r^(d + alpha) required at the switch radius
    double tail_tolerance = 1e-3;
    double min_switch_radius = 10.0;
    double max_radius = 1e9;
    unsigned threads = 1;
};

/// Cached radial profile of p_1 for fixed (alpha, d), interpolated by monotone cubic
/// Hermite in log-log coordinates; beyond switch_radius the tail beta / r^(d + alpha) is used.
class kernel_profile {
public:
    kernel_profile(stability_index index, std::vector<double> radii, std::vector<double> density,
                   std::vector<double> log_slopes, double tail_constant, double switch_radius);

    const stability_index& index() const noexcept { return _index; }
    std::span<const double> radii() const noexcept { return _radii; }
    std::span<const double> density() const noexcept { return _density; }
    std::span<const double> log_slopes() const noexcept { return _slopes; }
    double tail_constant() const noexcept { return _tail; }
    double switch_radius() const noexcept { return _switch; }

    /// p_1 at radius rho >= 0
    double operator()(double rho) const;

    /// A_d int_a^b rho^(d-1) p_1(rho) drho, b may be +infinity
    double radial_mass(double a, double b) const;

    void write_csv(std::ostream& out) const;
    static kernel_profile read_csv(std::istream& in);

private:
    double interpolate(double rho) const;

    stability_index _index;
    std::vector<double> _radii;
    std::vector<double> _density;
    std::vector<double> _slopes;
    std::vector<double> _log_r;
    std::vector<double> _log_p;
    double _tail;
    double _switch;
};

kernel_profile build_profile(const stability_index& index, const profile_grid_config& config = {});

/// Transition density p_t^(alpha)(r) of the isotropic stable process: closed forms at
/// alpha = 1 (Poisson) and alpha = 2 (Gaussian, exp(-r^2 / 4t)), scaled profile otherwise.
class kernel {
public:
    explicit kernel(stability_index index);
    kernel(stability_index index, std::shared_ptr<const kernel_profile> profile);

    const stability_index& index() const noexcept { return _index; }
    const kernel_profile* profile() const noexcept { return _profile.get(); }

    double operator()(double t, double r) const;

    /// P(|X_t| > radius) for the process started at the origin
    double tail_probability(double t, double radius) const;

    /// A_d int_a^b r^(d-1) p_t(r) dr
    double radial_mass(double t, double a, double b) const;

private:
    double unit_density(double rho) const;

    stability_index _index;
    std::shared_ptr<const kernel_profile> _profile;
};

inline double kernel_eval(const kernel& k, double t, double r) { return k(t, r); }

/// Process-wide cache of kernels; profiles are built once per (alpha, d).
std::shared_ptr<const kernel> shared_kernel(const stability_index& index);

/// Smallest c with c^-1 m <= p_t(r) <= c m, m = min(t^(-d/alpha), t / r^(d+alpha)),
/// over the product of the given grids.
double fit_two_sided_constant(const kernel& k, std::span<const double> times, std::span<const double> radii);

} // namespace fracheat

#endif
