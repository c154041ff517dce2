#ifndef FRACHEAT_FUNCTIONALS_HPP
#define FRACHEAT_FUNCTIONALS_HPP

#include "fracheat/estimate.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/stable_kernel.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace fracheat {

/// How the x-integral of Psi is sampled.
enum class psi_route {
    /// exact reweighting: anchor the path at a uniform grid index inside the shape
    anchored,
    /// literal outer integral over the padded bounding box, truncation bounded by the kernel tail
    padded_box,
};

/// Where |Omega| - H(s) comes from inside the Delta-quadratures.
enum class deficit_source { monte_carlo, quadrature };

struct functional_config {
    std::uint64_t n_samples = 200000;
    int n_steps = 32;
    std::uint64_t seed = 20240101;
    /// padding of the bounding box for psi_route::padded_box; <= 0 selects 4 t^(1/alpha)
    double truncation_padding = 0.0;
    int quadrature_nodes = 32;
    unsigned threads = 1;
    std::uint64_t chunk_size = 8192;
    psi_route route = psi_route::anchored;
    deficit_source deficit = deficit_source::monte_carlo;
};

struct heat_content_result {
    estimate heat;
    /// |Omega| - H from the same draws
    estimate deficit;
};

/// H(t) = int_Omega P_z(X_t in Omega) dz by sampling z uniformly and one increment.
heat_content_result heat_content(const shape& s, const stability_index& index, double t, const functional_config& cfg);

/// |Omega| - H(t) = int p_t(h) (|Omega| - g(h)) dh with g the set covariogram.
/// Balls in any d, boxes in d = 2; boxes in any d when alpha = 2.
double deficit_quadrature(const shape& s, const kernel& k, double t);

/// int_0^L int_0^L g_t(u - v) du dv for the 1-D density with characteristic function exp(-t xi^2).
double gaussian_overlap_1d(double length, double t);

/// Closed-form Gaussian heat content of a box: product of gaussian_overlap_1d over the edges.
double box_heat_content_exact(const shape& s, double t);

struct spectral_result {
    estimate coarse; ///< n_steps grid
    estimate fine;   ///< 2 n_steps grid, same paths
    estimate heat;   ///< endpoint-in-shape on the same paths
    int coarse_steps = 0;
    int fine_steps = 0;
    double refinement_gap() const { return coarse.value - fine.value; }
};

/// Q(t) = int_Omega P_x(t <= tau) dx at two grid resolutions. Every fine path is also a coarse
/// path, so fine <= coarse and fine <= heat hold sample by sample.
spectral_result spectral_heat_content(const shape& s, const stability_index& index, double t,
                                      const functional_config& cfg);

/// Everything computable from the occupation time A along free paths.
struct occupation_result {
    estimate psi;
    /// Psi + t (t/2 - 1) |Omega|, accumulated without cancellation
    estimate excess;
    estimate t2; ///< T^(2) from the same paths
    estimate t3; ///< T^(3)
    estimate remainder; ///< R(t)
    /// R - e^{-t} T^(3) / 3!, sample by sample
    estimate remainder_above_lower;
    /// |Omega| t^3 / 3! - R
    estimate remainder_below_upper;
    /// bound on the truncated part of the x-integral (padded route only)
    double bias_bound = 0.0;
    psi_route route = psi_route::anchored;
};

occupation_result occupation_functionals(const shape& s, const stability_index& index, double t,
                                         const functional_config& cfg);

enum class psi_method { direct, decomposed };

struct psi_result {
    estimate psi;
    estimate excess;
    double r_lower = 0.0;
    double r_upper = 0.0;
    psi_method method = psi_method::direct;
    double bias_bound = 0.0;
};

/// Psi(t) = int dx E_x[1 - exp(-A_t)] on free paths.
psi_result psi_direct(const shape& s, const stability_index& index, double t, const functional_config& cfg);

/// Psi + t(t/2 - 1)|Omega| = t^2 int_0^1 (1 - D) (|Omega| - H(t D)) dD + R(t), with R bracketed by
/// e^{-t} T^(3) / 3! <= R <= |Omega| t^3 / 3!. Psi is reported at the bracket midpoint.
psi_result psi_decomposed(const shape& s, const stability_index& index, double t, const functional_config& cfg);

/// 2 t^2 int_0^1 (1 - D)(|Omega| - H(t D)) dD by Gauss-Legendre in D.
estimate weighted_deficit_integral(const shape& s, const stability_index& index, double t,
                                   const functional_config& cfg);

/// T^(k)(t) for k in {1, 2, 3}: t |Omega| exactly, Gauss-Legendre over H, free-path Monte Carlo.
estimate t_moment(const shape& s, const stability_index& index, double t, int k, const functional_config& cfg);

/// R(t) = Psi - T^(1) + T^(2) / 2, accumulated per path.
estimate remainder_R(const shape& s, const stability_index& index, double t, const functional_config& cfg);

enum class simplex_kind { linear, log_linear, power };

/// Closed forms of int_{I_2} f(l2 - l1) for f = D, D ln D, D^(1/alpha): 1/6, -5/36, alpha^2/((1+alpha)(1+2 alpha)).
double simplex_integral(simplex_kind kind, std::optional<double> alpha = std::nullopt);

/// The same integrals by nested quadrature over {0 <= l1 <= l2 <= 1}.
double simplex_integral_quadrature(simplex_kind kind, std::optional<double> alpha = std::nullopt);

/// int_{I_2} f(l2 - l1) by nested quadrature, and int_0^1 (1 - D) f(D) dD.
double simplex_2d(const std::function<double(double)>& f);
double simplex_reduced(const std::function<double(double)>& f);

/// One CSV row per estimator result.
struct estimate_row {
    double alpha = 0.0;
    int d = 0;
    std::string shape;
    double t = 0.0; ///< NaN for time-independent quantities
    std::string quantity;
    std::string method;
    estimate value;
    int n_steps = 0;
};

void write_estimate_header(std::ostream& out);
void write_estimate_row(std::ostream& out, const estimate_row& row);

std::string format_double(double x);
std::string csv_field(const std::string& text);

} // namespace fracheat

#endif
