#ifndef FRACHEAT_GEOMETRY_HPP
#define FRACHEAT_GEOMETRY_HPP

#include "fracheat/estimate.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fracheat {

using point = std::vector<double>;

struct ball {
    point center;
    double radius = 0.0;
};

struct box {
    point lo;
    point hi;
};

/// Closed ball or closed axis-aligned box in R^d, d >= 2.
class shape {
public:
    static shape make_ball(point center, double radius);
    static shape make_box(point lo, point hi);

    int dim() const noexcept { return _d; }
    bool is_ball() const noexcept { return std::holds_alternative<ball>(_v); }
    bool is_box() const noexcept { return std::holds_alternative<box>(_v); }
    const ball& as_ball() const { return std::get<ball>(_v); }
    const box& as_box() const { return std::get<box>(_v); }

    double volume() const;
    double perimeter() const;
    double diameter() const;

    /// Boundary points count as inside.
    bool contains(std::span<const double> x) const;
    bool contains_unchecked(const double* x) const noexcept;

    /// Axis-aligned bounding box.
    point bounding_lo() const;
    point bounding_hi() const;
    /// Center and radius of a ball containing the shape.
    point bounding_center() const;
    double bounding_radius() const;

    /// Set covariogram |Omega cap (Omega + h)|; for balls only |h| matters.
    double covariogram(std::span<const double> h) const;
    /// |Omega| - covariogram for a ball at |h| = r, computed without cancellation.
    double ball_covariogram_deficit(double r) const;

    /// Length of the intersection of the line {base + s u} with the shape, |u| = 1.
    double chord_length(std::span<const double> base, std::span<const double> u) const;

    /// Canonical spec string, parseable by parse_shape.
    std::string spec() const;

private:
    shape(std::variant<ball, box> v, int d) : _v{std::move(v)}, _d{d} {}

    std::variant<ball, box> _v;
    int _d;
};

/// Strict parser for `ball:d=2,r=1[,c=x1,...,xd]` and `box:d=2,lo=0,0,hi=1,1`.
shape parse_shape(const std::string& spec);

/// Uniform point in the shape: rejection from the bounding box for balls, direct for boxes.
point sample_uniform(const shape& s, rng_engine& rng);
void sample_uniform_into(const shape& s, rng_engine& rng, double* out);

enum class perimeter_method { monte_carlo, quadrature };

struct perimeter_config {
    std::uint64_t n_samples = 200000;
    std::uint64_t seed = 20240101;
    unsigned threads = 1;
};

/// alpha-perimeter  int_Omega int_{Omega^c} |x - y|^(-d - alpha) dx dy  for 0 < alpha < 1.
///
/// monte_carlo uses the chord form (alpha (1 - alpha))^-1 int_{S^(d-1)} du int_{u-perp} L^(1-alpha) dw,
/// valid for convex shapes and of finite variance for every alpha < 1.
/// quadrature integrates the covariogram deficit in polar coordinates: balls in any d, boxes in d = 2.
estimate alpha_perimeter(const shape& s, double alpha, perimeter_method method, const perimeter_config& cfg = {});

/// int_0^1 r^d / (1 + r^2)^((d+1)/2) dr
double lambda_inner_integral(int d);

/// |Omega| A_d k_d / diam + Per / pi (ln diam + lambda_inner_integral(d)).
double lambda_const(const shape& s);

} // namespace fracheat

#endif
