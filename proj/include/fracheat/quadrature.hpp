#ifndef FRACHEAT_QUADRATURE_HPP
#define FRACHEAT_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace fracheat::quad {

/// Gauss-Legendre rule mapped to [0, 1].
struct rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

rule gauss_legendre_unit(int n);

struct result {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive Gauss-Kronrod (31 point) on a finite interval.
result adaptive(const std::function<double(double)>& f, double a, double b,
                double rel_tol = 1e-12, unsigned max_depth = 18);

/// Same as `adaptive` but splits [a, b] at the given interior breakpoints first.
result adaptive_split(const std::function<double(double)>& f, std::vector<double> breakpoints,
                      double rel_tol = 1e-12, unsigned max_depth = 18);

/// Wynn epsilon acceleration of a sequence of partial sums.
class wynn_epsilon {
public:
    /// Extrapolation uses the most recent `window` partial sums.
    explicit wynn_epsilon(std::size_t window = 21);

    /// Append the next partial sum and return the current extrapolated limit.
    double push(double partial_sum);
    double estimate() const { return _estimate; }
    double last_change() const { return _change; }
    std::size_t size() const { return _count; }

private:
    std::size_t _window;
    std::vector<double> _sums;
    std::size_t _count = 0;
    double _estimate = 0.0;
    double _change = 0.0;
};

} // namespace fracheat::quad

#endif
