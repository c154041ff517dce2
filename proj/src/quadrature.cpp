#include "fracheat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace fracheat::quad {

rule gauss_legendre_unit(int n) {
    if (n < 1)
        throw std::invalid_argument("gauss_legendre_unit: n must be positive");
    // boost returns the nonnegative zeros in increasing order
    const std::vector<double> positive = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x;
    x.reserve(n);
    for (auto it = positive.rbegin(); it != positive.rend(); ++it)
        if (*it > 0.0)
            x.push_back(-*it);
    for (double z : positive)
        x.push_back(z);

    rule r;
    r.nodes.reserve(n);
    r.weights.reserve(n);
    for (double z : x) {
        const double dp = boost::math::legendre_p_prime(n, z);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.nodes.push_back(0.5 * (z + 1.0));
        r.weights.push_back(0.5 * w);
    }
    return r;
}

result adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                unsigned max_depth) {
    if (!(b > a))
        return {0.0, 0.0};
    double error = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol, &error);
    return {value, error};
}

result adaptive_split(const std::function<double(double)>& f, std::vector<double> breakpoints,
                      double rel_tol, unsigned max_depth) {
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    result total;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const result piece = adaptive(f, breakpoints[i], breakpoints[i + 1], rel_tol, max_depth);
        total.value += piece.value;
        total.error += piece.error;
    }
    return total;
}

wynn_epsilon::wynn_epsilon(std::size_t window) : _window{std::max<std::size_t>(window, 3)} {
    _sums.reserve(_window);
}

double wynn_epsilon::push(double partial_sum) {
    if (_sums.size() == _window)
        _sums.erase(_sums.begin());
    _sums.push_back(partial_sum);
    ++_count;

    // column k of the epsilon table; only even columns are extrapolants
    std::vector<double> prev(_sums.size(), 0.0);
    std::vector<double> cur = _sums;
    double best = partial_sum;
    for (std::size_t k = 1; cur.size() > 1; ++k) {
        std::vector<double> next(cur.size() - 1);
        bool converged = false;
        for (std::size_t n = 0; n + 1 < cur.size(); ++n) {
            const double diff = cur[n + 1] - cur[n];
            if (diff == 0.0) {
                converged = true;
                break;
            }
            next[n] = prev[n + 1] + 1.0 / diff;
        }
        if (converged) {
            // successive entries coincide: the previous even column has converged
            if (k % 2 == 1)
                best = cur.back();
            break;
        }
        prev = std::move(cur);
        cur = std::move(next);
        if (k % 2 == 0 && std::isfinite(cur.back()))
            best = cur.back();
    }
    _change = std::abs(best - _estimate);
    _estimate = best;
    return best;
}

} // namespace fracheat::quad
