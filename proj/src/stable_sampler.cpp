#include "fracheat/stable_sampler.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <iomanip>

namespace fracheat {

double positive_stable_sample(double beta, rng_engine& rng) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("positive_stable_sample requires 0 < beta < 1");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    // Kanter's representation; U must avoid the endpoints where sin vanishes
    double u;
    do {
        u = std::numbers::pi * unit(rng);
    } while (u == 0.0);
    const double e = expo(rng);
    const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
    const double b = std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
    return a * b;
}

void isotropic_increment_into(const stability_index& index, double t, rng_engine& rng, double* out) {
    if (!(t > 0.0))
        throw std::invalid_argument("isotropic_increment requires t > 0");
    const int d = index.dim();
    const double alpha = index.alpha();
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2);
    // With S' one-sided (alpha/2)-stable, E exp(-lambda S') = exp(-lambda^(alpha/2)), and G having
    // per-coordinate variance 2, X = sqrt(t^(2/alpha) S') G satisfies
    // E exp(i xi.X) = E exp(-t^(2/alpha) S' |xi|^2) = exp(-t |xi|^alpha).
    double scale;
    if (index.gaussian())
        scale = std::sqrt(t);
    else
        scale = std::pow(t, 1.0 / alpha) * std::sqrt(positive_stable_sample(0.5 * alpha, rng));
    for (int i = 0; i < d; ++i)
        out[i] = scale * normal(rng);
}

point isotropic_increment(const stability_index& index, double t, rng_engine& rng) {
    point p(index.dim());
    isotropic_increment_into(index, t, rng, p.data());
    return p;
}

path_skeleton sample_path_skeleton(const point& x0, double t, int n_steps, const stability_index& index,
                                   rng_engine& rng) {
    if (n_steps < 1)
        throw std::invalid_argument("sample_path_skeleton requires n_steps >= 1");
    if (!(t > 0.0))
        throw std::invalid_argument("sample_path_skeleton requires t > 0");
    if (static_cast<int>(x0.size()) != index.dim())
        throw std::invalid_argument("sample_path_skeleton: start point dimension mismatch");
    path_skeleton path;
    path.times.reserve(n_steps + 1);
    path.points.reserve(n_steps + 1);
    path.times.push_back(0.0);
    path.points.push_back(x0);
    const double dt = t / n_steps;
    point inc(index.dim());
    for (int j = 1; j <= n_steps; ++j) {
        isotropic_increment_into(index, dt, rng, inc.data());
        point next = path.points.back();
        for (int i = 0; i < index.dim(); ++i)
            next[i] += inc[i];
        path.times.push_back(j == n_steps ? t : t * j / n_steps);
        path.points.push_back(std::move(next));
    }
    return path;
}

bridge_skeleton sample_bridge_skeleton(const point& x, const point& y, double t, std::span<const double> times,
                                       const kernel& k, rng_engine& rng, const bridge_config& cfg) {
    const stability_index& index = k.index();
    const int d = index.dim();
    if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d)
        throw std::invalid_argument("sample_bridge_skeleton: endpoint dimension mismatch");
    if (!(t > 0.0))
        throw std::invalid_argument("sample_bridge_skeleton requires t > 0");
    for (std::size_t j = 0; j < times.size(); ++j)
        if (!(times[j] > 0.0 && times[j] < t) || (j > 0 && !(times[j] > times[j - 1])))
            throw std::invalid_argument("bridge times must be strictly increasing in (0, t)");

    bridge_skeleton out;
    out.start = x;
    out.end = y;
    out.times.push_back(0.0);
    out.points.push_back(x);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    point z(d), inc(d);
    double prev_time = 0.0;
    for (double s : times) {
        const double remaining = t - s;
        const double peak = k(remaining, 0.0);
        const point& prev = out.points.back();
        std::uint64_t attempts = 0;
        for (;;) {
            ++attempts;
            isotropic_increment_into(index, s - prev_time, rng, inc.data());
            double r2 = 0.0;
            for (int i = 0; i < d; ++i) {
                z[i] = prev[i] + inc[i];
                r2 += (y[i] - z[i]) * (y[i] - z[i]);
            }
            // the kernel is radially decreasing, so p(remaining, |y - z|) <= peak
            if (unit(rng) * peak <= k(remaining, std::sqrt(r2)))
                break;
            if (attempts >= cfg.warmup_attempts && 1.0 / static_cast<double>(attempts) < cfg.acceptance_floor) {
                std::ostringstream msg;
                msg << "bridge rejection stalled at s = " << s << " after " << attempts << " attempts";
                throw rejection_stall(msg.str(), 1.0 / static_cast<double>(attempts));
            }
        }
        out.times.push_back(s);
        out.points.push_back(z);
        prev_time = s;
    }
    out.times.push_back(t);
    out.points.push_back(y);
    return out;
}

double occupation_fraction(const path_skeleton& path, const shape& s) {
    const std::size_t intervals = path.points.size() - 1;
    if (path.points.size() < 2)
        throw std::invalid_argument("occupation_fraction needs at least one interval");
    std::size_t inside = 0;
    for (std::size_t j = 0; j < intervals; ++j)
        inside += s.contains(path.points[j]) ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(intervals);
}

bool stayed_inside(const path_skeleton& path, const shape& s) {
    for (const auto& p : path.points)
        if (!s.contains(p))
            return false;
    return true;
}

void write_skeleton_csv(std::ostream& out, std::span<const path_skeleton> paths) {
    if (paths.empty())
        return;
    const std::size_t d = paths.front().points.front().size();
    std::ostringstream buf;
    buf << std::setprecision(17);
    buf << "path_id,s";
    for (std::size_t i = 1; i <= d; ++i)
        buf << ",x_" << i;
    buf << '\n';
    for (std::size_t id = 0; id < paths.size(); ++id)
        for (std::size_t j = 0; j < paths[id].times.size(); ++j) {
            buf << id << ',' << paths[id].times[j];
            for (double v : paths[id].points[j])
                buf << ',' << v;
            buf << '\n';
        }
    out << buf.str();
}

} // namespace fracheat
