#ifndef FRACHEAT_STABLE_SAMPLER_HPP
#define FRACHEAT_STABLE_SAMPLER_HPP

#include "fracheat/estimate.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/stable_kernel.hpp"

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracheat {

/// One-sided beta-stable variate with E[exp(-lambda S)] = exp(-lambda^beta), 0 < beta < 1.
double positive_stable_sample(double beta, rng_engine& rng);

/// Increment of the isotropic alpha-stable process over time t, written into out[0..d).
void isotropic_increment_into(const stability_index& index, double t, rng_engine& rng, double* out);
point isotropic_increment(const stability_index& index, double t, rng_engine& rng);

struct path_skeleton {
    std::vector<double> times;
    std::vector<point> points;
};

struct bridge_skeleton : path_skeleton {
    point start;
    point end;
};

/// Free path on the uniform grid {j t / n}, j = 0..n.
path_skeleton sample_path_skeleton(const point& x0, double t, int n_steps, const stability_index& index,
                                   rng_engine& rng);

class rejection_stall : public std::runtime_error {
public:
    rejection_stall(const std::string& what, double acceptance)
        : std::runtime_error(what), _acceptance{acceptance} {}
    double acceptance() const noexcept { return _acceptance; }

private:
    double _acceptance;
};

struct bridge_config {
    /// abort once the running acceptance rate of one interior point drops below this
    double acceptance_floor = 1e-4;
    /// attempts made before the floor is enforced
    std::uint64_t warmup_attempts = 10000;
};

/// Path pinned at x (time 0) and y (time t), sampled at the given interior times in (0, t).
/// Each point is drawn from its conditional law given the previous one by rejection from
/// the free increment, accepting with probability p_{t - s_j}(z, y) / p_{t - s_j}(0).
bridge_skeleton sample_bridge_skeleton(const point& x, const point& y, double t, std::span<const double> times,
                                       const kernel& k, rng_engine& rng, const bridge_config& cfg = {});

/// Fraction of grid intervals whose left endpoint lies in the shape.
double occupation_fraction(const path_skeleton& path, const shape& s);

/// True iff every skeleton point lies in the shape.
bool stayed_inside(const path_skeleton& path, const shape& s);

/// CSV dump with columns path_id, s, x_1..x_d.
void write_skeleton_csv(std::ostream& out, std::span<const path_skeleton> paths);

} // namespace fracheat

#endif
