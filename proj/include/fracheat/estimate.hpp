#ifndef FRACHEAT_ESTIMATE_HPP
#define FRACHEAT_ESTIMATE_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

namespace fracheat {

/// Monte Carlo result: value, standard error, sample count and the seed that produced it.
struct estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
};

using rng_engine = std::mt19937_64;

/// Engine for substream `stream` of `seed`. Distinct streams are seeded through seed_seq
/// so their states are unrelated; the same pair always reproduces the same draws.
rng_engine make_stream(std::uint64_t seed, std::uint64_t stream);

/// Deterministic child seed from a parent seed and a list of salts (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> salts);

/// Bit pattern of a double, for use as a salt.
std::uint64_t salt_of(double x);

/// Running mean and sum of squared deviations.
class welford {
public:
    void add(double x) noexcept {
        ++_n;
        const double delta = x - _mean;
        _mean += delta / static_cast<double>(_n);
        _m2 += delta * (x - _mean);
    }

    /// Chan et al. pairwise merge.
    void merge(const welford& other) noexcept;

    std::uint64_t count() const noexcept { return _n; }
    double mean() const noexcept { return _mean; }
    double variance() const noexcept { return _n > 1 ? _m2 / static_cast<double>(_n - 1) : 0.0; }
    double std_error() const noexcept;

private:
    std::uint64_t _n = 0;
    double _mean = 0.0;
    double _m2 = 0.0;
};

/// scale * mean with scaled standard error.
estimate to_estimate(const welford& acc, double scale, std::uint64_t seed);

struct chunk_plan {
    std::uint64_t n_samples = 0;
    std::uint64_t chunk_size = 8192;
    unsigned threads = 1;
};

/// Runs body(chunk, first_sample, count) for every chunk. Each chunk owns its own stream and
/// its own output slot, so results do not depend on the thread count or scheduling.
void for_each_chunk(const chunk_plan& plan,
                    const std::function<void(std::size_t chunk, std::uint64_t first, std::uint64_t count)>& body);

std::size_t chunk_count(const chunk_plan& plan);

/// Samples `width` correlated scalars per draw; returns one merged accumulator per scalar.
/// draw(rng, out) fills out[0..width). Chunk c uses make_stream(seed, c).
std::vector<welford> sample_means(const chunk_plan& plan, std::uint64_t seed, std::size_t width,
                                  const std::function<void(rng_engine&, double*)>& draw);

} // namespace fracheat

#endif
