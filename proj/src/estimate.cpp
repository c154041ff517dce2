#include "fracheat/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <stdexcept>
#include <thread>

namespace fracheat {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

rng_engine make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x66726163u};
    return rng_engine(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> salts) {
    std::uint64_t state = seed;
    std::uint64_t out = splitmix64(state);
    for (std::uint64_t s : salts) {
        state ^= s + 0x632be59bd9b4e019ULL + (out << 6) + (out >> 2);
        out = splitmix64(state);
    }
    return out;
}

std::uint64_t salt_of(double x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof bits);
    return bits;
}

void welford::merge(const welford& other) noexcept {
    if (other._n == 0)
        return;
    if (_n == 0) {
        *this = other;
        return;
    }
    const double n_a = static_cast<double>(_n);
    const double n_b = static_cast<double>(other._n);
    const double n = n_a + n_b;
    const double delta = other._mean - _mean;
    _mean += delta * n_b / n;
    _m2 += other._m2 + delta * delta * n_a * n_b / n;
    _n += other._n;
}

double welford::std_error() const noexcept {
    return _n > 1 ? std::sqrt(variance() / static_cast<double>(_n)) : 0.0;
}

estimate to_estimate(const welford& acc, double scale, std::uint64_t seed) {
    return {scale * acc.mean(), std::abs(scale) * acc.std_error(), acc.count(), seed};
}

std::size_t chunk_count(const chunk_plan& plan) {
    if (plan.chunk_size == 0)
        throw std::invalid_argument("chunk size must be positive");
    return static_cast<std::size_t>((plan.n_samples + plan.chunk_size - 1) / plan.chunk_size);
}

void for_each_chunk(const chunk_plan& plan,
                    const std::function<void(std::size_t, std::uint64_t, std::uint64_t)>& body) {
    const std::size_t chunks = chunk_count(plan);
    auto run = [&](std::size_t c) {
        const std::uint64_t first = c * plan.chunk_size;
        const std::uint64_t count = std::min<std::uint64_t>(plan.chunk_size, plan.n_samples - first);
        body(c, first, count);
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(chunks)));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = next++; c < chunks; c = next++)
                    run(c);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& f : failures)
        if (f)
            std::rethrow_exception(f);
}

std::vector<welford> sample_means(const chunk_plan& plan, std::uint64_t seed, std::size_t width,
                                  const std::function<void(rng_engine&, double*)>& draw) {
    const std::size_t chunks = chunk_count(plan);
    std::vector<std::vector<welford>> partial(chunks, std::vector<welford>(width));
    for_each_chunk(plan, [&](std::size_t c, std::uint64_t, std::uint64_t count) {
        rng_engine rng = make_stream(seed, c);
        std::vector<double> values(width);
        auto& acc = partial[c];
        for (std::uint64_t i = 0; i < count; ++i) {
            draw(rng, values.data());
            for (std::size_t k = 0; k < width; ++k)
                acc[k].add(values[k]);
        }
    });
    // merge in chunk order: the result is independent of which thread ran which chunk
    std::vector<welford> total(width);
    for (const auto& part : partial)
        for (std::size_t k = 0; k < width; ++k)
            total[k].merge(part[k]);
    return total;
}

} // namespace fracheat
