#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace medpost {

/// Stream tags for derive_seed. Values are part of the reproducibility
/// contract: changing one changes every downstream draw.
enum class SeedPurpose : std::uint64_t {
    partition = 1,
    mcmc = 2,
    predictive = 3,
    outliers = 4,
    synthetic = 5,
    split = 6,
    spike_slab = 7,
    experiment = 8,
};

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes (master, subset, model, purpose) into an independent stream seed.
/// Pure integer arithmetic, so the result is identical on every platform.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t subset_id,
                                    std::uint64_t model_index, SeedPurpose purpose) noexcept {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ (subset_id + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ (model_index + 0x8cb92ba72f3d8dd7ULL));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(purpose) * 0xd6e8feb86659fd93ULL));
    return h;
}

/// Seeded generator with portable variate algorithms. std::normal_distribution
/// and friends are implementation-defined, so the samplers are written out
/// here on top of the fully specified mt19937_64 engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
    std::uint64_t uniform_index(std::uint64_t n);

    double normal() noexcept;
    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    /// Gamma with shape/rate parameterization (mean shape / rate).
    double gamma(double shape, double rate);

    double beta(double a, double b);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// `count` distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace medpost
