#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ugvnet {

// Deterministic random stream. The transforms (Box-Muller, inverse-CDF
// Rayleigh, rejection-sampled bounded ints) are implemented here instead of
// through std::*_distribution so that sequences are stable across standard
// library versions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform01_open() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; two engine draws per sample, no cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        const double u1 = uniform01_open();
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * mag * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Rayleigh(sigma) via inverse CDF.
    double rayleigh(double sigma) {
        return sigma * std::sqrt(-2.0 * std::log(uniform01_open()));
    }

    // Uniform integer in [lo, hi], rejection sampling (no modulo bias).
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer; used to decorrelate derived stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable counter-based derivation: substream i of a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(splitmix64(master_seed) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
}

// Named independent substreams for one simulation run. Each consumer owns a
// stream, so toggling one noise source never perturbs the draws of another.
// Stream indices are part of the trace-reproducibility contract:
//   0 process, 1 measurement, 2 sc_loss, 3 sc_delay, 4 ca_loss, 5 ca_delay, 6 solver
struct RngStreams {
    RngStream process;
    RngStream measurement;
    RngStream sc_loss;
    RngStream sc_delay;
    RngStream ca_loss;
    RngStream ca_delay;
    RngStream solver;
};

inline RngStreams make_rng_streams(std::uint64_t master_seed) {
    return RngStreams{
        RngStream(derive_stream_seed(master_seed, 0)),
        RngStream(derive_stream_seed(master_seed, 1)),
        RngStream(derive_stream_seed(master_seed, 2)),
        RngStream(derive_stream_seed(master_seed, 3)),
        RngStream(derive_stream_seed(master_seed, 4)),
        RngStream(derive_stream_seed(master_seed, 5)),
        RngStream(derive_stream_seed(master_seed, 6)),
    };
}

}  // namespace ugvnet
