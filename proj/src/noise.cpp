#include "blimpswarm/noise.hpp"

namespace blimpswarm {

namespace {

// splitmix64 finalizer; decorrelates neighbouring (seed, stream) pairs.
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

NoiseSource NoiseSource::derive(std::uint64_t seed, std::uint64_t stream) {
    return NoiseSource(mix(mix(seed) ^ (stream * 0x632be59bd9b4e019ULL)));
}

double NoiseSource::gaussian(double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(engine_);
}

double NoiseSource::symmetric_uniform(double half_width) {
    if (half_width <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-half_width, half_width)(engine_);
}

double NoiseSource::uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

bool NoiseSource::bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
}

} // namespace blimpswarm
