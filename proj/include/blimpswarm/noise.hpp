#pragma once

#include <cstdint>
#include <random>

namespace blimpswarm {

/// Seeded random stream. Each consumer (a blimp's camera, its altimeter, the
/// broadcast channel, ...) owns its own stream so that the draw order of one
/// consumer never perturbs another.
class NoiseSource {
  public:
    explicit NoiseSource(std::uint64_t seed = 0) : engine_(seed) {}

    /// Derives an independent stream from a run seed and a stream tag.
    static NoiseSource derive(std::uint64_t seed, std::uint64_t stream);

    double gaussian(double sigma);
    /// Uniform on [-half_width, half_width].
    double symmetric_uniform(double half_width);
    double uniform01();
    bool bernoulli(double p);

  private:
    std::mt19937_64 engine_;
};

} // namespace blimpswarm
