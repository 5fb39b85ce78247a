#pragma once

// Simulated sensing for one follower.
//
// Camera frame: z forward along the body heading (horizontal, the image plane
// stays vertical), x to the right, y down. Image coordinates follow the same
// axes: i grows to the right, j grows downward. A target to the right of the
// image centre therefore has i_P > i_0 and a positive bearing estimate.

#include "blimpswarm/core.hpp"
#include "blimpswarm/noise.hpp"

#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace blimpswarm {

struct CameraIntrinsics {
    double focal{456.25};     // f [px]
    double i0{320.0};         // principal point [px]
    double j0{240.0};
    double width{640.0};      // [px]
    double height{480.0};
    double hfov{deg_to_rad(70.0)}; // [rad]
    double max_range{6.0};    // [m]

    void validate() const;
};

/// Reference measurement used to derive the focal length.
struct CameraCalibration {
    double d0{1.0};     // calibration distance [m]
    double l_f0{365.0}; // projected centerline length at d0 [px]
    double length{0.8}; // L0, true centerline length [m]

    void validate() const;
};

struct ImageObservation {
    BlimpId target;
    double i_p{0.0}; // projected centre [px]
    double j_p{0.0};
    double l_f{0.0}; // projected centerline length [px]
};

enum class NotVisibleReason { OutOfFov, OutOfRange, Occluded, BehindCamera };

[[nodiscard]] const char *to_string(NotVisibleReason reason);

struct NotVisible {
    NotVisibleReason reason;
};

using Observation = std::variant<ImageObservation, NotVisible>;

struct RelativeEstimate {
    double x{0.0}; // lateral, camera frame [m]
    double y{0.0}; // vertical, camera frame [m]
    double z{0.0}; // depth [m]
    double distance{0.0}; // d_hat = sqrt(x^2 + z^2)
    double bearing{0.0};  // psi_hat = asin(x / d_hat), positive to the right
};

struct SensorReadings {
    double altitude{0.0}; // [m]
    double pitch{0.0};    // [rad]
    double yaw_rate{0.0}; // [rad/s]
    double v_h_est{0.0};  // [m/s]
};

struct RenderOptions {
    double noise_px{0.5};
    /// Project the true, yaw-dependent centerline instead of the idealised
    /// segment parallel to the image plane.
    bool realistic_aspect{false};
};

struct ImuNoise {
    double pitch{0.002};    // [rad]
    double yaw_rate{0.002}; // [rad/s]
    double v_h{0.005};      // [m/s], onboard-integrated velocity
};

namespace perception {

/// Camera-frame coordinates (x right, y down, z forward) of a world point as
/// seen from the observer.
[[nodiscard]] Vec3 to_camera_frame(const Pose &observer, const Vec3 &world_point);

/// Parameter t in (0, 1) of the first intersection between the segment
/// from -> to and a sphere, or nullopt if the segment misses it.
[[nodiscard]] std::optional<double> segment_sphere_hit(const Vec3 &from, const Vec3 &to,
                                                       const Vec3 &centre, double radius);

/// Simulated monocular detection of `target` by `observer`. `others` may
/// include the observer and the target; they are skipped by id.
[[nodiscard]] Observation observe(const BlimpState &observer, const BlimpState &target,
                                  std::span<const BlimpState> others,
                                  const CameraIntrinsics &intrinsics,
                                  const BlimpGeometry &geometry, const RenderOptions &options,
                                  NoiseSource &rng);

/// f = d0 * l_f0 / L0.
[[nodiscard]] double calibrate_focal(const CameraCalibration &cal);

/// Relative position, distance and bearing from a detection.
[[nodiscard]] RelativeEstimate estimate_relative(const ImageObservation &obs,
                                                 const CameraCalibration &cal,
                                                 const CameraIntrinsics &intrinsics);

/// Laser altimeter: true altitude plus Gaussian noise, clamped at the floor.
[[nodiscard]] double read_altimeter(const BlimpState &state, double noise_m, NoiseSource &rng);

/// Raw IMU sample. v_h_est carries the onboard-integrated horizontal speed.
[[nodiscard]] SensorReadings read_imu(const BlimpState &state, double altitude,
                                      const ImuNoise &noise, NoiseSource &rng);

/// Constant-gain scalar filter per channel. One instance per blimp.
class FusionFilter {
  public:
    explicit FusionFilter(double alpha, double v_h_clamp = 2.0);

    const SensorReadings &update(const SensorReadings &raw);
    [[nodiscard]] const std::optional<SensorReadings> &output() const { return output_; }

  private:
    double alpha_;
    double v_h_clamp_;
    std::optional<SensorReadings> output_;
};

/// Folds a FusionFilter over a raw history and returns the latest output.
[[nodiscard]] SensorReadings fuse(std::span<const SensorReadings> history, double alpha,
                                  double v_h_clamp = 2.0);

} // namespace perception
} // namespace blimpswarm
