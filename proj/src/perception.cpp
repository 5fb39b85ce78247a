#include "blimpswarm/perception.hpp"

#include <algorithm>

namespace blimpswarm {

void CameraIntrinsics::validate() const {
    if (!(focal > 0.0)) throw InvalidArgument("camera: focal length must be positive");
    if (!(width > 0.0 && height > 0.0)) throw InvalidArgument("camera: image size must be positive");
    if (!(i0 >= 0.0 && i0 <= width)) throw InvalidArgument("camera: i0 must lie in [0, width]");
    if (!(j0 >= 0.0 && j0 <= height)) throw InvalidArgument("camera: j0 must lie in [0, height]");
    if (!(hfov > 0.0 && hfov < kPi)) throw InvalidArgument("camera: hfov must be in (0, pi)");
    if (!(max_range > 0.0)) throw InvalidArgument("camera: max_range must be positive");
}

void CameraCalibration::validate() const {
    if (!(d0 > 0.0)) throw InvalidArgument("calibration: d0 must be positive");
    if (!(l_f0 > 0.0)) throw InvalidArgument("calibration: l_f0 must be positive");
    if (!(length > 0.0)) throw InvalidArgument("calibration: L0 must be positive");
}

const char *to_string(NotVisibleReason reason) {
    switch (reason) {
    case NotVisibleReason::OutOfFov:
        return "out_of_fov";
    case NotVisibleReason::OutOfRange:
        return "out_of_range";
    case NotVisibleReason::Occluded:
        return "occluded";
    case NotVisibleReason::BehindCamera:
        return "behind_camera";
    }
    return "unknown";
}

namespace perception {

Vec3 to_camera_frame(const Pose &observer, const Vec3 &world_point) {
    const Vec3 d = world_point - observer.position;
    const double c = std::cos(observer.yaw);
    const double s = std::sin(observer.yaw);
    return {d.x * s - d.y * c, -d.z, d.x * c + d.y * s};
}

std::optional<double> segment_sphere_hit(const Vec3 &from, const Vec3 &to, const Vec3 &centre,
                                         double radius) {
    const Vec3 dir = to - from;
    const Vec3 rel = from - centre;
    const double a = dir.dot(dir);
    if (a == 0.0) return std::nullopt;
    const double b = 2.0 * rel.dot(dir);
    const double c = rel.dot(rel) - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double t0 = (-b - root) / (2.0 * a);
    const double t1 = (-b + root) / (2.0 * a);
    // Any overlap of [t0, t1] with the open segment counts, including a sphere
    // that swallows one of the endpoints.
    if (t1 <= 0.0 || t0 >= 1.0) return std::nullopt;
    return std::max(t0, 0.0);
}

Observation observe(const BlimpState &observer, const BlimpState &target,
                    std::span<const BlimpState> others, const CameraIntrinsics &intrinsics,
                    const BlimpGeometry &geometry, const RenderOptions &options,
                    NoiseSource &rng) {
    if (observer.id == target.id) throw InvalidArgument("observe: observer and target are the same blimp");

    const Vec3 centre = to_camera_frame(observer.pose, target.pose.position);
    if (centre.z <= 0.0) return NotVisible{NotVisibleReason::BehindCamera};

    const double bearing = std::atan2(centre.x, centre.z);
    if (std::abs(bearing) > 0.5 * intrinsics.hfov) return NotVisible{NotVisibleReason::OutOfFov};

    const double f = intrinsics.focal;
    double i_p = intrinsics.i0 + f * centre.x / centre.z;
    double j_p = intrinsics.j0 + f * centre.y / centre.z;
    if (i_p < 0.0 || i_p > intrinsics.width || j_p < 0.0 || j_p > intrinsics.height) {
        return NotVisible{NotVisibleReason::OutOfFov};
    }

    if ((target.pose.position - observer.pose.position).norm() > intrinsics.max_range) {
        return NotVisible{NotVisibleReason::OutOfRange};
    }

    for (const BlimpState &other : others) {
        if (other.id == observer.id || other.id == target.id) continue;
        if (segment_sphere_hit(observer.pose.position, target.pose.position, other.pose.position,
                               geometry.envelope_radius)) {
            return NotVisible{NotVisibleReason::Occluded};
        }
    }

    double l_f = f * geometry.length / centre.z;
    if (options.realistic_aspect) {
        const double half = 0.5 * geometry.length;
        const Vec3 axis{std::cos(target.pose.yaw) * half, std::sin(target.pose.yaw) * half, 0.0};
        const Vec3 a = to_camera_frame(observer.pose, target.pose.position + axis);
        const Vec3 b = to_camera_frame(observer.pose, target.pose.position - axis);
        const double i_a = f * a.x / std::max(a.z, 1e-6);
        const double i_b = f * b.x / std::max(b.z, 1e-6);
        // End-on, the envelope still spans its diameter.
        l_f = std::max(std::abs(i_a - i_b), f * 2.0 * geometry.envelope_radius / centre.z);
    }

    i_p += rng.gaussian(options.noise_px);
    j_p += rng.gaussian(options.noise_px);
    l_f += rng.gaussian(options.noise_px);

    ImageObservation obs;
    obs.target = target.id;
    obs.i_p = std::clamp(i_p, 0.0, intrinsics.width);
    obs.j_p = std::clamp(j_p, 0.0, intrinsics.height);
    obs.l_f = std::max(l_f, 1.0);
    return obs;
}

double calibrate_focal(const CameraCalibration &cal) {
    cal.validate();
    return cal.d0 * cal.l_f0 / cal.length;
}

RelativeEstimate estimate_relative(const ImageObservation &obs, const CameraCalibration &cal,
                                   const CameraIntrinsics &intrinsics) {
    if (!(obs.l_f > 0.0)) throw InvalidArgument("estimate_relative: l_f must be positive");
    RelativeEstimate est;
    est.z = cal.d0 * cal.l_f0 / obs.l_f;
    est.x = cal.length * (obs.i_p - intrinsics.i0) / obs.l_f;
    est.y = cal.length * (obs.j_p - intrinsics.j0) / obs.l_f;
    est.distance = std::sqrt(est.x * est.x + est.z * est.z);
    est.bearing = std::asin(est.x / est.distance);
    return est;
}

double read_altimeter(const BlimpState &state, double noise_m, NoiseSource &rng) {
    if (noise_m < 0.0) throw InvalidArgument("read_altimeter: negative noise");
    return std::max(0.0, state.altitude() + rng.gaussian(noise_m));
}

SensorReadings read_imu(const BlimpState &state, double altitude, const ImuNoise &noise,
                        NoiseSource &rng) {
    SensorReadings raw;
    raw.altitude = altitude;
    raw.pitch = state.pose.pitch + rng.gaussian(noise.pitch);
    raw.yaw_rate = state.yaw_rate + rng.gaussian(noise.yaw_rate);
    raw.v_h_est = state.v_h + rng.gaussian(noise.v_h);
    return raw;
}

FusionFilter::FusionFilter(double alpha, double v_h_clamp) : alpha_(alpha), v_h_clamp_(v_h_clamp) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("fuse: alpha must be in (0, 1]");
    if (!(v_h_clamp > 0.0)) throw InvalidArgument("fuse: v_h clamp must be positive");
}

const SensorReadings &FusionFilter::update(const SensorReadings &raw) {
    if (!output_ || alpha_ == 1.0) {
        output_ = raw;
    } else {
        SensorReadings &y = *output_;
        y.altitude += alpha_ * (raw.altitude - y.altitude);
        y.pitch += alpha_ * (raw.pitch - y.pitch);
        y.yaw_rate += alpha_ * (raw.yaw_rate - y.yaw_rate);
        y.v_h_est += alpha_ * (raw.v_h_est - y.v_h_est);
    }
    output_->v_h_est = std::clamp(output_->v_h_est, -v_h_clamp_, v_h_clamp_);
    return *output_;
}

SensorReadings fuse(std::span<const SensorReadings> history, double alpha, double v_h_clamp) {
    if (history.empty()) throw InvalidArgument("fuse: empty history");
    FusionFilter filter(alpha, v_h_clamp);
    for (const SensorReadings &raw : history) filter.update(raw);
    return *filter.output();
}

} // namespace perception
} // namespace blimpswarm
