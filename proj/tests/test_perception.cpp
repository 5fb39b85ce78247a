#include "blimpswarm/perception.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace blimpswarm;

namespace {

CameraCalibration calibration() { return {1.0, 365.0, 0.8}; }

CameraIntrinsics intrinsics() {
    CameraIntrinsics c;
    c.focal = perception::calibrate_focal(calibration());
    return c;
}

BlimpState at(int id, double x, double y, double z, double yaw = 0.0) {
    BlimpState s;
    s.id = BlimpId{id};
    s.pose.position = {x, y, z};
    s.pose.yaw = yaw;
    return s;
}

RenderOptions noiseless() { return {0.0, false}; }

BlimpGeometry geometry() {
    BlimpGeometry g;
    g.length = 0.8;
    g.envelope_radius = 0.2;
    return g;
}

Observation look(const BlimpState &a, const BlimpState &b, const std::vector<BlimpState> &all = {}) {
    NoiseSource rng(1);
    return perception::observe(a, b, all, intrinsics(), geometry(), noiseless(), rng);
}

NotVisibleReason reason(const Observation &o) {
    REQUIRE(std::holds_alternative<NotVisible>(o));
    return std::get<NotVisible>(o).reason;
}

} // namespace

TEST_CASE("calibrate_focal") {
    CHECK(perception::calibrate_focal({2.0, 100.0, 1.0}) == 200.0);
    CHECK(perception::calibrate_focal({1.0, 321.0, 1.0}) == 321.0);
    CHECK_THROWS_AS((void)perception::calibrate_focal({0.0, 100.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS((void)perception::calibrate_focal({1.0, -1.0, 1.0}), InvalidArgument);

    // Pinhole oracle: a 1 m segment parallel to the image plane at 2 m, f = 200.
    CameraIntrinsics c;
    c.focal = 200.0;
    const double half = 0.5;
    const double i_a = c.focal * half / 2.0, i_b = c.focal * -half / 2.0;
    CHECK(i_a - i_b == doctest::Approx(100.0));
}

TEST_CASE("target dead ahead at the calibration distance") {
    const auto o = look(at(0, 0, 0, 1.5), at(1, 1.0, 0, 1.5));
    REQUIRE(std::holds_alternative<ImageObservation>(o));
    const auto &img = std::get<ImageObservation>(o);
    CHECK(img.i_p == doctest::Approx(320.0));
    CHECK(img.j_p == doctest::Approx(240.0));
    CHECK(img.l_f == doctest::Approx(365.0));
    CHECK(img.target == BlimpId{1});
}

TEST_CASE("visibility reasons") {
    const double half = 0.5 * intrinsics().hfov;
    const BlimpState me = at(0, 0, 0, 1.5);
    const double r = 2.0;
    CHECK(reason(look(me, at(1, r * std::cos(half + 0.01), r * std::sin(half + 0.01), 1.5))) ==
          NotVisibleReason::OutOfFov);
    CHECK(std::holds_alternative<ImageObservation>(
        look(me, at(1, r * std::cos(half - 0.01), r * std::sin(half - 0.01), 1.5))));
    CHECK(reason(look(me, at(1, -2, 0.1, 1.5))) == NotVisibleReason::BehindCamera);
    CHECK(reason(look(me, at(1, 6.5, 0, 1.5))) == NotVisibleReason::OutOfRange);
    // Far above the line of sight: projects outside the image.
    CHECK(reason(look(me, at(1, 1.0, 0, 3.5))) == NotVisibleReason::OutOfFov);
    CHECK_THROWS_AS((void)look(me, at(0, 1, 0, 1.5)), InvalidArgument);
}

TEST_CASE("occlusion by a third blimp on the line of sight") {
    const BlimpState a = at(0, 0, 0, 1.5), b = at(1, 3, 0, 1.5), c = at(2, 1.5, 0, 1.5);
    CHECK(reason(look(a, b, {a, b, c})) == NotVisibleReason::Occluded);
    // Ray-sphere oracle: the ray passes at distance 0.25 > r = 0.2.
    const BlimpState aside = at(2, 1.5, 0.25, 1.5);
    CHECK(std::holds_alternative<ImageObservation>(look(a, b, {a, b, aside})));
}

TEST_CASE("segment_sphere_hit against closed-form distances") {
    const auto hit = perception::segment_sphere_hit({0, 0, 0}, {4, 0, 0}, {2, 0, 0}, 0.5);
    REQUIRE(hit);
    CHECK(*hit == doctest::Approx(1.5 / 4.0));
    CHECK_FALSE(perception::segment_sphere_hit({0, 0, 0}, {4, 0, 0}, {2, 0.6, 0}, 0.5));
    CHECK_FALSE(perception::segment_sphere_hit({0, 0, 0}, {4, 0, 0}, {5, 0, 0}, 0.5));
    CHECK_FALSE(perception::segment_sphere_hit({0, 0, 0}, {4, 0, 0}, {-1, 0, 0}, 0.5));
    CHECK(perception::segment_sphere_hit({0, 0, 0}, {4, 0, 0}, {4.2, 0, 0}, 0.5));
}

TEST_CASE("property: shrinking the occluder below its miss distance removes the occlusion") {
    NoiseSource rng(21);
    int occluded = 0;
    for (int k = 0; k < 2000; ++k) {
        const Vec3 a{0, 0, 1.5};
        const Vec3 b{rng.symmetric_uniform(4), rng.symmetric_uniform(4), 1.5 + rng.symmetric_uniform(0.3)};
        if ((b - a).norm() < 0.5) continue;
        const double t = 0.2 + 0.6 * rng.uniform01();
        const Vec3 c = a + (b - a) * t + Vec3{rng.symmetric_uniform(0.3), rng.symmetric_uniform(0.3), 0};
        // Distance from c to the segment.
        const Vec3 d = b - a;
        const double s = std::clamp((c - a).dot(d) / d.dot(d), 0.0, 1.0);
        const double miss = (a + d * s - c).norm();
        const auto wide = perception::segment_sphere_hit(a, b, c, miss + 1e-6);
        const auto narrow = perception::segment_sphere_hit(a, b, c, miss * (1 - 1e-9) - 1e-9);
        CHECK(wide.has_value());
        CHECK_FALSE(narrow.has_value());
        occluded += wide ? 1 : 0;
    }
    CHECK(occluded > 1000);
}

TEST_CASE("estimate_relative worked values") {
    CameraIntrinsics c;
    c.i0 = 320;
    c.j0 = 240;
    const CameraCalibration cal{2.0, 100.0, 1.0};
    const RelativeEstimate e = perception::estimate_relative({BlimpId{1}, 420.0, 240.0, 50.0}, cal, c);
    CHECK(e.z == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(e.x == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.y == doctest::Approx(0.0));
    CHECK(e.distance == doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));
    CHECK(e.bearing == doctest::Approx(std::asin(2.0 / std::sqrt(20.0))).epsilon(1e-12));
    CHECK(std::abs(e.bearing - 0.46365) < 1e-5);

    const RelativeEstimate id = perception::estimate_relative({BlimpId{1}, 320.0, 240.0, 100.0}, cal, c);
    CHECK(id.x == 0.0);
    CHECK(id.y == 0.0);
    CHECK(id.z == 2.0);
    CHECK(id.distance == 2.0);
    CHECK(id.bearing == 0.0);

    CHECK_THROWS_AS((void)perception::estimate_relative({BlimpId{1}, 320.0, 240.0, 0.0}, cal, c), InvalidArgument);
}

TEST_CASE("property: noiseless observe then estimate recovers the camera-frame offset") {
    NoiseSource rng(31);
    const CameraIntrinsics c = intrinsics();
    int checked = 0;
    while (checked < 1000) {
        BlimpState a = at(0, rng.symmetric_uniform(3), rng.symmetric_uniform(3), 1.5 + rng.symmetric_uniform(0.3),
                          rng.symmetric_uniform(kPi));
        const double range = 0.6 + 4.5 * rng.uniform01();
        const double bearing = rng.symmetric_uniform(0.5 * c.hfov);
        const Vec3 p = a.pose.position + Vec3{range * std::cos(a.pose.yaw + bearing),
                                              range * std::sin(a.pose.yaw + bearing), rng.symmetric_uniform(0.3)};
        BlimpState b = at(1, p.x, p.y, p.z, rng.symmetric_uniform(kPi));
        const Observation o = look(a, b);
        if (!std::holds_alternative<ImageObservation>(o)) continue;
        const RelativeEstimate e = perception::estimate_relative(std::get<ImageObservation>(o), calibration(), c);
        const Vec3 truth = perception::to_camera_frame(a.pose, b.pose.position);
        CHECK(std::abs(e.x - truth.x) < 1e-9);
        CHECK(std::abs(e.z - truth.z) < 1e-9);
        CHECK(std::abs(e.bearing - std::asin(truth.x / std::hypot(truth.x, truth.z))) < 1e-9);
        ++checked;
    }
}

TEST_CASE("estimator monotonicity and sign") {
    const CameraIntrinsics c = intrinsics();
    double last = std::numeric_limits<double>::infinity();
    for (double l = 10; l < 600; l += 7) {
        const auto e = perception::estimate_relative({BlimpId{1}, 320.0, 240.0, l}, calibration(), c);
        CHECK(e.z < last);
        last = e.z;
    }
    NoiseSource rng(4);
    for (int k = 0; k < 500; ++k) {
        const double i = rng.uniform01() * 640.0;
        const auto e = perception::estimate_relative({BlimpId{1}, i, 240.0, 100.0}, calibration(), c);
        CHECK((e.bearing > 0) == (i > c.i0));
        CHECK(std::abs(e.bearing) <= kPi / 2);
    }
}

TEST_CASE("target to the right of the observer lands right of the image centre") {
    const auto o = look(at(0, 0, 0, 1.5), at(1, 2.0, -0.5, 1.5));
    REQUIRE(std::holds_alternative<ImageObservation>(o));
    CHECK(std::get<ImageObservation>(o).i_p > 320.0);
}

TEST_CASE("pixel noise is seeded") {
    const BlimpState a = at(0, 0, 0, 1.5), b = at(1, 2, 0.2, 1.5);
    NoiseSource r1(5), r2(5);
    const RenderOptions noisy{0.5, false};
    for (int k = 0; k < 50; ++k) {
        const auto o1 = std::get<ImageObservation>(perception::observe(a, b, {}, intrinsics(), geometry(), noisy, r1));
        const auto o2 = std::get<ImageObservation>(perception::observe(a, b, {}, intrinsics(), geometry(), noisy, r2));
        CHECK(o1.i_p == o2.i_p);
        CHECK(o1.l_f == o2.l_f);
    }
}

TEST_CASE("realistic aspect foreshortens a rotated target") {
    const BlimpState a = at(0, 0, 0, 1.5);
    NoiseSource rng(1);
    const RenderOptions real{0.0, true};
    const auto side = std::get<ImageObservation>(
        perception::observe(a, at(1, 2, 0, 1.5, kPi / 2), {}, intrinsics(), geometry(), real, rng));
    const auto end_on = std::get<ImageObservation>(
        perception::observe(a, at(1, 2, 0, 1.5, 0.0), {}, intrinsics(), geometry(), real, rng));
    CHECK(side.l_f == doctest::Approx(intrinsics().focal * 0.8 / 2.0));
    CHECK(end_on.l_f < side.l_f);
}

TEST_CASE("read_altimeter") {
    NoiseSource rng(8);
    CHECK(perception::read_altimeter(at(0, 0, 0, 1.5), 0.0, rng) == 1.5);
    for (int k = 0; k < 1000; ++k) CHECK(perception::read_altimeter(at(0, 0, 0, 0.0), 0.05, rng) >= 0.0);
    double sum = 0.0;
    for (int k = 0; k < 10000; ++k) sum += perception::read_altimeter(at(0, 0, 0, 2.0), 0.01, rng);
    CHECK(std::abs(sum / 10000 - 2.0) < 0.001);
    CHECK_THROWS_AS((void)perception::read_altimeter(at(0, 0, 0, 1.0), -0.1, rng), InvalidArgument);
}

TEST_CASE("fuse") {
    std::vector<SensorReadings> constant(200, SensorReadings{1.2, 0.05, 0.1, 0.3});
    const SensorReadings c = perception::fuse(constant, 0.2);
    CHECK(c.altitude == doctest::Approx(1.2));
    CHECK(c.v_h_est == doctest::Approx(0.3));

    std::vector<SensorReadings> hist{{1.0, 0, 0, 0}, {2.0, 0, 0, 0}, {3.0, 0.1, 0.2, 0.4}};
    const SensorReadings last = perception::fuse(hist, 1.0);
    CHECK(last.altitude == 3.0);
    CHECK(last.pitch == 0.1);

    CHECK_THROWS_AS((void)perception::fuse(std::vector<SensorReadings>{}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(perception::FusionFilter(0.0), InvalidArgument);
    CHECK_THROWS_AS(perception::FusionFilter(1.5), InvalidArgument);

    // Step response reaches 95 % within ceil(3 / alpha) samples.
    for (double alpha : {0.05, 0.1, 0.3, 0.5, 0.9}) {
        perception::FusionFilter f(alpha);
        f.update(SensorReadings{0, 0, 0, 0});
        const int budget = static_cast<int>(std::ceil(3.0 / alpha));
        for (int k = 0; k < budget; ++k) f.update(SensorReadings{1, 0, 0, 0});
        CHECK(f.output()->altitude >= 0.95);
    }

    perception::FusionFilter clamp(1.0, 0.5);
    CHECK(clamp.update(SensorReadings{1, 0, 0, 3.0}).v_h_est == 0.5);
}
