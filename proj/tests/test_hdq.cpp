#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "hdq/hdq.hpp"
#include "hdq/trace.hpp"

using namespace hdq;

TEST_CASE("config validation") {
    HdqConfig cfg;
    cfg.validate();
    cfg.vis_cutoff = 0.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = HdqConfig{};
    cfg.blend_scale = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("coarse cutoff skips the fine query") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    TemplateCloud cloud = bake_template(scene, 3000);
    auto state = make_pose_state(scene, cloud, Pose::rest(1));
    HdqConfig cfg;

    uint64_t before = state->fine_evaluations.load();
    DistanceSample far_sample = query({2, 0, 0}, *state, cfg);
    CHECK_FALSE(far_sample.fine_evaluated);
    CHECK(far_sample.d_tilde == far_sample.d_coarse);  // bitwise far-field identity
    CHECK(state->fine_evaluations.load() == before);

    DistanceSample near_sample = query({0.55, 0, 0}, *state, cfg);
    CHECK(near_sample.fine_evaluated);
    CHECK(state->fine_evaluations.load() == before + 1);
}

TEST_CASE("blend formula evaluates the stated examples") {
    // d_fine = 0.05, d_coarse = 0.07, T_d = 0.1 -> 0.06.
    double d_fine = 0.05, d_coarse = 0.07, t_d = 0.1;
    double f = d_fine / t_d;
    CHECK(d_fine * (1 - f) + d_coarse * f == Catch::Approx(0.06).margin(1e-15));
    // d_fine = 0 -> 0 regardless of d_coarse.
    CHECK(0.0 * (1 - 0.0) + 123.0 * 0.0 == 0.0);
}

TEST_CASE("query matches the blend formula for fine samples") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    TemplateCloud cloud = bake_template(scene, 3000);
    auto state = make_pose_state(scene, cloud, Pose::rest(1));
    HdqConfig cfg;
    Rng rng(51);
    for (int i = 0; i < 200; ++i) {
        Vec3 x = rng.unit_vector() * rng.uniform(0.42, 0.59);
        DistanceSample s = query(x, *state, cfg);
        REQUIRE(s.fine_evaluated);
        double f = *s.d_fine / cfg.blend_scale;
        CHECK(s.d_tilde == Catch::Approx(*s.d_fine * (1 - f) + s.d_coarse * f).margin(1e-15));
        if (*s.d_fine == 0.0) CHECK(s.d_tilde == 0.0);
    }
}

TEST_CASE("per-query cutoff override") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    TemplateCloud cloud = bake_template(scene, 3000);
    auto state = make_pose_state(scene, cloud, Pose::rest(1));
    HdqConfig cfg;
    Vec3 x{0.55, 0, 0};  // coarse distance about 0.05
    CHECK(query(x, *state, cfg).fine_evaluated);
    CHECK_FALSE(query(x, *state, cfg, 0.025).fine_evaluated);
}

TEST_CASE("lazy evaluation counts exactly the under-cutoff samples") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    TemplateCloud cloud = bake_template(scene, 3000);
    auto state = make_pose_state(scene, cloud, Pose::rest(1));
    HdqConfig cfg;
    Rng rng(52);
    uint64_t expected = 0;
    uint64_t before = state->fine_evaluations.load();
    for (int i = 0; i < 2000; ++i) {
        Vec3 x = rng.unit_vector() * rng.uniform(0.0, 1.2);
        DistanceSample s = query(x, *state, cfg);
        if (s.d_coarse <= cfg.cutoff && !s.degenerate_warp) ++expected;
        CHECK(s.fine_evaluated == (s.d_coarse <= cfg.cutoff && !s.degenerate_warp));
    }
    CHECK(state->fine_evaluations.load() - before == expected);
}

TEST_CASE("near-surface fidelity against the brute-force oracle") {
    PuppetScene scene = fixtures::two_capsule_scene();
    TemplateCloud cloud = bake_template(scene, 12000);
    Pose pose = fixtures::bent_pose();
    auto state = make_pose_state(scene, cloud, pose);
    HdqConfig cfg;
    DistanceOracle oracle(scene, pose, 60000);

    Rng rng(53);
    int near_surface = 0, sign_total = 0, sign_agree = 0;
    while (near_surface < 10000) {
        size_t i = size_t(rng.uniform() * double(state->posed.size()));
        Vec3 x = state->posed.positions[i] + rng.unit_vector() * rng.uniform(0.0, 0.08);
        double truth = oracle(x);
        DistanceSample s = query(x, *state, cfg);
        if (std::abs(truth) <= 0.05) {
            ++near_surface;
            CHECK(std::abs(s.d_tilde - truth) <= std::max(0.005, 0.15 * std::abs(truth)));
        }
        if (std::abs(truth) >= 0.005) {
            ++sign_total;
            if (std::signbit(s.d_tilde) == std::signbit(truth)) ++sign_agree;
        }
    }
    REQUIRE(sign_total > 5000);
    CHECK(double(sign_agree) / sign_total >= 0.99);
}

TEST_CASE("brute-force oracle sanity and self-consistency") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    Pose rest = Pose::rest(1);
    DistanceOracle oracle(scene, rest, 100000);
    // On-sample distance is zero.
    CHECK(std::abs(oracle(oracle.posed().positions[0])) < 1e-12);
    // Analytic sphere distance at 0.8 from the center.
    CHECK(oracle({0.8, 0, 0}) == Catch::Approx(0.3).margin(2.0 * oracle.sampling_gap()));
    CHECK(oracle({0.2, 0, 0}) < 0);

    // Doubling the density moves answers by less than twice the gap.
    PuppetScene bent_scene = fixtures::two_capsule_scene();
    Pose pose = fixtures::bent_pose();
    DistanceOracle coarse_oracle(bent_scene, pose, 50000);
    DistanceOracle fine_oracle(bent_scene, pose, 100000);
    Rng rng(54);
    for (int i = 0; i < 100; ++i) {
        Vec3 x = coarse_oracle.posed().positions[size_t(rng.uniform() * 999)] +
                 rng.unit_vector() * rng.uniform(0, 0.2);
        CHECK(std::abs(coarse_oracle(x) - fine_oracle(x)) < 2.0 * coarse_oracle.sampling_gap());
    }
}

TEST_CASE("surface normal on the identity sphere") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    TemplateCloud cloud = bake_template(scene, 6000);
    auto state = make_pose_state(scene, cloud, Pose::rest(1));
    HdqConfig cfg;
    Vec3 n = surface_normal({0.5, 0, 0}, *state, cfg);
    CHECK(degrees(angle_between(n, {1, 0, 0})) < 0.5);
    CHECK_THROWS_AS(surface_normal({0.8, 0, 0}, *state, cfg), NotOnSurfaceError);
}

TEST_CASE("surface normal rotates with a rigid root rotation") {
    PuppetScene scene = fixtures::sphere_scene(0.5);
    // Push the sphere off the origin so the rotation moves it.
    scene.primitives[0].center = {0.3, 0, 0};
    TemplateCloud cloud = bake_template(scene, 6000);
    Pose pose = Pose::rest(1);
    pose.local_rotations[0] = Quat::from_axis_angle({0, 0, 1}, kPi / 2);
    auto state = make_pose_state(scene, cloud, pose);
    HdqConfig cfg;

    Mat3 rot = to_matrix(pose.local_rotations[0]);
    Vec3 surface_can{0.8, 0, 0};           // +x pole of the canonical sphere
    Vec3 surface_world = rot * surface_can;  // known rigid image
    Vec3 n = surface_normal(surface_world, *state, cfg);
    Vec3 expected = rot * Vec3{1, 0, 0};
    CHECK(degrees(angle_between(n, expected)) < 0.5);
}

TEST_CASE("analytic surface normal matches blended-field differences") {
    PuppetScene scene = fixtures::two_capsule_scene();
    TemplateCloud cloud = bake_template(scene, 12000);
    Pose pose = fixtures::bent_pose();
    auto state = make_pose_state(scene, cloud, pose);
    HdqConfig cfg;
    FullField field{state.get(), &cfg, std::nullopt};

    Rng rng(55);
    const double h = 1e-3;
    double angle_sum = 0;
    int count = 0;
    while (count < 1000) {
        size_t i = size_t(rng.uniform() * double(state->posed.size()));
        Vec3 x = state->posed.positions[i];
        DistanceSample s = query(x, *state, cfg);
        if (!s.fine_evaluated || std::abs(s.d_tilde) >= 5e-3) continue;
        Vec3 n;
        try {
            n = surface_normal(x, *state, cfg);
        } catch (const Error&) {
            continue;
        }
        Vec3 fd;
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 dx;
            dx[axis] = h;
            fd[axis] = field(x + dx) - field(x - dx);
        }
        if (length(fd) < 1e-6) continue;
        angle_sum += degrees(angle_between(n, fd));
        ++count;
    }
    CHECK(angle_sum / count <= 2.0);
}

TEST_CASE("degenerate warp falls back to the coarse distance") {
    // Opposing half-turn rotations make the blended transform singular at
    // 50/50 weights.
    Skeleton skel = fixtures::two_bone_arm();
    Pose pose = Pose::rest(2);
    pose.local_rotations[1] = Quat::from_axis_angle({0, 0, 1}, kPi);
    BoneTransforms g = pose_transforms(skel, pose);
    WeightVector w{{0.5, 0.5}};
    CHECK_THROWS_AS(inverse_warp({0.4, 0.1, 0}, w, g), DegenerateWarpError);
}

TEST_CASE("misalignment robustness: tracing the bulged field still converges") {
    PuppetScene scene = fixtures::bent_fixture_scene();
    TemplateCloud cloud = bake_template(scene, 8000);
    Pose pose = fixtures::bent_pose();
    auto state = make_pose_state(scene, cloud, pose);
    HdqConfig cfg;
    TraceConfig tcfg;
    Camera cam = fixtures::bent_fixture_camera(96, 96);

    int hits = 0, converged = 0;
    for (int py = 0; py < cam.height; ++py)
        for (int px = 0; px < cam.width; ++px) {
            Ray ray = cam.pixel_ray(px, py);
            auto span = ray_aabb(ray, state->posed.bounds, tcfg.aabb_pad);
            if (!span) continue;
            ray.near = span->first;
            ray.far = span->second;
            Hit hit = intersect(ray, *state, cfg, tcfg);
            if (hit.hit) {
                ++hits;
                if (hit.residual <= 5e-3) ++converged;
            }
        }
    REQUIRE(hits > 500);
    CHECK(converged == hits);
}
