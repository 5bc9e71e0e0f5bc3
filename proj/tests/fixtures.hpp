#pragma once

// Shared test fixtures: puppets, poses, and cameras used across suites.

#include "hdq/camera.hpp"
#include "hdq/puppet.hpp"

namespace fixtures {

using namespace hdq;

inline Skeleton single_bone() {
    return Skeleton({Bone{-1, {0, 0, 0}, Quat::identity(), {0.4, 0, 0}, "root"}});
}

inline Skeleton two_bone_arm() {
    std::vector<Bone> bones;
    bones.push_back({-1, {0, 0, 0}, Quat::identity(), {0.4, 0, 0}, "upper"});
    bones.push_back({0, {0.4, 0, 0}, Quat::identity(), {0.8, 0, 0}, "fore"});
    return Skeleton(std::move(bones));
}

inline PuppetScene sphere_scene(double radius = 0.5, Vec3 albedo = {0.5, 0.5, 0.5},
                                bool specular = false) {
    PuppetScene scene;
    scene.skeleton = single_bone();
    CanonicalPrimitive prim;
    prim.kind = PrimitiveKind::Sphere;
    prim.center = {0, 0, 0};
    prim.radius = radius;
    prim.bone = 0;
    prim.material.albedo = albedo;
    prim.material.roughness = 0.5;
    prim.material.specular = specular;
    scene.primitives.push_back(prim);
    return scene;
}

// Two capsules on a two-bone chain; the standard articulated fixture.
inline PuppetScene two_capsule_scene(double radius = 0.07) {
    PuppetScene scene;
    scene.skeleton = two_bone_arm();
    CanonicalPrimitive upper;
    upper.kind = PrimitiveKind::Capsule;
    upper.a = {0, 0, 0};
    upper.b = {0.4, 0, 0};
    upper.radius = radius;
    upper.bone = 0;
    upper.material.albedo = {0.6, 0.45, 0.35};
    upper.material.roughness = 0.4;
    CanonicalPrimitive fore = upper;
    fore.a = {0.4, 0, 0};
    fore.b = {0.8, 0, 0};
    fore.bone = 1;
    fore.material.albedo = {0.35, 0.45, 0.6};
    scene.primitives = {upper, fore};
    return scene;
}

// The bent-puppet accuracy fixture: 90 degree elbow, rotated root, and the
// analytic bulge standing in for template/SDF misalignment.
inline PuppetScene bent_fixture_scene() {
    PuppetScene scene = two_capsule_scene();
    scene.displacement_field.kind = DisplacementKind::AnalyticBulge;
    scene.displacement_field.amplitude = 0.02;
    scene.displacement_field.center = {0.6, 0, 0};
    scene.displacement_field.falloff = 0.15;
    return scene;
}

inline Pose bent_pose() {
    Pose pose = Pose::rest(2);
    pose.local_rotations[0] = Quat::from_axis_angle({0, 0, 1}, 0.4);
    pose.local_rotations[1] = Quat::from_axis_angle({0, 0, 1}, kPi / 2);
    return pose;
}

inline Camera bent_fixture_camera(int width = 256, int height = 256) {
    Camera cam;
    cam.position = {0.45, 0.35, 1.1};
    cam.look_at = {0.42, 0.25, 0};
    cam.up = {0, 1, 0};
    cam.vfov_deg = 45;
    cam.width = width;
    cam.height = height;
    return cam;
}

// Sphere hovering above a thin ground slab, for shadow tests.
inline PuppetScene sphere_over_ground() {
    PuppetScene scene;
    scene.skeleton = single_bone();
    CanonicalPrimitive ball;
    ball.kind = PrimitiveKind::Sphere;
    ball.center = {0, 0, 0.8};  // 0.5 gap above the ground plane z = 0
    ball.radius = 0.3;
    ball.bone = 0;
    ball.material.albedo = {0.6, 0.6, 0.6};
    CanonicalPrimitive ground;
    ground.kind = PrimitiveKind::RoundedBox;
    ground.center = {0, 0, -0.06};
    ground.half_extents = {0.9, 0.9, 0.04};
    ground.radius = 0.02;
    ground.bone = 0;
    ground.material.albedo = {0.7, 0.7, 0.7};
    scene.primitives = {ball, ground};
    return scene;
}

}  // namespace fixtures
