#pragma once

// JSON scene and animation file parsing. The scene file carries the
// skeleton, primitives, materials, displacement and combine sections;
// animation files hold one pose per frame.

#include <fstream>

#include <json.hpp>

#include "hdq/camera.hpp"
#include "hdq/puppet.hpp"

namespace hdq {

using Json = nlohmann::json;

namespace detail {

inline Vec3 parse_vec3(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Quat parse_quat(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 4)
        throw ConfigError(std::string(what) + " must be [w, x, y, z]");
    return normalize(Quat{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                          j[3].get<double>()});
}

inline Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
inline Json quat_json(const Quat& q) { return Json::array({q.w, q.x, q.y, q.z}); }

}  // namespace detail

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline PuppetScene scene_from_json(const Json& j) {
    PuppetScene scene;
    if (!j.contains("skeleton") || !j["skeleton"].contains("bones"))
        throw ConfigError("scene file needs a skeleton.bones section");

    std::vector<Bone> bones;
    for (const Json& bj : j["skeleton"]["bones"]) {
        Bone bone;
        bone.parent = bj.value("parent", -1);
        bone.head = detail::parse_vec3(bj.at("head"), "bone head");
        if (bj.contains("tail")) bone.tail = detail::parse_vec3(bj["tail"], "bone tail");
        else bone.tail = bone.head;
        if (bj.contains("rest")) bone.rest = detail::parse_quat(bj["rest"], "bone rest");
        bone.name = bj.value("name", "");
        bones.push_back(bone);
    }
    scene.skeleton = Skeleton(std::move(bones));

    if (!j.contains("primitives")) throw ConfigError("scene file needs a primitives section");
    for (const Json& pj : j["primitives"]) {
        CanonicalPrimitive prim;
        std::string kind = pj.value("kind", "sphere");
        if (kind == "sphere") {
            prim.kind = PrimitiveKind::Sphere;
            prim.center = detail::parse_vec3(pj.at("center"), "sphere center");
        } else if (kind == "capsule") {
            prim.kind = PrimitiveKind::Capsule;
            prim.a = detail::parse_vec3(pj.at("a"), "capsule a");
            prim.b = detail::parse_vec3(pj.at("b"), "capsule b");
        } else if (kind == "rounded-box") {
            prim.kind = PrimitiveKind::RoundedBox;
            prim.center = detail::parse_vec3(pj.at("center"), "box center");
            prim.half_extents = detail::parse_vec3(pj.at("half_extents"), "box half extents");
        } else {
            throw ConfigError("unknown primitive kind: " + kind);
        }
        prim.radius = pj.value("radius", 0.1);
        prim.bone = pj.value("bone", 0);
        prim.name = pj.value("name", "");
        if (pj.contains("material")) {
            const Json& mj = pj["material"];
            if (mj.contains("albedo")) prim.material.albedo = detail::parse_vec3(mj["albedo"], "albedo");
            prim.material.roughness = mj.value("roughness", 0.5);
            prim.material.specular = mj.value("specular", true);
        }
        scene.primitives.push_back(prim);
    }

    if (j.contains("combine")) {
        std::string rule = j["combine"].value("rule", "hard");
        if (rule == "hard") scene.combine = CombineRule::HardMin;
        else if (rule == "smooth") scene.combine = CombineRule::SmoothMin;
        else throw ConfigError("combine rule must be hard or smooth");
        scene.smooth_k = j["combine"].value("k", 0.02);
    }

    if (j.contains("displacement")) {
        const Json& dj = j["displacement"];
        std::string kind = dj.value("kind", "zero");
        if (kind == "zero") scene.displacement_field.kind = DisplacementKind::Zero;
        else if (kind == "bulge") scene.displacement_field.kind = DisplacementKind::AnalyticBulge;
        else throw ConfigError("displacement kind must be zero or bulge");
        scene.displacement_field.amplitude = dj.value("amplitude", 0.0);
        if (dj.contains("center"))
            scene.displacement_field.center = detail::parse_vec3(dj["center"], "bulge center");
        scene.displacement_field.falloff = dj.value("falloff", 0.1);
    }

    scene.validate();
    return scene;
}

inline Json scene_to_json(const PuppetScene& scene) {
    Json j;
    Json bones = Json::array();
    for (const Bone& b : scene.skeleton.bones()) {
        Json bj;
        bj["parent"] = b.parent;
        bj["head"] = detail::vec3_json(b.head);
        bj["tail"] = detail::vec3_json(b.tail);
        bj["rest"] = detail::quat_json(b.rest);
        if (!b.name.empty()) bj["name"] = b.name;
        bones.push_back(bj);
    }
    j["skeleton"]["bones"] = bones;

    Json prims = Json::array();
    for (const CanonicalPrimitive& p : scene.primitives) {
        Json pj;
        switch (p.kind) {
            case PrimitiveKind::Sphere:
                pj["kind"] = "sphere";
                pj["center"] = detail::vec3_json(p.center);
                break;
            case PrimitiveKind::Capsule:
                pj["kind"] = "capsule";
                pj["a"] = detail::vec3_json(p.a);
                pj["b"] = detail::vec3_json(p.b);
                break;
            case PrimitiveKind::RoundedBox:
                pj["kind"] = "rounded-box";
                pj["center"] = detail::vec3_json(p.center);
                pj["half_extents"] = detail::vec3_json(p.half_extents);
                break;
        }
        pj["radius"] = p.radius;
        pj["bone"] = p.bone;
        if (!p.name.empty()) pj["name"] = p.name;
        pj["material"]["albedo"] = detail::vec3_json(p.material.albedo);
        pj["material"]["roughness"] = p.material.roughness;
        pj["material"]["specular"] = p.material.specular;
        prims.push_back(pj);
    }
    j["primitives"] = prims;

    j["combine"]["rule"] = scene.combine == CombineRule::HardMin ? "hard" : "smooth";
    j["combine"]["k"] = scene.smooth_k;

    Json dj;
    dj["kind"] = scene.displacement_field.kind == DisplacementKind::Zero ? "zero" : "bulge";
    dj["amplitude"] = scene.displacement_field.amplitude;
    dj["center"] = detail::vec3_json(scene.displacement_field.center);
    dj["falloff"] = scene.displacement_field.falloff;
    j["displacement"] = dj;
    return j;
}

inline PuppetScene load_scene(const std::string& path) {
    return scene_from_json(load_json_file(path));
}

inline void save_scene(const std::string& path, const PuppetScene& scene) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << scene_to_json(scene).dump(2) << "\n";
}

// Animation: {"frames": [{"rotations": [[w,x,y,z], ...], "root_translation": [x,y,z]}, ...]}
inline std::vector<Pose> load_animation(const std::string& path, size_t bone_count) {
    Json j = load_json_file(path);
    if (!j.contains("frames") || !j["frames"].is_array())
        throw ConfigError("animation file needs a frames array: " + path);
    std::vector<Pose> poses;
    int frame = 0;
    for (const Json& fj : j["frames"]) {
        Pose pose;
        pose.frame = frame++;
        if (fj.contains("rotations"))
            for (const Json& qj : fj["rotations"])
                pose.local_rotations.push_back(detail::parse_quat(qj, "pose rotation"));
        if (pose.local_rotations.empty())
            pose.local_rotations.assign(bone_count, Quat::identity());
        if (pose.local_rotations.size() != bone_count)
            throw ConfigError("animation frame has wrong bone count: " + path);
        if (fj.contains("root_translation"))
            pose.root_translation = detail::parse_vec3(fj["root_translation"], "root translation");
        poses.push_back(pose);
    }
    if (poses.empty()) throw ConfigError("animation file has no frames: " + path);
    return poses;
}

inline Camera camera_from_json(const Json& j) {
    Camera cam;
    if (j.contains("position")) cam.position = detail::parse_vec3(j["position"], "camera position");
    if (j.contains("look_at")) cam.look_at = detail::parse_vec3(j["look_at"], "camera look_at");
    if (j.contains("up")) cam.up = detail::parse_vec3(j["up"], "camera up");
    cam.vfov_deg = j.value("fov_deg", 40.0);
    cam.width = j.value("width", 256);
    cam.height = j.value("height", 256);
    cam.validate();
    return cam;
}

}  // namespace hdq
