#pragma once

#include "matlift/geometry.hpp"
#include "matlift/scene.hpp"

namespace matlift::demo {

/// Texture-space rectangle a primitive's chart is mapped into.
struct UvRect {
  double u0 = 0.0, v0 = 0.0, u1 = 1.0, v1 = 1.0;
};

/// Primitives append to `mesh` with the given material id; material_count is
/// raised to cover it.
void add_box(scene::Mesh& mesh, const Vec3& lo, const Vec3& hi, int material, const UvRect& uv = {});
void add_sphere(scene::Mesh& mesh, const Vec3& center, double radius, int material,
                int segments = 48, int rings = 24, const UvRect& uv = {});
void add_torus(scene::Mesh& mesh, const Vec3& center, double major, double minor, int material,
               int segments = 64, int sides = 16, const UvRect& uv = {});

/// Box pedestal (material 0), sphere (1) and a torus ring around the sphere (2),
/// each with its own UV chart.
scene::Mesh three_material_object();

/// UV sphere with a single material.
scene::Mesh single_material_sphere();

}  // namespace matlift::demo
