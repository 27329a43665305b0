#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "matlift/error.hpp"
#include "matlift/scene.hpp"

using namespace matlift;

namespace {

scene::Mesh parse(const std::string& text) {
  std::istringstream in(text);
  return scene::parse_obj(in, "test.obj");
}

ErrorCode code_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::kParse;
}

const char* kQuad = R"(# unit quad
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
usemtl paint
f 1 2 3 4
)";

}  // namespace

TEST_CASE("single quad triangulates into two triangles") {
  const auto mesh = parse(kQuad);
  CHECK(mesh.vertices.size() == 4);
  CHECK(mesh.triangles.size() == 2);
  CHECK(mesh.material_count == 1);
  CHECK(mesh.material_names == std::vector<std::string>{"paint"});
  CHECK_FALSE(mesh.has_uv());
  CHECK_NOTHROW(mesh.validate());
}

TEST_CASE("material ids follow first appearance") {
  const auto mesh = parse(R"(v 0 0 0
v 1 0 0
v 0 1 0
usemtl wood
f 1 2 3
usemtl metal
f 1 3 2
usemtl wood
f 2 1 3
usemtl glass
f 3 2 1
)");
  CHECK(mesh.material_names == std::vector<std::string>{"wood", "metal", "glass"});
  CHECK(mesh.material_ids == std::vector<int>{0, 1, 0, 2});
  CHECK(mesh.material_count == 3);
}

TEST_CASE("faces without usemtl get a default material") {
  const auto mesh = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK(mesh.material_count == 1);
  CHECK(mesh.material_ids == std::vector<int>{0});
}

TEST_CASE("texcoords and negative indices") {
  const auto mesh = parse(R"(v 0 0 0
v 1 0 0
v 0 1 0
vt 0 0
vt 1 0
vt 0 1
vn 0 0 1
f -3/-3/1 -2/-2/1 -1/-1/1
)");
  REQUIRE(mesh.has_uv());
  CHECK(mesh.uvs.size() == mesh.vertices.size());
  CHECK(mesh.triangles.size() == 1);
}

TEST_CASE("errors name the line") {
  std::string bad = std::string(kQuad) + "f 1 2 9\n";
  try {
    parse(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIndexOutOfRange);
    const std::string msg = e.what();
    CHECK(msg.find("test.obj:8") != std::string::npos);
    CHECK(msg.find("index out of range") != std::string::npos);
  }
  CHECK(code_of("v 0 0\n") == ErrorCode::kParse);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nf 1 2\n") == ErrorCode::kParse);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 x 3\n") == ErrorCode::kParse);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n") == ErrorCode::kIndexOutOfRange);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3\n") == ErrorCode::kParse);
  CHECK(code_of("usemtl\n") == ErrorCode::kParse);
}

TEST_CASE("save and reload preserves geometry and materials") {
  const auto mesh = demo::three_material_object();
  const auto path = std::filesystem::temp_directory_path() / "matlift_obj_roundtrip.obj";
  scene::save_obj(mesh, path);
  const auto back = scene::load_mesh(path);
  std::filesystem::remove(path);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.triangles.size() == mesh.triangles.size());
  CHECK(back.material_ids == mesh.material_ids);
  CHECK(back.material_names == mesh.material_names);
  CHECK(back.has_uv());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(norm(back.vertices[i] - mesh.vertices[i]) < 1e-9);
  }
  CHECK_THROWS_AS(scene::load_mesh("/nonexistent/file.obj"), Error);
}

TEST_CASE("unpaired texcoords split vertices per corner") {
  const auto mesh = parse(R"(v 0 0 0
v 1 0 0
v 0 1 0
v 1 1 0
vt 0 0
vt 1 0
vt 0 1
vt 1 1
vt 0.5 0.5
f 1/1 2/2 3/3
f 2/5 4/4 3/3
)");
  CHECK(mesh.vertices.size() == 5);
  CHECK(mesh.uvs.size() == 5);
  CHECK(mesh.triangles.size() == 2);
}
