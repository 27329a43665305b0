#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>

#include "matlift/error.hpp"
#include "matlift/scene.hpp"

namespace matlift::scene {

namespace {

struct FaceCorner {
  long v = 0;
  long vt = 0;  // 0 = absent
};

[[noreturn]] void parse_error(const std::string& source, std::size_t line, ErrorCode code,
                              const std::string& what) {
  fail(code, source + ":" + std::to_string(line) + ": " + what);
}

// OBJ indices are 1-based; negative values count back from the end.
long resolve_index(long raw, std::size_t count, const std::string& source, std::size_t line) {
  long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
  if (raw == 0 || idx < 0 || idx >= static_cast<long>(count)) {
    parse_error(source, line, ErrorCode::kIndexOutOfRange,
                "index out of range (" + std::to_string(raw) + ", have " +
                    std::to_string(count) + ")");
  }
  return idx;
}

FaceCorner parse_corner(std::string_view token, const std::string& source, std::size_t line) {
  FaceCorner c;
  const auto parse_long = [&](std::string_view s, long& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      parse_error(source, line, ErrorCode::kParse, "bad face index '" + std::string(token) + "'");
    }
    return true;
  };
  const auto slash = token.find('/');
  if (!parse_long(token.substr(0, slash), c.v)) {
    parse_error(source, line, ErrorCode::kParse, "face corner without vertex index");
  }
  if (slash != std::string_view::npos) {
    const auto rest = token.substr(slash + 1);
    parse_long(rest.substr(0, rest.find('/')), c.vt);
  }
  return c;
}

}  // namespace

Mesh parse_obj(std::istream& in, const std::string& source) {
  std::vector<Vec3> positions;
  std::vector<Vec2> texcoords;
  std::map<std::string, int> material_index;
  std::vector<std::string> material_names;
  int current_material = -1;

  struct Face {
    std::vector<FaceCorner> corners;
    int material;
    std::size_t line;
  };
  std::vector<Face> faces;

  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) parse_error(source, line_no, ErrorCode::kParse, "bad vertex");
      positions.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ls >> t.x >> t.y)) parse_error(source, line_no, ErrorCode::kParse, "bad texcoord");
      texcoords.push_back(t);
    } else if (tag == "usemtl") {
      std::string name;
      if (!(ls >> name)) parse_error(source, line_no, ErrorCode::kParse, "usemtl without name");
      auto [it, inserted] = material_index.emplace(name, static_cast<int>(material_names.size()));
      if (inserted) material_names.push_back(name);
      current_material = it->second;
    } else if (tag == "f") {
      Face f{{}, current_material, line_no};
      std::string tok;
      while (ls >> tok) f.corners.push_back(parse_corner(tok, source, line_no));
      if (f.corners.size() < 3) {
        parse_error(source, line_no, ErrorCode::kParse, "face needs at least 3 vertices");
      }
      if (f.material < 0) {
        auto [it, inserted] =
            material_index.emplace("default", static_cast<int>(material_names.size()));
        if (inserted) material_names.push_back("default");
        current_material = f.material = it->second;
      }
      faces.push_back(std::move(f));
    }
    // vn, o, g, s, mtllib and anything else are ignored.
  }

  bool any_uv = false;
  bool all_uv = true;
  for (const auto& f : faces) {
    for (const auto& c : f.corners) {
      any_uv |= c.vt != 0;
      all_uv &= c.vt != 0;
    }
  }
  if (any_uv && !all_uv) {
    fail(ErrorCode::kParse, source + ": faces mix corners with and without texcoords");
  }

  Mesh mesh;
  mesh.material_names = material_names;
  mesh.material_count = static_cast<int>(material_names.size());

  // Files where every corner pairs v with the same vt index keep their vertex order.
  bool paired = any_uv && positions.size() == texcoords.size();
  for (const auto& f : faces) {
    for (const auto& c : f.corners) {
      if (!paired) break;
      paired = resolve_index(c.v, positions.size(), source, f.line) ==
               resolve_index(c.vt, texcoords.size(), source, f.line);
    }
  }
  if (!any_uv || paired) {
    mesh.vertices = positions;
    if (paired) mesh.uvs = texcoords;
  }
  // Otherwise every distinct (v, vt) pair becomes its own vertex.
  std::unordered_map<std::uint64_t, std::uint32_t> corner_vertex;
  const auto vertex_for = [&](const FaceCorner& c, std::size_t line) -> std::uint32_t {
    const long v = resolve_index(c.v, positions.size(), source, line);
    if (!any_uv || paired) return static_cast<std::uint32_t>(v);
    const long t = resolve_index(c.vt, texcoords.size(), source, line);
    const std::uint64_t key = (static_cast<std::uint64_t>(v) << 32) | static_cast<std::uint64_t>(t);
    auto [it, inserted] =
        corner_vertex.emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) {
      mesh.vertices.push_back(positions[v]);
      mesh.uvs.push_back(texcoords[t]);
    }
    return it->second;
  };

  for (const auto& f : faces) {
    const std::uint32_t a = vertex_for(f.corners[0], f.line);
    for (std::size_t i = 1; i + 1 < f.corners.size(); ++i) {
      const std::uint32_t b = vertex_for(f.corners[i], f.line);
      const std::uint32_t c = vertex_for(f.corners[i + 1], f.line);
      mesh.triangles.push_back({a, b, c});
      mesh.material_ids.push_back(f.material);
    }
  }
  mesh.validate();
  return mesh;
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open mesh " + path.string());
  return parse_obj(in, path.string());
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write mesh " + path.string());
  out.precision(9);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : mesh.uvs) out << "vt " << t.x << ' ' << t.y << '\n';
  // Grouped by material so ids survive a reload (ids follow first appearance).
  std::vector<std::size_t> order(mesh.triangles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mesh.material_ids[a] < mesh.material_ids[b];
  });
  int current = -1;
  for (const std::size_t i : order) {
    if (mesh.material_ids[i] != current) {
      current = mesh.material_ids[i];
      const auto& name = static_cast<std::size_t>(current) < mesh.material_names.size()
                             ? mesh.material_names[current]
                             : "material_" + std::to_string(current);
      out << "usemtl " << name << '\n';
    }
    out << 'f';
    for (auto idx : mesh.triangles[i]) {
      out << ' ' << idx + 1;
      if (mesh.has_uv()) out << '/' << idx + 1;
    }
    out << '\n';
  }
}

}  // namespace matlift::scene
