#include "wsl3d/cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

namespace wsl3d {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool blank_or_comment(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

[[noreturn]] void fail_at_line(const std::filesystem::path& path, std::size_t line,
                               std::string_view what) {
  throw InputError(fmt::format("{}:{}: {}", path.string(), line, what));
}

double parse_double(std::string_view token, const std::filesystem::path& path,
                    std::size_t line) {
  double value = 0.0;
  // from_chars rejects a leading '+'.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail_at_line(path, line, fmt::format("cannot parse number '{}'", token));
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view token, const std::filesystem::path& path, std::size_t line) {
  Int value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail_at_line(path, line, fmt::format("cannot parse integer '{}'", token));
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

// ---------------------------------------------------------------------------
// xyz / xyzrgb

PointCloud load_xyz(const std::filesystem::path& path, bool with_color) {
  auto in = open_in(path);
  PointCloud cloud;
  cloud.scene_id = path.stem().string();
  const std::size_t expected = with_color ? 6 : 3;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != expected) {
      if (tokens.size() == 3 || tokens.size() == 6) {
        fail_at_line(path, line_no,
                     fmt::format("color channel count mismatch: expected {} values, got {}",
                                 expected, tokens.size()));
      }
      fail_at_line(path, line_no,
                   fmt::format("expected {} values, got {}", expected, tokens.size()));
    }
    Vec3 p(parse_double(tokens[0], path, line_no), parse_double(tokens[1], path, line_no),
           parse_double(tokens[2], path, line_no));
    if (!p.allFinite()) fail_at_line(path, line_no, "non-finite coordinate");
    cloud.points.push_back(p);
    if (with_color) {
      Vec3 c(parse_double(tokens[3], path, line_no), parse_double(tokens[4], path, line_no),
             parse_double(tokens[5], path, line_no));
      if (!c.allFinite()) fail_at_line(path, line_no, "non-finite color");
      // Byte-valued colors are accepted and normalized.
      if (c.maxCoeff() > 1.0) c /= 255.0;
      cloud.colors.push_back(c);
    }
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

bool parse_ply_type(std::string_view name, PlyType& out) {
  static const std::pair<std::string_view, PlyType> table[] = {
      {"char", PlyType::Int8},     {"int8", PlyType::Int8},       {"uchar", PlyType::UInt8},
      {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},     {"int16", PlyType::Int16},
      {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},   {"int", PlyType::Int32},
      {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},     {"uint32", PlyType::UInt32},
      {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
      {"float64", PlyType::Float64}};
  for (const auto& [n, t] : table) {
    if (n == name) {
      out = t;
      return true;
    }
  }
  return false;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  bool has_list = false;
};

struct PlyHeader {
  CloudFormat format = CloudFormat::PlyAscii;
  std::vector<PlyElement> elements;
  std::size_t header_lines = 0;
  std::size_t header_bytes = 0;
};

PlyHeader read_ply_header(std::istream& in, const std::filesystem::path& path) {
  PlyHeader header;
  std::string line;
  std::size_t line_no = 0;
  bool saw_format = false;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    header.header_bytes += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != "ply") fail_at_line(path, 1, "malformed header: missing 'ply' magic");
  while (true) {
    if (!next()) fail_at_line(path, line_no, "malformed header: missing 'end_header'");
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() != 3) fail_at_line(path, line_no, "malformed header: bad format line");
      if (tokens[1] == "ascii") {
        header.format = CloudFormat::PlyAscii;
      } else if (tokens[1] == "binary_little_endian") {
        header.format = CloudFormat::PlyBinaryLE;
      } else {
        fail_at_line(path, line_no,
                     fmt::format("malformed header: unsupported format '{}'", tokens[1]));
      }
      saw_format = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) fail_at_line(path, line_no, "malformed header: bad element line");
      PlyElement e;
      e.name = std::string(tokens[1]);
      e.count = parse_int<std::size_t>(tokens[2], path, line_no);
      header.elements.push_back(std::move(e));
    } else if (tokens[0] == "property") {
      if (header.elements.empty()) {
        fail_at_line(path, line_no, "malformed header: property before element");
      }
      auto& e = header.elements.back();
      if (tokens.size() >= 2 && tokens[1] == "list") {
        e.has_list = true;
        continue;
      }
      PlyProperty prop;
      if (tokens.size() != 3 || !parse_ply_type(tokens[1], prop.type)) {
        fail_at_line(path, line_no, "malformed header: bad property line");
      }
      prop.name = std::string(tokens[2]);
      e.properties.push_back(std::move(prop));
    } else {
      fail_at_line(path, line_no,
                   fmt::format("malformed header: unexpected keyword '{}'", tokens[0]));
    }
  }
  if (!saw_format) fail_at_line(path, line_no, "malformed header: missing format line");
  header.header_lines = line_no;
  return header;
}

double read_binary_value(const char* data, PlyType type) {
  switch (type) {
    case PlyType::Int8: { std::int8_t v; std::memcpy(&v, data, 1); return v; }
    case PlyType::UInt8: { std::uint8_t v; std::memcpy(&v, data, 1); return v; }
    case PlyType::Int16: { std::int16_t v; std::memcpy(&v, data, 2); return v; }
    case PlyType::UInt16: { std::uint16_t v; std::memcpy(&v, data, 2); return v; }
    case PlyType::Int32: { std::int32_t v; std::memcpy(&v, data, 4); return v; }
    case PlyType::UInt32: { std::uint32_t v; std::memcpy(&v, data, 4); return v; }
    case PlyType::Float32: { float v; std::memcpy(&v, data, 4); return v; }
    case PlyType::Float64: { double v; std::memcpy(&v, data, 8); return v; }
  }
  return 0.0;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
};

VertexLayout vertex_layout(const PlyElement& e, const std::filesystem::path& path,
                           std::size_t header_lines) {
  VertexLayout layout;
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    const auto& n = e.properties[i].name;
    const int idx = static_cast<int>(i);
    if (n == "x") layout.x = idx;
    else if (n == "y") layout.y = idx;
    else if (n == "z") layout.z = idx;
    else if (n == "red" || n == "r") layout.r = idx;
    else if (n == "green" || n == "g") layout.g = idx;
    else if (n == "blue" || n == "b") layout.b = idx;
  }
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
    fail_at_line(path, header_lines, "malformed header: vertex element lacks x/y/z");
  }
  const int colors = (layout.r >= 0) + (layout.g >= 0) + (layout.b >= 0);
  if (colors != 0 && colors != 3) {
    fail_at_line(path, header_lines,
                 fmt::format("color channel count mismatch: {} of 3 channels declared", colors));
  }
  if (e.has_list) {
    fail_at_line(path, header_lines, "malformed header: list property on vertex element");
  }
  return layout;
}

double color_scale(PlyType type) {
  switch (type) {
    case PlyType::UInt8: return 1.0 / 255.0;
    case PlyType::UInt16: return 1.0 / 65535.0;
    default: return 1.0;
  }
}

PointCloud load_ply(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  const PlyHeader header = read_ply_header(in, path);
  PointCloud cloud;
  cloud.scene_id = path.stem().string();

  std::size_t vertex_pos = header.elements.size();
  for (std::size_t i = 0; i < header.elements.size(); ++i) {
    if (header.elements[i].name == "vertex") {
      vertex_pos = i;
      break;
    }
  }
  if (vertex_pos == header.elements.size()) {
    fail_at_line(path, header.header_lines, "malformed header: no vertex element");
  }
  // Faces and other elements may follow, but anything preceding the vertices
  // would need skipping which this loader does not do.
  if (vertex_pos != 0) {
    fail_at_line(path, header.header_lines, "malformed header: vertex must be the first element");
  }
  const PlyElement& vertex = header.elements[vertex_pos];
  const VertexLayout layout = vertex_layout(vertex, path, header.header_lines);
  const bool with_color = layout.r >= 0;
  cloud.points.reserve(vertex.count);
  if (with_color) cloud.colors.reserve(vertex.count);

  if (header.format == CloudFormat::PlyAscii) {
    std::string line;
    std::size_t line_no = header.header_lines;
    std::size_t read = 0;
    while (read < vertex.count) {
      if (!std::getline(in, line)) {
        fail_at_line(path, line_no + 1,
                     fmt::format("unexpected end of file after {} of {} vertices", read,
                                 vertex.count));
      }
      ++line_no;
      const auto tokens = split_ws(line);
      if (tokens.empty()) continue;
      if (tokens.size() != vertex.properties.size()) {
        fail_at_line(path, line_no,
                     fmt::format("expected {} vertex values, got {}", vertex.properties.size(),
                                 tokens.size()));
      }
      Vec3 p(parse_double(tokens[layout.x], path, line_no),
             parse_double(tokens[layout.y], path, line_no),
             parse_double(tokens[layout.z], path, line_no));
      if (!p.allFinite()) fail_at_line(path, line_no, "non-finite coordinate");
      cloud.points.push_back(p);
      if (with_color) {
        Vec3 c(parse_double(tokens[layout.r], path, line_no) *
                   color_scale(vertex.properties[layout.r].type),
               parse_double(tokens[layout.g], path, line_no) *
                   color_scale(vertex.properties[layout.g].type),
               parse_double(tokens[layout.b], path, line_no) *
                   color_scale(vertex.properties[layout.b].type));
        cloud.colors.push_back(c);
      }
      ++read;
    }
    return cloud;
  }

  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (const auto& prop : vertex.properties) {
    offsets.push_back(stride);
    stride += ply_size(prop.type);
  }
  std::vector<char> buffer(stride * vertex.count);
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != buffer.size()) {
    throw InputError(fmt::format("{}: byte {}: truncated vertex data ({} of {} bytes)",
                                 path.string(), header.header_bytes + got, got, buffer.size()));
  }
  auto value = [&](std::size_t v, int prop) {
    return read_binary_value(buffer.data() + v * stride + offsets[prop],
                             vertex.properties[prop].type);
  };
  for (std::size_t v = 0; v < vertex.count; ++v) {
    Vec3 p(value(v, layout.x), value(v, layout.y), value(v, layout.z));
    if (!p.allFinite()) {
      throw InputError(fmt::format("{}: byte {}: non-finite coordinate in vertex {}",
                                   path.string(), header.header_bytes + v * stride, v));
    }
    cloud.points.push_back(p);
    if (with_color) {
      cloud.colors.emplace_back(value(v, layout.r) * color_scale(vertex.properties[layout.r].type),
                                value(v, layout.g) * color_scale(vertex.properties[layout.g].type),
                                value(v, layout.b) * color_scale(vertex.properties[layout.b].type));
    }
  }
  return cloud;
}

std::uint8_t to_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

void write_ply(std::ostream& out, const std::vector<Vec3>& points,
               const std::vector<std::array<std::uint8_t, 3>>& colors, bool binary) {
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (!colors.empty()) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "end_header\n";
  if (binary) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const float xyz[3] = {static_cast<float>(points[i].x()), static_cast<float>(points[i].y()),
                            static_cast<float>(points[i].z())};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      if (!colors.empty()) out.write(reinterpret_cast<const char*>(colors[i].data()), 3);
    }
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) {
      out << fmt::format("{:.6f} {:.6f} {:.6f}", points[i].x(), points[i].y(), points[i].z());
      if (!colors.empty()) {
        out << fmt::format(" {} {} {}", colors[i][0], colors[i][1], colors[i][2]);
      }
      out << '\n';
    }
  }
}

}  // namespace

void PointCloud::validate() const {
  if (!colors.empty() && colors.size() != points.size()) {
    throw InputError(fmt::format("color count {} does not match point count {}", colors.size(),
                                 points.size()));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw InputError(fmt::format("point {} has a non-finite coordinate", i));
    }
  }
}

void WeakLabels::validate() const {
  if (num_classes <= 0) throw InputError("weak labels: class count must be positive");
  std::unordered_set<std::size_t> seen;
  for (const auto& e : entries) {
    if (e.class_id < 0 || e.class_id >= num_classes) {
      throw InputError(fmt::format("weak labels: class {} of point {} outside [0, {})", e.class_id,
                                   e.point_index, num_classes));
    }
    if (!seen.insert(e.point_index).second) {
      throw InputError(fmt::format("weak labels: duplicate point index {}", e.point_index));
    }
  }
}

void WeakLabels::check_against(std::size_t num_points) const {
  for (const auto& e : entries) {
    if (e.point_index >= num_points) {
      throw InputError(fmt::format("weak labels: point index {} out of range for {} points",
                                   e.point_index, num_points));
    }
  }
}

CloudFormat parse_cloud_format(const std::string& name) {
  if (name == "ply-ascii") return CloudFormat::PlyAscii;
  if (name == "ply-binary-le") return CloudFormat::PlyBinaryLE;
  if (name == "xyz") return CloudFormat::Xyz;
  if (name == "xyzrgb") return CloudFormat::XyzRgb;
  throw InputError(fmt::format("unknown cloud format '{}'", name));
}

std::string to_string(CloudFormat format) {
  switch (format) {
    case CloudFormat::PlyAscii: return "ply-ascii";
    case CloudFormat::PlyBinaryLE: return "ply-binary-le";
    case CloudFormat::Xyz: return "xyz";
    case CloudFormat::XyzRgb: return "xyzrgb";
  }
  return "unknown";
}

CloudFormat detect_cloud_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".xyz") return CloudFormat::Xyz;
  if (ext == ".xyzrgb") return CloudFormat::XyzRgb;
  if (ext == ".ply") {
    auto in = open_in(path, true);
    return read_ply_header(in, path).format;
  }
  throw InputError(fmt::format("cannot infer cloud format of '{}'", path.string()));
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  PointCloud cloud;
  switch (format) {
    case CloudFormat::Xyz: cloud = load_xyz(path, false); break;
    case CloudFormat::XyzRgb: cloud = load_xyz(path, true); break;
    case CloudFormat::PlyAscii:
    case CloudFormat::PlyBinaryLE: {
      auto in = open_in(path, true);
      const auto declared = read_ply_header(in, path).format;
      if (declared != format) {
        throw InputError(fmt::format("{}: header declares {} but {} was requested", path.string(),
                                     to_string(declared), to_string(format)));
      }
      cloud = load_ply(path);
      break;
    }
  }
  cloud.validate();
  return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path) {
  return load_cloud(path, detect_cloud_format(path));
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  cloud.validate();
  switch (format) {
    case CloudFormat::Xyz:
    case CloudFormat::XyzRgb: {
      if (format == CloudFormat::XyzRgb && !cloud.has_colors()) {
        throw InputError("xyzrgb output requires colors");
      }
      auto out = open_out(path);
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << fmt::format("{:.6f} {:.6f} {:.6f}", p.x(), p.y(), p.z());
        if (format == CloudFormat::XyzRgb) {
          const auto& c = cloud.colors[i];
          out << fmt::format(" {:.6f} {:.6f} {:.6f}", c.x(), c.y(), c.z());
        }
        out << '\n';
      }
      break;
    }
    case CloudFormat::PlyAscii:
    case CloudFormat::PlyBinaryLE: {
      std::vector<std::array<std::uint8_t, 3>> colors;
      colors.reserve(cloud.colors.size());
      for (const auto& c : cloud.colors) colors.push_back({to_byte(c.x()), to_byte(c.y()), to_byte(c.z())});
      auto out = open_out(path, true);
      write_ply(out, cloud.points, colors, format == CloudFormat::PlyBinaryLE);
      break;
    }
  }
}

WeakLabels load_weak_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  WeakLabels weak;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::unordered_set<std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (!saw_header) {
      if (tokens.size() != 2 || tokens[0] != "classes") {
        fail_at_line(path, line_no, "expected header 'classes <C>'");
      }
      weak.num_classes = parse_int<int>(tokens[1], path, line_no);
      if (weak.num_classes <= 0) fail_at_line(path, line_no, "class count must be positive");
      saw_header = true;
      continue;
    }
    if (tokens.size() != 2) fail_at_line(path, line_no, "expected 'point_index class_id'");
    WeakLabel entry;
    entry.point_index = parse_int<std::size_t>(tokens[0], path, line_no);
    entry.class_id = parse_int<int>(tokens[1], path, line_no);
    if (entry.class_id < 0 || entry.class_id >= weak.num_classes) {
      fail_at_line(path, line_no,
                   fmt::format("class {} outside [0, {})", entry.class_id, weak.num_classes));
    }
    if (!seen.insert(entry.point_index).second) {
      fail_at_line(path, line_no, fmt::format("duplicate point index {}", entry.point_index));
    }
    weak.entries.push_back(entry);
  }
  if (!saw_header) throw InputError(fmt::format("{}: missing 'classes <C>' header", path.string()));
  if (weak.entries.empty()) {
    throw InputError(fmt::format("{}: no weak labels; at least one labeled point is required",
                                 path.string()));
  }
  return weak;
}

void save_weak_labels(const WeakLabels& weak, const std::filesystem::path& path) {
  weak.validate();
  auto out = open_out(path);
  out << "classes " << weak.num_classes << '\n';
  for (const auto& e : weak.entries) out << e.point_index << ' ' << e.class_id << '\n';
}

std::array<std::uint8_t, 3> palette_color(int semantic_label) {
  if (semantic_label < 0) return {128, 128, 128};
  static constexpr std::array<std::array<std::uint8_t, 3>, 20> kPalette = {{
      {174, 199, 232}, {152, 223, 138}, {31, 119, 180},  {255, 187, 120}, {188, 189, 34},
      {140, 86, 75},   {255, 152, 150}, {214, 39, 40},   {197, 176, 213}, {148, 103, 189},
      {196, 156, 148}, {23, 190, 207},  {247, 182, 210}, {219, 219, 141}, {255, 127, 14},
      {158, 218, 229}, {44, 160, 44},   {112, 128, 144}, {227, 119, 194}, {82, 84, 163},
  }};
  if (static_cast<std::size_t>(semantic_label) < kPalette.size()) return kPalette[semantic_label];
  // Knuth multiplicative hash for labels beyond the table.
  const std::uint32_t h = static_cast<std::uint32_t>(semantic_label) * 2654435761u;
  return {static_cast<std::uint8_t>(h >> 24), static_cast<std::uint8_t>(h >> 16),
          static_cast<std::uint8_t>(h >> 8)};
}

void write_labeled_cloud(const PointCloud& cloud, const LabelMatrix& labels,
                         const std::filesystem::path& path, LabelOutput mode) {
  if (labels.size() != cloud.size()) {
    throw InputError(fmt::format("label count {} does not match point count {}", labels.size(),
                                 cloud.size()));
  }
  if (mode == LabelOutput::LabelsText) {
    auto out = open_out(path);
    std::string buffer;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      fmt::format_to(std::back_inserter(buffer), "{} {}\n", labels.cluster_id[i],
                     labels.semantic_label[i]);
    }
    out << buffer;
    if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
    return;
  }
  std::vector<std::array<std::uint8_t, 3>> colors;
  colors.reserve(cloud.size());
  for (int label : labels.semantic_label) colors.push_back(palette_color(label));
  auto out = open_out(path, true);
  write_ply(out, cloud.points, colors, true);
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

LabelMatrix read_labels_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  LabelMatrix labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 2) fail_at_line(path, line_no, "expected 'cluster_id semantic_label'");
    labels.cluster_id.push_back(parse_int<int>(tokens[0], path, line_no));
    labels.semantic_label.push_back(parse_int<int>(tokens[1], path, line_no));
    labels.provenance.push_back(-1);
  }
  return labels;
}

std::vector<int> read_semantic_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 1 && tokens.size() != 2) {
      fail_at_line(path, line_no, "expected one or two integer columns");
    }
    out.push_back(parse_int<int>(tokens.back(), path, line_no));
  }
  return out;
}

}  // namespace wsl3d
