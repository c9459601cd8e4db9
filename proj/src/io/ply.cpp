#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mvedit/io/byte_order.hpp"
#include "mvedit/scene.hpp"

namespace mvedit::io {
namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::size_t byte_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

ScalarType parse_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  fail(ErrorKind::Format, "unsupported PLY property type '" + name + "'");
}

double read_binary(const std::uint8_t* p, ScalarType t, std::endian order) {
  switch (t) {
    case ScalarType::Int8: return load<std::int8_t>(p, order);
    case ScalarType::UInt8: return load<std::uint8_t>(p, order);
    case ScalarType::Int16: return load<std::int16_t>(p, order);
    case ScalarType::UInt16: return load<std::uint16_t>(p, order);
    case ScalarType::Int32: return load<std::int32_t>(p, order);
    case ScalarType::UInt32: return load<std::uint32_t>(p, order);
    case ScalarType::Float32: return load<float>(p, order);
    case ScalarType::Float64: return load<double>(p, order);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
};

struct Header {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::size_t vertex_count = 0;
  std::vector<Property> properties;
};

Header parse_header(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    fail(ErrorKind::Format, name + ": missing 'ply' magic");
  }
  Header header;
  bool in_vertex = false;
  bool seen_vertex = false;
  bool seen_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword == "end_header") {
      if (!seen_format || !seen_vertex) fail(ErrorKind::Format, name + ": incomplete PLY header");
      return header;
    }
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
    if (keyword == "format") {
      std::string fmt;
      words >> fmt;
      if (fmt == "ascii") header.encoding = PlyEncoding::Ascii;
      else if (fmt == "binary_little_endian") header.encoding = PlyEncoding::BinaryLittleEndian;
      else if (fmt == "binary_big_endian") header.encoding = PlyEncoding::BinaryBigEndian;
      else fail(ErrorKind::Format, name + ": unknown PLY format '" + fmt + "'");
      seen_format = true;
    } else if (keyword == "element") {
      std::string element;
      std::size_t count = 0;
      words >> element >> count;
      if (element == "vertex") {
        if (seen_vertex) fail(ErrorKind::Format, name + ": duplicate vertex element");
        if (!header.properties.empty()) fail(ErrorKind::Format, name + ": vertex must be the first element");
        header.vertex_count = count;
        in_vertex = seen_vertex = true;
      } else {
        if (!seen_vertex) fail(ErrorKind::Format, name + ": vertex must be the first element");
        in_vertex = false;  // trailing elements (faces, ...) are ignored
      }
    } else if (keyword == "property") {
      if (!in_vertex) continue;
      std::string type;
      std::string prop;
      words >> type;
      if (type == "list") fail(ErrorKind::Format, name + ": list properties on vertices are unsupported");
      words >> prop;
      header.properties.push_back({prop, parse_type(type)});
    } else {
      fail(ErrorKind::Format, name + ": unexpected header line '" + line + "'");
    }
  }
  fail(ErrorKind::Format, name + ": missing end_header");
}

int find_property(const Header& h, std::string_view name) {
  for (std::size_t i = 0; i < h.properties.size(); ++i) {
    if (h.properties[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

PlyCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, path.filename().string());
  const auto header = parse_header(in, path.string());
  const int ix = find_property(header, "x");
  const int iy = find_property(header, "y");
  const int iz = find_property(header, "z");
  if (ix < 0 || iy < 0 || iz < 0) fail(ErrorKind::Format, path.string() + ": PLY lacks x/y/z");
  const int ir = find_property(header, "red");
  const int ig = find_property(header, "green");
  const int ib = find_property(header, "blue");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
  const int il = find_property(header, "label");

  PlyCloud cloud;
  cloud.positions.resize(header.vertex_count);
  if (has_color) cloud.colors.resize(header.vertex_count);
  if (il >= 0) cloud.labels.resize(header.vertex_count);

  std::vector<double> values(header.properties.size());
  auto assign = [&](std::size_t i) {
    cloud.positions[i] = Vec3(values[ix], values[iy], values[iz]);
    if (has_color) {
      cloud.colors[i] = {static_cast<std::uint8_t>(values[ir]), static_cast<std::uint8_t>(values[ig]),
                         static_cast<std::uint8_t>(values[ib])};
    }
    if (il >= 0) cloud.labels[i] = static_cast<SegmentLabel>(values[il]);
  };

  if (header.encoding == PlyEncoding::Ascii) {
    std::string line;
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      if (!std::getline(in, line)) fail(ErrorKind::Format, path.string() + ": truncated PLY body");
      const char* p = line.data();
      const char* end = line.data() + line.size();
      for (auto& v : values) {
        while (p < end && (*p == ' ' || *p == '\t')) ++p;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc()) fail(ErrorKind::Format, path.string() + ": bad PLY value");
        p = next;
      }
      assign(i);
    }
  } else {
    const std::endian order = header.encoding == PlyEncoding::BinaryLittleEndian
                                  ? std::endian::little
                                  : std::endian::big;
    std::size_t stride = 0;
    for (const auto& prop : header.properties) stride += byte_size(prop.type);
    std::vector<std::uint8_t> row(stride);
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(stride))) {
        fail(ErrorKind::Format, path.string() + ": truncated PLY body");
      }
      std::size_t offset = 0;
      for (std::size_t k = 0; k < header.properties.size(); ++k) {
        values[k] = read_binary(row.data() + offset, header.properties[k].type, order);
        offset += byte_size(header.properties[k].type);
      }
      assign(i);
    }
  }
  return cloud;
}

void write_ply(const std::filesystem::path& path, const SegmentedPointCloud& cloud,
               PlyEncoding encoding, bool include_labels) {
  const bool has_color = !cloud.colors.empty();
  if (include_labels) {
    for (auto label : cloud.labels) {
      if (label > std::numeric_limits<std::int32_t>::max()) {
        fail(ErrorKind::InvalidArgument, "label does not fit the PLY int property");
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "ply\nformat "
      << (encoding == PlyEncoding::Ascii                ? "ascii"
          : encoding == PlyEncoding::BinaryLittleEndian ? "binary_little_endian"
                                                        : "binary_big_endian")
      << " 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (has_color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (include_labels) out << "property int label\n";
  out << "end_header\n";

  if (encoding == PlyEncoding::Ascii) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.positions[i];
      out << p.x() << ' ' << p.y() << ' ' << p.z();
      if (has_color) {
        out << ' ' << int(cloud.colors[i][0]) << ' ' << int(cloud.colors[i][1]) << ' '
            << int(cloud.colors[i][2]);
      }
      if (include_labels) out << ' ' << cloud.labels[i];
      out << '\n';
    }
  } else {
    const std::endian order =
        encoding == PlyEncoding::BinaryLittleEndian ? std::endian::little : std::endian::big;
    const std::size_t stride = 24 + (has_color ? 3 : 0) + (include_labels ? 4 : 0);
    std::vector<std::uint8_t> row(stride);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.positions[i];
      store(p.x(), order, row.data());
      store(p.y(), order, row.data() + 8);
      store(p.z(), order, row.data() + 16);
      std::size_t offset = 24;
      if (has_color) {
        for (int c = 0; c < 3; ++c) row[offset + c] = cloud.colors[i][c];
        offset += 3;
      }
      if (include_labels) store(static_cast<std::int32_t>(cloud.labels[i]), order, row.data() + offset);
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(stride));
    }
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<SegmentLabel> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, path.filename().string());
  std::vector<SegmentLabel> labels;
  std::string token;
  while (in >> token) {
    SegmentLabel value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail(ErrorKind::Format, path.string() + ": bad label '" + token + "'");
    }
    labels.push_back(value);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<SegmentLabel>& labels) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (auto label : labels) out << label << '\n';
}

}  // namespace mvedit::io
