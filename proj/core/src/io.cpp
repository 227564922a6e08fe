#include "radfuse/io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace radfuse {
namespace {

static_assert(std::endian::native == std::endian::little, "PFM codec assumes a little-endian host");

[[noreturn]] void format_error(const std::string& name, const std::string& what) {
  fail(ErrorCategory::kFormat, name + ": " + what);
}

[[noreturn]] void format_error_at(const std::string& name, std::size_t offset, const std::string& what) {
  fail(ErrorCategory::kFormat, name + ": " + what + " at byte " + std::to_string(offset));
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

bool parse_double(std::string_view token, double& out) {
  // from_chars does not accept a leading '+'.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc() && res.ptr == token.data() + token.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

// Reads one whitespace-delimited header token starting at `pos`.
std::string_view header_token(const std::string& bytes, std::size_t& pos, const std::string& name, const char* what) {
  while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (pos == start) format_error_at(name, start, std::string("truncated header, expected ") + what);
  return std::string_view(bytes).substr(start, pos - start);
}

int parse_dimension(std::string_view tok, std::size_t offset, const std::string& name) {
  long long value = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || value < 1 || value > (1 << 20)) {
    format_error_at(name, offset, "invalid dimension '" + std::string(tok) + "'");
  }
  return static_cast<int>(value);
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::kFormat, path.string() + ": cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::kFormat, path.string() + ": cannot open file for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCategory::kFormat, path.string() + ": write failed");
}

// --- PFM ---------------------------------------------------------------------

PfmImage parse_pfm(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 2) format_error_at(name, 0, "truncated header");
  if (bytes[0] != 'P' || (bytes[1] != 'f' && bytes[1] != 'F')) format_error_at(name, 0, "bad magic (expected 'Pf')");
  if (bytes[1] == 'F') format_error_at(name, 0, "three-channel PFM ('PF') is not supported");
  std::size_t pos = 2;
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    format_error_at(name, pos, "bad magic (expected 'Pf')");
  }
  const std::size_t w_off = pos;
  const int width = parse_dimension(header_token(bytes, pos, name, "width"), w_off, name);
  const std::size_t h_off = pos;
  const int height = parse_dimension(header_token(bytes, pos, name, "height"), h_off, name);
  const std::size_t s_off = pos;
  const std::string_view scale_tok = header_token(bytes, pos, name, "scale");
  double scale = 0.0;
  if (!parse_double(scale_tok, scale) || !std::isfinite(scale) || scale == 0.0) {
    format_error_at(name, s_off, "invalid scale '" + std::string(scale_tok) + "'");
  }
  if (scale > 0.0) format_error_at(name, s_off, "big-endian PFM (positive scale) is not supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    format_error_at(name, pos, "truncated header");
  }
  ++pos;

  PfmImage img;
  img.width = width;
  img.height = height;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t need = count * sizeof(float);
  if (bytes.size() - pos < need) {
    format_error_at(name, bytes.size(), "truncated pixel data (expected " + std::to_string(need) + " bytes after header)");
  }
  if (bytes.size() - pos > need) format_error_at(name, pos + need, "trailing bytes after pixel data");
  img.data.resize(count);
  const std::size_t row = static_cast<std::size_t>(width);
  for (int r = 0; r < height; ++r) {
    // File rows run bottom-up.
    const std::size_t src = pos + static_cast<std::size_t>(height - 1 - r) * row * sizeof(float);
    std::memcpy(img.data.data() + static_cast<std::size_t>(r) * row, bytes.data() + src, row * sizeof(float));
  }
  return img;
}

PfmImage read_pfm(const std::filesystem::path& path) { return parse_pfm(read_text_file(path), path.string()); }

std::string serialize_pfm(const PfmImage& image) {
  require(image.width >= 1 && image.height >= 1, ErrorCategory::kParameter, "PFM dimensions must be >= 1");
  require(image.data.size() == static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height),
          ErrorCategory::kParameter, "PFM data size does not match dimensions");
  std::string out = "Pf\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n-1\n";
  const std::size_t header = out.size();
  const std::size_t row = static_cast<std::size_t>(image.width);
  out.resize(header + image.data.size() * sizeof(float));
  for (int r = 0; r < image.height; ++r) {
    const std::size_t dst = header + static_cast<std::size_t>(image.height - 1 - r) * row * sizeof(float);
    std::memcpy(out.data() + dst, image.data.data() + static_cast<std::size_t>(r) * row, row * sizeof(float));
  }
  return out;
}

void write_pfm(const std::filesystem::path& path, const PfmImage& image) { write_text_file(path, serialize_pfm(image)); }

DepthImage depth_from_pfm(const PfmImage& pfm) {
  DepthImage out(pfm.width, pfm.height);
  for (std::size_t i = 0; i < pfm.data.size(); ++i) {
    const double v = pfm.data[i];
    if (std::isfinite(v) && v > 0.0) {
      out.set(i, v);
    } else {
      out.set_raw(i, v);
    }
  }
  return out;
}

PfmImage depth_to_pfm(const DepthImage& depth) {
  PfmImage pfm;
  pfm.width = depth.width();
  pfm.height = depth.height();
  pfm.data.resize(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double v = depth.at(i);
    if (depth.valid(i)) {
      pfm.data[i] = static_cast<float>(v);
    } else {
      pfm.data[i] = (!std::isfinite(v) || v <= 0.0) ? static_cast<float>(v) : 0.0f;
    }
  }
  return pfm;
}

DepthImage read_depth_pfm(const std::filesystem::path& path) { return depth_from_pfm(read_pfm(path)); }

void write_depth_pfm(const std::filesystem::path& path, const DepthImage& depth) { write_pfm(path, depth_to_pfm(depth)); }

// --- calibration ---------------------------------------------------------------

Calibration parse_calibration(const std::string& text, const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    format_error_at(name, e.byte, "invalid JSON");
  }
  try {
    const auto k = j.at("K").get<std::vector<double>>();
    const auto t = j.at("T_cam_radar").get<std::vector<double>>();
    if (k.size() != 9) format_error(name, "K must have 9 entries");
    if (t.size() != 16) format_error(name, "T_cam_radar must have 16 entries");
    if (k[1] != 0.0 || k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0) {
      format_error(name, "K must be [fx 0 cx; 0 fy cy; 0 0 1]");
    }
    Calibration c;
    c.camera.fx = k[0];
    c.camera.cx = k[2];
    c.camera.fy = k[4];
    c.camera.cy = k[5];
    c.camera.width = j.at("width").get<int>();
    c.camera.height = j.at("height").get<int>();
    c.camera.validate();
    c.cam_from_radar = RigidTransform::from_row_major(t);
    return c;
  } catch (const nlohmann::json::exception& e) {
    format_error(name, std::string("bad calibration document: ") + e.what());
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kFormat) throw;
    format_error(name, e.what());
  }
}

std::string serialize_calibration(const Calibration& calib) {
  const auto& c = calib.camera;
  nlohmann::ordered_json j;
  j["K"] = std::vector<double>{c.fx, 0.0, c.cx, 0.0, c.fy, c.cy, 0.0, 0.0, 1.0};
  j["T_cam_radar"] = calib.cam_from_radar.to_row_major();
  j["width"] = c.width;
  j["height"] = c.height;
  return j.dump(2) + "\n";
}

Calibration read_calibration(const std::filesystem::path& path) {
  return parse_calibration(read_text_file(path), path.string());
}

void write_calibration(const std::filesystem::path& path, const Calibration& calib) {
  write_text_file(path, serialize_calibration(calib));
}

// --- point clouds ----------------------------------------------------------------

namespace {

struct ColumnMap {
  int x = -1, y = -1, z = -1, doppler = -1, rcs = -1;
  int count = 0;

  void assign(std::string_view column, int index) {
    if (column == "x") x = index;
    else if (column == "y") y = index;
    else if (column == "z") z = index;
    else if (column == "doppler") doppler = index;
    else if (column == "rcs") rcs = index;
  }
  bool complete() const { return x >= 0 && y >= 0 && z >= 0; }
};

RadarPoint parse_point_row(const std::vector<std::string_view>& fields, const ColumnMap& cols,
                           const std::string& name, std::size_t line_no) {
  if (static_cast<int>(fields.size()) != cols.count) {
    format_error(name, "line " + std::to_string(line_no) + ": expected " + std::to_string(cols.count) + " fields, got " +
                           std::to_string(fields.size()));
  }
  auto value = [&](int idx) {
    double v = 0.0;
    if (!parse_double(fields[static_cast<std::size_t>(idx)], v)) {
      format_error(name, "line " + std::to_string(line_no) + ": not a number '" +
                             std::string(fields[static_cast<std::size_t>(idx)]) + "'");
    }
    return v;
  };
  RadarPoint p;
  p.x = value(cols.x);
  p.y = value(cols.y);
  p.z = value(cols.z);
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
    format_error(name, "line " + std::to_string(line_no) + ": non-finite coordinate");
  }
  if (cols.doppler >= 0) {
    const double d = value(cols.doppler);
    if (!std::isnan(d)) p.doppler = d;
  }
  if (cols.rcs >= 0) {
    const double r = value(cols.rcs);
    if (!std::isnan(r)) p.rcs = r;
  }
  return p;
}

std::pair<bool, bool> optional_columns(const RadarPointCloud& cloud) {
  bool doppler = false, rcs = false;
  for (const auto& p : cloud.points) {
    doppler = doppler || p.doppler.has_value();
    rcs = rcs || p.rcs.has_value();
  }
  return {doppler, rcs};
}

}  // namespace

RadarPointCloud parse_ply(const std::string& text, const std::string& name) {
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines[0]) != "ply") format_error(name, "missing 'ply' magic");
  ColumnMap cols;
  long long n_vertices = -1;
  bool in_vertex = false;
  bool ascii = false;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    const auto tok = split_ws(lines[i]);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") format_error(name, "only ASCII PLY is supported");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) format_error(name, "malformed element line " + std::to_string(i + 1));
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        const auto res = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), n_vertices);
        if (res.ec != std::errc() || n_vertices < 0) format_error(name, "bad vertex count");
      } else if (n_vertices < 0) {
        format_error(name, "vertex must be the first element");
      }
    } else if (tok[0] == "property") {
      if (!in_vertex) continue;
      if (tok.size() != 3) format_error(name, "unsupported property line " + std::to_string(i + 1));
      cols.assign(tok[2], cols.count++);
    } else {
      format_error(name, "unexpected header line " + std::to_string(i + 1));
    }
  }
  if (i >= lines.size()) format_error(name, "missing end_header");
  if (!ascii) format_error(name, "missing format line");
  if (n_vertices < 0 || !cols.complete()) format_error(name, "vertex element needs x, y, z properties");

  RadarPointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n_vertices));
  std::size_t line = i + 1;
  for (long long k = 0; k < n_vertices; ++k, ++line) {
    while (line < lines.size() && trim(lines[line]).empty()) ++line;
    if (line >= lines.size()) format_error(name, "truncated vertex list");
    cloud.points.push_back(parse_point_row(split_ws(lines[line]), cols, name, line + 1));
  }
  return cloud;
}

std::string serialize_ply(const RadarPointCloud& cloud) {
  const auto [doppler, rcs] = optional_columns(cloud);
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (doppler) out << "property double doppler\n";
  if (rcs) out << "property double rcs\n";
  out << "end_header\n";
  for (const auto& p : cloud.points) {
    out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z);
    if (doppler) out << ' ' << format_double(p.doppler.value_or(std::nan("")));
    if (rcs) out << ' ' << format_double(p.rcs.value_or(std::nan("")));
    out << '\n';
  }
  return out.str();
}

RadarPointCloud parse_csv(const std::string& text, const std::string& name) {
  const auto lines = lines_of(text);
  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i]).empty()) ++i;
  if (i >= lines.size()) format_error(name, "missing CSV header");
  ColumnMap cols;
  for (auto col : split(lines[i], ',')) cols.assign(col, cols.count++);
  if (!cols.complete()) format_error(name, "CSV header must name x, y, z");
  RadarPointCloud cloud;
  for (++i; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    cloud.points.push_back(parse_point_row(split(lines[i], ','), cols, name, i + 1));
  }
  return cloud;
}

std::string serialize_csv(const RadarPointCloud& cloud) {
  const auto [doppler, rcs] = optional_columns(cloud);
  std::ostringstream out;
  out << "x,y,z";
  if (doppler) out << ",doppler";
  if (rcs) out << ",rcs";
  out << '\n';
  for (const auto& p : cloud.points) {
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.z);
    if (doppler) out << ',' << format_double(p.doppler.value_or(std::nan("")));
    if (rcs) out << ',' << format_double(p.rcs.value_or(std::nan("")));
    out << '\n';
  }
  return out.str();
}

RadarPointCloud read_point_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return parse_ply(read_text_file(path), path.string());
  if (ext == ".csv") return parse_csv(read_text_file(path), path.string());
  fail(ErrorCategory::kFormat, path.string() + ": unknown point cloud extension (expected .ply or .csv)");
}

void write_point_cloud(const std::filesystem::path& path, const RadarPointCloud& cloud) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return write_text_file(path, serialize_ply(cloud));
  if (ext == ".csv") return write_text_file(path, serialize_csv(cloud));
  fail(ErrorCategory::kParameter, path.string() + ": unknown point cloud extension (expected .ply or .csv)");
}

}  // namespace radfuse
