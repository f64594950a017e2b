#include "srn/point_cloud.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace srn {

namespace {

constexpr char kMagic[4] = {'R', 'P', 'C', '5'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32_le(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32_le(os, u);
}

std::uint32_t get_u32_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32_le(const unsigned char* b) {
  std::uint32_t u = get_u32_le(b);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

RadarPointCloud load_csv(const std::filesystem::path& path, std::uint64_t frame_id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point cloud file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("malformed header in " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,z,power,doppler")
    throw std::runtime_error("malformed header in " + path.string() +
                             ": expected \"x,y,z,power,doppler\"");
  RadarPointCloud cloud;
  cloud.frame_id = frame_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    RadarPoint p;
    char c1, c2, c3, c4;
    if (!(ss >> p.x >> c1 >> p.y >> c2 >> p.z >> c3 >> p.power >> c4 >> p.doppler) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw std::runtime_error("malformed CSV record at line " + std::to_string(line_no) +
                               " in " + path.string());
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace

void save_point_cloud(const RadarPointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  put_u32_le(out, static_cast<std::uint32_t>(cloud.points.size()));
  for (const RadarPoint& p : cloud.points) {
    put_f32_le(out, p.x);
    put_f32_le(out, p.y);
    put_f32_le(out, p.z);
    put_f32_le(out, p.power);
    put_f32_le(out, p.doppler);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RadarPointCloud load_point_cloud(const std::filesystem::path& path, std::uint64_t frame_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open point cloud file: " + path.string());

  unsigned char header[8];
  in.read(reinterpret_cast<char*>(header), 8);
  if (in.gcount() >= 4 && std::memcmp(header, kMagic, 4) != 0) {
    // Not the binary format; retry as CSV.
    return load_csv(path, frame_id);
  }
  if (in.gcount() < 8)
    throw std::runtime_error("malformed header: " + path.string() + " is too short");

  const std::uint32_t count = get_u32_le(header + 4);
  RadarPointCloud cloud;
  cloud.frame_id = frame_id;
  cloud.points.reserve(count);

  std::vector<unsigned char> rec(20);
  for (std::uint32_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(rec.data()), 20);
    if (in.gcount() != 20)
      throw std::runtime_error("truncated payload: " + path.string() + " declares " +
                               std::to_string(count) + " points but ends at record " +
                               std::to_string(i));
    RadarPoint p;
    p.x = get_f32_le(rec.data());
    p.y = get_f32_le(rec.data() + 4);
    p.z = get_f32_le(rec.data() + 8);
    p.power = get_f32_le(rec.data() + 12);
    p.doppler = get_f32_le(rec.data() + 16);
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace srn
