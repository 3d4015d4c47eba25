#include "ppac/volume_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "ppac/error.hpp"

namespace ppac {
namespace {

using ordered_json = nlohmann::ordered_json;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

std::array<double, 3> read_triple(const ordered_json& node, const std::string& field) {
  if (!node.is_array() || node.size() != 3) throw IoError(field + ": expected an array of three numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!node[i].is_number()) throw IoError(field + ": expected an array of three numbers");
    out[i] = node[i].get<double>();
    if (!std::isfinite(out[i])) throw IoError(field + ": non-finite value");
  }
  return out;
}

} // namespace

void write_volume(std::ostream& out, const Volume& v) {
  ordered_json header;
  header["dims"] = {v.dims().x, v.dims().y, v.dims().z};
  header["spacing"] = {v.spacing().x, v.spacing().y, v.spacing().z};
  header["dtype"] = "f32le";
  ordered_json landmarks = ordered_json::object();
  for (const auto& lm : v.landmarks()) landmarks[lm.name] = {lm.position.x, lm.position.y, lm.position.z};
  header["landmarks"] = landmarks;
  out << header.dump() << '\n';

  std::vector<std::uint32_t> words(v.voxel_count());
  const auto data = v.data();
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = to_le(std::bit_cast<std::uint32_t>(data[i]));
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (!out) throw IoError("payload: write failed");
}

Volume read_volume(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("header: missing header line");
  ordered_json header;
  try {
    header = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("header: not valid JSON (") + e.what() + ")");
  }
  if (!header.is_object()) throw IoError("header: expected a JSON object");
  for (const char* key : {"dims", "spacing", "dtype", "landmarks"}) {
    if (!header.contains(key)) throw IoError(std::string("header: missing \"") + key + "\" key");
  }
  for (const auto& [key, _] : header.items()) {
    if (key != "dims" && key != "spacing" && key != "dtype" && key != "landmarks") throw IoError("header: unknown key \"" + key + "\"");
  }
  if (header["dtype"] != "f32le") throw IoError("dtype: only \"f32le\" is supported");

  const auto d = read_triple(header["dims"], "dims");
  Vec3i dims;
  for (int i = 0; i < 3; ++i) {
    if (d[i] < 1 || d[i] != std::floor(d[i]) || d[i] > 1 << 20) throw IoError("dims: expected positive integers");
    dims[i] = static_cast<int>(d[i]);
  }
  const auto s = read_triple(header["spacing"], "spacing");
  const Vec3d spacing{s[0], s[1], s[2]};

  std::vector<Landmark> landmarks;
  if (!header["landmarks"].is_object()) throw IoError("landmarks: expected an object");
  for (const auto& [name, pos] : header["landmarks"].items()) {
    const auto p = read_triple(pos, "landmarks." + name);
    landmarks.push_back({name, {p[0], p[1], p[2]}});
  }

  const std::size_t count = static_cast<std::size_t>(dims.x) * dims.y * dims.z;
  std::vector<std::uint32_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != count * sizeof(std::uint32_t)) {
    throw IoError("payload: size mismatch, dims declare " + std::to_string(count) + " floats but payload holds " +
                  std::to_string(got / sizeof(std::uint32_t)) + (got % 4 ? " and a partial value" : ""));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("payload: size mismatch, trailing bytes after declared dims");

  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(to_le(words[i]));
    if (!std::isfinite(data[i])) throw IoError("payload: non-finite value at index " + std::to_string(i));
  }
  try {
    return Volume(dims, spacing, std::move(data), std::move(landmarks));
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("path: cannot open " + path.string() + " for writing");
  write_volume(out, v);
}

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("path: cannot open " + path.string());
  return read_volume(in);
}

} // namespace ppac
