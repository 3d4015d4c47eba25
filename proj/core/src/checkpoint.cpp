#include "ppac/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "ppac/error.hpp"

namespace ppac {
namespace {

using ordered_json = nlohmann::ordered_json;

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

ordered_json architecture_json(const NetworkConfig& c) {
  ordered_json j;
  j["window"] = c.window;
  j["channels"] = c.channels;
  j["kernel"] = c.kernel;
  j["hidden"] = c.hidden;
  j["layout"] = std::string(layout_name(c.layout));
  return j;
}

NetworkConfig architecture_from_json(const ordered_json& j) {
  try {
    NetworkConfig c;
    c.window = j.at("window").get<int>();
    c.channels = j.at("channels").get<std::vector<int>>();
    c.kernel = j.at("kernel").get<int>();
    c.hidden = j.at("hidden").get<int>();
    const auto layout = parse_layout(j.at("layout").get<std::string>());
    if (!layout) throw IoError("architecture.layout: unknown layout");
    c.layout = *layout;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("architecture: ") + e.what());
  }
}

} // namespace

void write_checkpoint(std::ostream& out, const Network<float>& net, int epoch, std::uint64_t seed) {
  ordered_json manifest;
  manifest["format"] = "ppac-checkpoint";
  manifest["version"] = 1;
  manifest["architecture"] = architecture_json(net.arch().config());
  manifest["epoch"] = epoch;
  manifest["seed"] = seed;
  ordered_json tensors = ordered_json::array();
  for (const auto& t : net.arch().tensors()) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  manifest["tensors"] = tensors;
  out << manifest.dump() << '\n';

  const auto params = net.params();
  std::vector<std::uint32_t> words(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) words[i] = to_le(std::bit_cast<std::uint32_t>(params[i]));
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw IoError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("manifest: missing manifest line");
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("manifest: not valid JSON (") + e.what() + ")");
  }
  if (!manifest.is_object() || manifest.value("format", "") != "ppac-checkpoint") throw IoError("format: not a ppac checkpoint");
  if (manifest.value("version", 0) != 1) throw IoError("version: unsupported checkpoint version");
  if (!manifest.contains("architecture")) throw IoError("architecture: missing");

  Architecture arch(architecture_from_json(manifest["architecture"]));
  const auto& tensors = manifest.at("tensors");
  if (!tensors.is_array() || tensors.size() != arch.tensors().size()) throw IoError("tensors: count does not match the architecture");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& expected = arch.tensors()[i];
    if (tensors[i].value("name", "") != expected.name || tensors[i].value("shape", std::vector<int>{}) != expected.shape) {
      throw IoError("tensors[" + std::to_string(i) + "]: expected " + expected.name + " with matching shape");
    }
  }

  std::vector<std::uint32_t> words(arch.parameter_count());
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (static_cast<std::size_t>(in.gcount()) != words.size() * 4) throw IoError("payload: shorter than the manifest declares");
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("payload: trailing bytes after the declared tensors");

  std::vector<float> params(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    params[i] = std::bit_cast<float>(to_le(words[i]));
    if (!std::isfinite(params[i])) throw IoError("payload: non-finite parameter at index " + std::to_string(i));
  }
  return Checkpoint{Network<float>(std::move(arch), std::move(params)), manifest.value("epoch", 0),
                    manifest.value("seed", std::uint64_t{0})};
}

void save_checkpoint(const std::filesystem::path& path, const Network<float>& net, int epoch, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("path: cannot open " + path.string() + " for writing");
  write_checkpoint(out, net, epoch, seed);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("path: cannot open " + path.string());
  return read_checkpoint(in);
}

} // namespace ppac
