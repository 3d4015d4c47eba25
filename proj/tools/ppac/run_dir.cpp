#include "ppac/run_dir.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <string>

#include "ppac/error.hpp"

namespace ppac::cli {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::filesystem::path make_run_dir(std::string_view command, std::string_view canonical_config) {
  namespace fs = std::filesystem;
  const char* env = std::getenv("PPAC_RUN_ROOT");
  const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("run root: cannot create " + root.string() + ": " + ec.message());

  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_config)));

  const std::string base = std::string(command) + "-" + hash + "-" + stamp;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const fs::path dir = root / (attempt == 0 ? base : base + "-" + std::to_string(attempt + 1));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("run directory: cannot create " + dir.string() + ": " + ec.message());
  }
  throw IoError("run directory: too many runs named " + base);
}

} // namespace ppac::cli
