#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

namespace ppac::cli {

std::uint64_t fnv1a(std::string_view bytes);

/// Creates <root>/<command>-<hash>-<UTC timestamp>, adding a numeric suffix
/// rather than reusing an existing directory. Root is $PPAC_RUN_ROOT, or
/// ./runs when unset.
std::filesystem::path make_run_dir(std::string_view command, std::string_view canonical_config);

} // namespace ppac::cli
