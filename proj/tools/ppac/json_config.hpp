#pragma once

#include <CLI11.hpp>

namespace ppac::cli {

/// Reads a flat JSON object as CLI11 config items. Keys are long option
/// names of the selected subcommand; underscores are accepted in place of
/// dashes. Arrays become multi-value options. Nested objects are rejected.
class JsonConfig : public CLI::Config {
public:
  explicit JsonConfig(const CLI::App* root = nullptr) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool write_description, std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

private:
  const CLI::App* root_;
};

} // namespace ppac::cli
