#include "ppac/json_config.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace ppac::cli {
namespace {

std::string scalar_text(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw CLI::ConfigError(key + ": expected a string, number, boolean, or array of those");
}

// CLI11 keeps values as text; recover numbers, booleans and lists.
nlohmann::ordered_json typed(const std::string& text) {
  auto j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || j.is_object() || j.is_string() || j.is_null()) return text;
  return j;
}

} // namespace

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  nlohmann::json doc;
  try {
    input >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) throw CLI::ConfigError("config: top level must be an object");

  std::vector<std::string> parents;
  const CLI::App* target = nullptr;
  if (root_ != nullptr) {
    const auto selected = root_->get_subcommands();
    if (!selected.empty()) {
      target = selected.front();
      parents.push_back(target->get_name());
    }
  }
  std::vector<CLI::ConfigItem> items;
  for (const auto& [key, value] : doc.items()) {
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    std::replace(item.name.begin(), item.name.end(), '_', '-');
    if (target != nullptr && target->get_option_no_throw("--" + item.name) == nullptr) {
      throw CLI::ConfigError("config: unknown key \"" + key + "\" for " + target->get_name());
    }
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar_text(v, key));
    } else {
      item.inputs.push_back(scalar_text(value, key));
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1 && opt->get_items_expected_max() <= 1) {
        out[name] = typed(r.front());
      } else {
        auto list = nlohmann::ordered_json::array();
        for (const auto& v : r) list.push_back(typed(v));
        out[name] = list;
      }
    } else if (default_also && !opt->get_default_str().empty()) {
      out[name] = typed(opt->get_default_str());
    }
  }
  return out.dump(2) + "\n";
}

} // namespace ppac::cli
