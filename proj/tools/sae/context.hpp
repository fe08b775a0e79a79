#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cli {

using json = nlohmann::json;

// Everything a subcommand needs: the effective configuration (file contents
// with --seed merged in and input paths made absolute), output directory and
// thread count.
struct Context {
  std::string command;
  json config = json::object();
  std::filesystem::path out;
  std::size_t threads = 0;

  // Root seed; throws ValidationError when neither the config nor --seed set it.
  std::uint64_t seed() const;
  // Required input file from config["inputs"][key]; must exist.
  std::filesystem::path input(const std::string& key) const;
  std::optional<std::filesystem::path> optional_input(const std::string& key) const;
  // config[name], or an empty object.
  const json& section(const std::string& name) const;
};

// A run configuration is either a plain config object or the metadata JSON of
// an earlier run (its "config" member is used).
Context make_context(const std::string& command, const std::optional<std::filesystem::path>& config_path,
                     std::optional<std::uint64_t> seed_override, const std::filesystem::path& out,
                     std::optional<std::size_t> threads);

// Throws ValidationError naming keys of `object` not in `allowed`.
void check_keys(const json& object, const std::string& where, std::initializer_list<const char*> allowed);

template <typename T>
T get_or(const json& object, const char* key, T fallback) {
  if (!object.contains(key) || object.at(key).is_null()) return fallback;
  return object.at(key).get<T>();
}

std::uint64_t fnv1a(std::string_view bytes);

class RunRecord {
 public:
  json diagnostics = json::object();
  void output(const std::string& file) { outputs_.push_back(file); }
  void warn(const std::string& message);

  // Writes <out>/run.json.
  void write(const Context& ctx) const;

 private:
  std::vector<std::string> outputs_;
  std::vector<std::string> warnings_;
};

}  // namespace cli
