#include "context.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "sae/error.hpp"

namespace cli {

namespace fs = std::filesystem;

std::uint64_t Context::seed() const {
  if (!config.contains("seed") || config["seed"].is_null()) {
    throw sae::ValidationError("'" + command + "' is stochastic: set \"seed\" in the config or pass --seed");
  }
  return config["seed"].get<std::uint64_t>();
}

std::optional<fs::path> Context::optional_input(const std::string& key) const {
  const json& in = section("inputs");
  if (!in.contains(key) || in[key].is_null()) return std::nullopt;
  fs::path p = in[key].get<std::string>();
  if (!fs::exists(p)) throw sae::ValidationError("input '" + key + "' not found: " + p.string());
  return p;
}

fs::path Context::input(const std::string& key) const {
  auto p = optional_input(key);
  if (!p) throw sae::ValidationError("'" + command + "' needs inputs." + key + " in the config");
  return *p;
}

const json& Context::section(const std::string& name) const {
  static const json empty = json::object();
  if (!config.contains(name)) return empty;
  const json& s = config[name];
  if (!s.is_object()) throw sae::ValidationError("config section '" + name + "' must be an object");
  return s;
}

void check_keys(const json& object, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!object.is_object()) throw sae::ValidationError(where + " must be a JSON object");
  std::string unknown;
  for (const auto& [key, value] : object.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw sae::ValidationError("unknown key(s) in " + where + ": " + unknown);
}

Context make_context(const std::string& command, const std::optional<fs::path>& config_path,
                     std::optional<std::uint64_t> seed_override, const fs::path& out,
                     std::optional<std::size_t> threads) {
  Context ctx;
  ctx.command = command;
  fs::path base = fs::current_path();
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw sae::ValidationError("cannot open config file: " + config_path->string());
    try {
      ctx.config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw sae::ValidationError("config " + config_path->string() + " is not valid JSON: " + e.what());
    }
    if (ctx.config.contains("command") && ctx.config.contains("config")) {
      // Metadata from an earlier run; its paths are already absolute.
      ctx.config = ctx.config["config"];
    }
    base = fs::absolute(*config_path).parent_path();
  }
  check_keys(ctx.config, "config",
             {"seed", "inputs", "synthetic_graph", "synthetic_frame", "population", "design", "direct", "model",
              "priors", "mcmc", "assess", "rank"});
  if (seed_override) ctx.config["seed"] = *seed_override;
  if (ctx.config.contains("inputs")) {
    json& inputs = ctx.config["inputs"];
    check_keys(inputs, "inputs",
               {"frame", "adjacency", "population", "sample", "direct", "covariates", "urban_fractions", "pixels",
                "draws"});
    for (auto& [key, value] : inputs.items()) {
      if (value.is_null()) continue;
      if (!value.is_string()) throw sae::ValidationError("inputs." + key + " must be a path string");
      fs::path p = value.get<std::string>();
      if (p.is_relative()) p = base / p;
      value = p.lexically_normal().string();
    }
  }
  ctx.out = out;
  if (threads) {
    ctx.threads = *threads;
  } else if (const char* env = std::getenv("SAE_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0') throw sae::ValidationError(std::string("SAE_THREADS is not a count: ") + env);
    ctx.threads = v;
  }
  fs::create_directories(out);
  return ctx;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunRecord::warn(const std::string& message) {
  warnings_.push_back(message);
  std::cerr << "warning: " << message << '\n';
}

void RunRecord::write(const Context& ctx) const {
  json meta;
  meta["command"] = ctx.command;
  meta["version"] = SAE_VERSION;
  meta["config"] = ctx.config;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(ctx.config.dump())));
  meta["config_hash"] = hash;
  meta["seed"] = ctx.config.contains("seed") ? ctx.config["seed"] : json(nullptr);
  meta["outputs"] = outputs_;
  meta["diagnostics"] = diagnostics;
  meta["warnings"] = warnings_;
  std::ofstream f(ctx.out / "run.json");
  if (!f) throw sae::ValidationError("cannot write " + (ctx.out / "run.json").string());
  f << meta.dump(2) << '\n';
}

}  // namespace cli
