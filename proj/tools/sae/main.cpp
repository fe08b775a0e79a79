#include <exception>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "context.hpp"
#include "sae/error.hpp"

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::size_t threads = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small area prevalence estimation from complex surveys", "sae"};
  app.set_version_flag("--version", SAE_VERSION);
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, std::function<void(const cli::Context&)>>> commands = {
      {"simulate", {"Generate a synthetic frame, graph and finite population", cli::cmd_simulate}},
      {"sample", {"Draw a stratified two-stage cluster sample", cli::cmd_sample}},
      {"direct", {"Weighted direct estimates with design-based variances", cli::cmd_direct}},
      {"smooth", {"Fit the area-level smoothed direct model", cli::cmd_smooth}},
      {"unit", {"Fit the cluster-level beta-binomial model", cli::cmd_unit}},
      {"assess", {"Leave-one-area-out validation against direct estimates", cli::cmd_assess}},
      {"rank", {"Rank areas from posterior prevalence draws", cli::cmd_rank}},
  };

  Options opt;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, CLI::Option*> seed_opts;
  std::map<std::string, CLI::Option*> thread_opts;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opt.config, "JSON run configuration (or run.json of an earlier run)")
        ->check(CLI::ExistingFile);
    seed_opts[name] = sub->add_option("--seed", opt.seed, "Root seed; overrides the config");
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    thread_opts[name] = sub->add_option("--threads", opt.threads, "Worker threads for chains");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      std::optional<std::filesystem::path> config;
      if (!opt.config.empty()) config = opt.config;
      std::optional<std::uint64_t> seed;
      if (seed_opts[name]->count() > 0) seed = opt.seed;
      std::optional<std::size_t> threads;
      if (thread_opts[name]->count() > 0) threads = opt.threads;
      const cli::Context ctx = cli::make_context(name, config, seed, opt.out, threads);
      commands.at(name).second(ctx);
      return 0;
    } catch (const sae::ValidationError& e) {
      std::cerr << "sae " << name << ": invalid input: " << e.what() << "\n";
      return 2;
    } catch (const sae::NumericError& e) {
      std::cerr << "sae " << name << ": numerical failure: " << e.what() << "\n";
      return 3;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "sae " << name << ": invalid configuration: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "sae " << name << ": " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
