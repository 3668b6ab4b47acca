#include <iostream>

#include "CLI11.hpp"
#include "crystab/workbench/commands.hpp"

using namespace crystab::workbench;

int main(int argc, char** argv) {
  CLI::App app{"crystab: linear stability of Schroedinger-Poisson-Newton crystals"};
  app.set_version_flag("--version", CRYSTAB_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  bool force = false;
  std::string kind;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for random trial vectors (overrides seed)");
    sub->add_flag("--force", force, "integrate non-positive modes with RK4 instead of refusing");
  };
  for (const char* verb : {"groundstate", "scan", "evolve", "counterexample", "verify"}) {
    CLI::App* sub = app.add_subcommand(verb);
    add_common(sub);
    if (std::string(verb) == "scan")
      sub->add_option("--kind", kind, "wiener or positivity")->check(CLI::IsMember({"wiener", "positivity"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    RunConfig config = load_config(config_path);
    const CLI::App* sub = app.get_subcommands().front();
    std::optional<std::filesystem::path> out;
    if (sub->count("--out")) out = out_dir;
    std::optional<std::uint64_t> seed_override;
    if (sub->count("--seed")) seed_override = seed;
    const Context ctx = make_context(std::move(config), out, threads, seed_override, force, &std::cerr);
    return run_command(verb, ctx, kind);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}
