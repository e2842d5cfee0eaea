// sflsim: deterministic federated-learning simulator CLI.
//
//   sflsim run <config> [--override k=v ...] [--output-dir DIR] [--quiet]
//   sflsim compare <config> --strategies a,b --seeds 1,2,3 [...]

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfl/config.hpp"
#include "sfl/output.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, output_dir, strategies_csv, seeds_csv;
  std::vector<std::string> overrides;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--override", overrides, "key=value config overrides");
  run->add_option("--output-dir", output_dir, "output directory");
  run->add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* compare =
      app.add_subcommand("compare", "run a strategy x seed comparison");
  compare->add_option("config", config_path, "config file")->required();
  compare->add_option("--strategies", strategies_csv, "comma-separated list")
      ->required();
  compare->add_option("--seeds", seeds_csv, "comma-separated seed list")
      ->required();
  compare->add_option("--override", overrides, "key=value config overrides");
  compare->add_option("--output-dir", output_dir, "output directory");
  compare->add_flag("--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    sfl::ExperimentConfig cfg = sfl::parse_config(config_path);
    sfl::apply_overrides(cfg, overrides);
    if (!output_dir.empty()) cfg.output_dir = output_dir;

    if (run->parsed()) {
      return sfl::cmd_run(cfg, cfg.output_dir + "/" + cfg.name, quiet);
    }
    std::vector<std::uint64_t> seeds;
    for (const std::string& s : split_csv(seeds_csv))
      seeds.push_back(std::stoull(s));
    return sfl::cmd_compare(cfg, split_csv(strategies_csv), seeds,
                            cfg.output_dir, quiet);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
