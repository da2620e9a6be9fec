// gauge: read fixtures, evaluate batches and generate synthetic scenes.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaugereader/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Analog gauge reading from structured detections"};
  app.require_subcommand(1);

  std::vector<std::string> read_paths;
  std::string read_config;
  bool as_table = false;
  auto* read = app.add_subcommand("read", "Compute readings for fixture files");
  read->add_option("paths", read_paths, "Fixture JSON files")->required();
  read->add_option("--config", read_config, "Pipeline config JSON");
  auto* json_flag = read->add_flag("--json", "JSON report output (default)");
  read->add_flag("--table", as_table, "One text line per fixture")->excludes(json_flag);

  std::string manifest, eval_config, eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a manifest of fixtures or scenes");
  eval->add_option("manifest", manifest, "Manifest JSON")->required();
  eval->add_option("--config", eval_config, "Pipeline config JSON");
  eval->add_option("--out", eval_out, "Write the summary JSON here");

  std::string gen_input, out_dir = ".";
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("generate", "Generate fixtures from a scene spec or manifest");
  gen->add_option("spec", gen_input, "Scene spec or manifest JSON")->required();
  gen->add_option("--seed", seed, "Base seed for perturbations without their own");
  gen->add_option("--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gauge::cli::kUsageOrIo;
  }

  auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
  if (read->parsed()) return gauge::cli::cmd_read(read_paths, opt(read_config), as_table, std::cout, std::cerr);
  if (eval->parsed()) return gauge::cli::cmd_eval(manifest, opt(eval_config), opt(eval_out), std::cout, std::cerr);
  return gauge::cli::cmd_generate(gen_input, seed, out_dir, std::cout, std::cerr);
}
