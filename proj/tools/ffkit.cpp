// ffkit: fluency/faithfulness corpus analysis pipeline.
//
//   ffkit --config run.conf                  # whole pipeline
//   ffkit --config run.conf --stage filter   # one stage on prior artifacts
//   ffkit train-cv --config run.conf --seed 7 --out /tmp/out
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 stage failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ff/errors.hpp"
#include "ff/pipeline.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitStage = 3;

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string stage = "all";
  std::string grid;
};

void add_common(CLI::App& app, Options& opt) {
  app.add_option("--config", opt.config_path, "Pipeline config file (key = value)")->required();
  app.add_option("--out", opt.out, "Output directory (overrides output_dir)");
  app.add_option("--seed", opt.seed, "Seed override");
}

int run(const Options& opt, ff::Stage stage) {
  auto config = ff::PipelineConfig::load(opt.config_path);
  if (!opt.out.empty()) config.output_dir = opt.out;
  if (opt.seed) config.seed = *opt.seed;

  std::vector<ff::GridCell> grid;
  if (!opt.grid.empty()) grid = ff::parse_grid(opt.grid);
  if (stage == ff::Stage::grid && grid.empty()) grid = ff::full_grid();

  const auto outcome = ff::run_stage(config, stage, grid);
  std::cout << fmt::format("{}: ok ({} artifacts in {})\n", ff::to_string(stage), outcome.artifacts.size(),
                           outcome.output_dir.string());
  if (stage == ff::Stage::report || stage == ff::Stage::all) {
    for (const auto& a : outcome.artifacts) std::cout << "  " << a << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluency/faithfulness analysis of translated paragraphs"};
  app.require_subcommand(0, 1);

  Options opt;
  add_common(app, opt);
  app.add_option("--stage", opt.stage, "Stage to run: ingest-check, filter, sample, train-cv, correlate, grid, report, all")
      ->check(CLI::IsMember({"ingest-check", "filter", "sample", "train-cv", "correlate", "grid", "report", "all"}));
  app.add_option("--grid", opt.grid, "Variant grid, e.g. tfidf:downsampled,count:full");
  // The top-level --config is required only when no subcommand is given.
  app.get_option("--config")->required(false);

  std::vector<std::pair<CLI::App*, ff::Stage>> subcommands;
  Options sub_opt;
  for (const auto* name : {"ingest-check", "filter", "sample", "train-cv", "correlate", "grid", "report"}) {
    auto* sub = app.add_subcommand(name, fmt::format("Run the {} stage", name));
    add_common(*sub, sub_opt);
    if (std::string_view(name) == "grid") sub->add_option("--grid", sub_opt.grid, "Variant grid cells");
    subcommands.emplace_back(sub, *ff::parse_stage(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& [sub, stage] : subcommands) {
      if (sub->parsed()) return run(sub_opt, stage);
    }
    if (opt.config_path.empty()) {
      std::cerr << "ffkit: --config is required\n";
      return kExitConfig;
    }
    return run(opt, *ff::parse_stage(opt.stage));
  } catch (const ff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ff::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ff::StageError& e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return kExitStage;
  }
}
