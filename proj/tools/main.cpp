#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sango/error.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::optional<int> episodes;
  std::optional<int> threads;
  std::string checkpoint;
  std::string out;
  bool no_grouping = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Key-value manifest file");
  cmd->add_option("--scenario", f.scenario, "Scenario preset; replaces any preset in the config");
  cmd->add_option("--seed", f.seed, "Training and evaluation seed");
  cmd->add_option("--steps", f.steps, "Training environment steps");
  cmd->add_option("--episodes", f.episodes, "Evaluation episodes");
  cmd->add_option("--threads", f.threads, "Evaluation worker threads");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--no-grouping", f.no_grouping, "Disable dynamic grouping");
}

sango::ExperimentManifest build_manifest(const CommonFlags& f) {
  std::ostringstream text;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw sango::Error(sango::ErrorCode::IoError, "cannot read config '" + f.config + "'");
    text << in.rdbuf() << '\n';
  }
  // Later "scenario" lines win, and every other key is applied after them.
  if (!f.scenario.empty()) text << "scenario = " << f.scenario << '\n';
  std::istringstream in(text.str());
  sango::ExperimentManifest m = sango::parse_manifest(in);
  if (f.seed) {
    m.train.seed = *f.seed;
    m.eval_seed = *f.seed;
  }
  if (f.steps) m.train.total_steps = *f.steps;
  if (f.episodes) m.eval_episodes = *f.episodes;
  if (f.threads) m.eval_threads = *f.threads;
  if (!f.checkpoint.empty()) m.checkpoint = f.checkpoint;
  if (!f.out.empty()) m.output_dir = f.out;
  if (f.no_grouping) m.scenario.grouping_enabled = false;
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-world social navigation: training, evaluation, ablation and replay"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, ablate_flags;
  CLI::App* train = app.add_subcommand("train", "Train a policy and write checkpoints and a learning curve");
  add_common(train, train_flags);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint to evaluate");
  int trace_episodes = 3;
  eval->add_option("--trace-episodes", trace_episodes, "Episodes that also get trajectory and cluster traces");

  CLI::App* ablate = app.add_subcommand("ablate", "Compare agents trained with and without grouping");
  add_common(ablate, ablate_flags);
  sango::cli::AblationArms arms;
  ablate->add_option("--with-grouping", arms.with_grouping, "Checkpoint trained with grouping");
  ablate->add_option("--without-grouping", arms.without_grouping, "Checkpoint trained without grouping");
  ablate->add_flag("--train-both", arms.train_both, "Train both arms first");

  CLI::App* replay = app.add_subcommand("replay", "Render an episode log to PNG frames");
  sango::cli::ReplayRequest replay_req;
  replay->add_option("--log", replay_req.log, "Episode log CSV")->required();
  replay->add_option("--world", replay_req.world, "World file")->required();
  replay->add_option("--trajectories", replay_req.trajectories, "Obstacle trajectory trace CSV");
  replay->add_option("--clusters", replay_req.clusters, "Cluster trace CSV");
  replay->add_option("--out", replay_req.out_dir, "Output directory");
  replay->add_option("--frames", replay_req.frames, "Number of frames");
  replay->add_option("--cell-pixels", replay_req.cell_pixels, "Pixels per grid cell");

  CLI::App* import = app.add_subcommand("import-blueprint", "Convert a grayscale floor plan into a world file");
  sango::cli::ImportRequest import_req;
  import->add_option("--image", import_req.image, "PNG or PGM image")->required();
  import->add_option("--out", import_req.output, "World file to write")->required();
  import->add_option("--threshold", import_req.params.pixel_threshold, "Pixels darker than this are obstacles");
  import->add_option("--dilation", import_req.params.dilation_radius, "Obstacle dilation radius in cells");
  import->add_option("--min-area", import_req.params.min_component_area, "Smallest obstacle component kept");
  import->add_option("--meters-per-cell", import_req.meters_per_cell, "World scale");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      sango::cli::cmd_train(build_manifest(train_flags), std::cout);
    } else if (*eval) {
      sango::cli::cmd_eval(build_manifest(eval_flags), std::cout, trace_episodes);
    } else if (*ablate) {
      sango::cli::cmd_ablate(build_manifest(ablate_flags), arms, std::cout);
    } else if (*replay) {
      for (const std::string& path : sango::cli::cmd_replay(replay_req)) std::cout << "wrote " << path << '\n';
    } else if (*import) {
      sango::cli::cmd_import_blueprint(import_req, std::cout);
    }
  } catch (const sango::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
