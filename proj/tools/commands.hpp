#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sango/config.hpp"
#include "sango/world.hpp"

namespace sango::cli {

/// Writes <out>/manifest.cfg, <out>/curve.csv, <out>/checkpoints/step_<N>.ckpt
/// for every saved checkpoint and <out>/policy.ckpt (the last one).
void cmd_train(const ExperimentManifest& manifest, std::ostream& progress);

/// Greedy evaluation of manifest.checkpoint. Writes <out>/eval_table.{txt,csv},
/// <out>/episodes.csv and per-episode logs and worlds under <out>/logs; the
/// first `trace_episodes` episodes also get trajectory and cluster traces.
void cmd_eval(const ExperimentManifest& manifest, std::ostream& out, int trace_episodes = 3);

struct AblationArms {
  std::string with_grouping;     // checkpoint
  std::string without_grouping;  // checkpoint
  bool train_both = false;
};

/// Evaluates both arms on the same seeds, the grouping arm with grouping on
/// and the other with it off. Writes <out>/ablation_table.{txt,csv} and
/// <out>/ablation_stats.txt. Throws MissingArm when a checkpoint is missing
/// and train_both is off.
void cmd_ablate(const ExperimentManifest& manifest, const AblationArms& arms, std::ostream& out);

struct ReplayRequest {
  std::string log;
  std::string world;
  std::string trajectories;  // optional
  std::string clusters;      // optional
  std::string out_dir = ".";
  int frames = 4;
  int cell_pixels = 16;
};

/// Renders PNG frames at evenly spaced steps (always including the last);
/// returns the written paths.
std::vector<std::string> cmd_replay(const ReplayRequest& request);

struct ImportRequest {
  std::string image;
  std::string output;
  BlueprintParams params;
  double meters_per_cell = 0.1;
};

void cmd_import_blueprint(const ImportRequest& request, std::ostream& out);

}  // namespace sango::cli
