#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sango/env.hpp"
#include "sango/learn.hpp"

namespace sango {

/// Everything one experiment needs. The text form is one `key = value` per
/// line with `#` comments; `scenario = <preset>` is applied before any other
/// key regardless of its position, so overrides always win.
struct ExperimentManifest {
  ScenarioConfig scenario = scenario_preset("cog_simple");
  TrainConfig train;
  std::string output_dir = "out";
  std::string checkpoint;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 1000;
  /// Explicit evaluation seeds; when set they override eval_episodes and eval_seed.
  std::vector<std::uint64_t> eval_seeds;
  int eval_threads = 1;

  /// Throws InvalidConfig.
  void validate() const;
  EvalOptions eval_options() const;
};

/// Sets one key; throws InvalidConfig for unknown keys or malformed values.
void set_manifest_value(ExperimentManifest& manifest, std::string_view key, std::string_view value);

/// Throws ParseError naming the line.
ExperimentManifest parse_manifest(std::istream& in);
/// Throws IoError or ParseError.
ExperimentManifest load_manifest(const std::string& path);

/// Every key in sorted order with round-trippable values.
std::string canonical_text(const ExperimentManifest& manifest);
void write_manifest(std::ostream& out, const ExperimentManifest& manifest);

/// Hash of the scenario and training keys; stamped into checkpoints.
std::uint64_t config_hash(const ExperimentManifest& manifest);

}  // namespace sango
