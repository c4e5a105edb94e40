#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "resicomp/experiment.hpp"
#include "resicomp/image.hpp"

namespace resicomp {

// Sweep description. Config text is INI-like:
//
//   [sweep]
//   images = synthetic:10        # or a directory of .pgm/.ppm files
//   modes = LC, ISC, MDC, SLC
//   N_d = 2
//   L = 10, 32
//   presets = EP1, EP5
//   fec = 7:3
//   repetitions = 5
//   [codec]
//   quality = 33
//
// Keys are listed in config_keys(). Lists are comma separated; '#' starts a
// comment.
struct SweepSpec {
  std::string images = "synthetic:10";
  std::pair<int, int> synthetic_size{128, 192};  // height, width
  std::vector<ModeKind> modes{ModeKind::kLc};
  std::optional<int> n_d;
  int enhancement_layers = 1;
  std::vector<int> slices{10};
  std::optional<double> beta;  // mode default when unset
  std::vector<std::string> presets{"EP1", "EP2", "EP3", "EP4", "EP5", "EP6"};
  std::vector<std::pair<int, int>> fec;
  std::vector<int> uep_protect;  // one-based slice indices
  int repetitions = 1;
  std::string output = "sweep.csv";
  uint64_t seed = 0;
  int jobs = 1;
  CodecConfig codec;

  // Throws InvalidArgument naming the offending key.
  void validate() const;
  std::vector<Scheme> schemes() const;
};

// (section, key) pairs accepted by the parser.
const std::vector<std::pair<std::string, std::string>>& config_keys();

// Parse errors carry "<origin>:<line>:"; the result is validated.
SweepSpec parse_config_text(const std::string& text, const std::string& origin = "config");
SweepSpec parse_config(const std::filesystem::path& path);
// "key=value" or "section.key=value"; used for command-line overrides.
void apply_override(SweepSpec& spec, const std::string& assignment);

// Episode seed for (image, repetition, preset).
uint64_t episode_seed(uint64_t master, uint64_t image_index, uint64_t repetition, uint64_t preset_index);

struct SweepImage {
  uint64_t id = 0;
  std::string name;
  Image image;
};

std::vector<SweepImage> load_sweep_images(const SweepSpec& spec);

// Runs every (image, scheme, preset, repetition) episode; rows come back in
// that nesting order regardless of the job count.
std::vector<EpisodeResult> run_sweep(const SweepSpec& spec, const std::vector<SweepImage>& images,
                                     const PriorModel& prior);

// Mean PSNR per scheme and preset, decode-failure ratio and mean bpp per
// scheme.
void write_summary(std::ostream& out, const SweepSpec& spec, const std::vector<EpisodeResult>& rows);

}  // namespace resicomp
