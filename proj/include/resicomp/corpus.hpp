#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "resicomp/image.hpp"

namespace resicomp {

// splitmix64 finalizer; also used to derive per-episode seeds.
uint64_t mix64(uint64_t x);
uint64_t hash64(std::initializer_list<uint64_t> parts);

// Deterministic natural-looking test image: smooth gradient, low-frequency
// waves, a handful of hard-edged shapes, light texture and sensor noise.
Image synthetic_image(uint64_t index, int height = 128, int width = 192, int planes = 1,
                      uint64_t seed = 0);
std::vector<Image> synthetic_corpus(int count, int height = 128, int width = 192, int planes = 1,
                                    uint64_t seed = 0);

// Every *.ppm / *.pgm file in `dir`, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace resicomp
