#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "histoconv/tensor.hpp"

namespace histoconv {

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct DatasetEntry {
  std::string path;
  std::int64_t class_index = 0;
  Split split = Split::train;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  void validate() const;  // positive and summing to 1
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<DatasetEntry> entries;  // lexicographic scan order, split-tagged
  std::uint64_t seed = 0;
  SplitRatios ratios;

  // Indices into entries belonging to one split, in stored order.
  std::vector<std::int64_t> split_indices(Split s) const;
  std::int64_t split_count(Split s) const;
};

// Walks <root>/<class_subdir>/* for image files (.jpeg/.jpg/.png, any case)
// and returns (path, class_index) pairs sorted lexicographically per class.
// Non-image files are skipped with a warning on stderr.
std::vector<std::pair<std::string, std::int64_t>> scan_dataset(
    const std::string& root_dir, const std::vector<std::string>& class_subdirs);

// Stratified split: shuffles each class with a stream derived from the seed,
// then assigns contiguous runs of the shuffled order to train/val/test with
// largest-remainder rounding, so each class is within one item of the ratios.
DatasetManifest split_stratified(const std::vector<std::string>& classes,
                                 const std::vector<std::pair<std::string, std::int64_t>>& items,
                                 const SplitRatios& ratios, std::uint64_t seed);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace histoconv
