#include "histoconv/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "histoconv/rng.hpp"

namespace fs = std::filesystem;

namespace histoconv {

namespace {

constexpr char kManifestHeader[] = "histoconv-manifest v1";

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpeg" || ext == ".jpg" || ext == ".png";
}

// Largest-remainder apportionment of `count` items to the three ratios.
std::array<std::int64_t, 3> apportion(std::int64_t count, const SplitRatios& r) {
  const std::array<double, 3> want = {r.train * count, r.val * count, r.test * count};
  std::array<std::int64_t, 3> got{};
  std::int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    got[i] = static_cast<std::int64_t>(std::floor(want[i]));
    assigned += got[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return want[a] - double(got[a]) > want[b] - double(got[b]);
  });
  for (int i = 0; assigned < count; ++i, ++assigned) ++got[order[i % 3]];
  return got;
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw Error("invalid split value");
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw Error("unknown split name: " + name);
}

void SplitRatios::validate() const {
  if (train <= 0 || val <= 0 || test <= 0)
    throw Error("split ratios must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9)
    throw Error("split ratios must sum to 1");
}

std::vector<std::int64_t> DatasetManifest::split_indices(Split s) const {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < std::int64_t(entries.size()); ++i)
    if (entries[std::size_t(i)].split == s) out.push_back(i);
  return out;
}

std::int64_t DatasetManifest::split_count(Split s) const {
  return std::int64_t(std::count_if(entries.begin(), entries.end(),
                                    [&](const DatasetEntry& e) { return e.split == s; }));
}

std::vector<std::pair<std::string, std::int64_t>> scan_dataset(
    const std::string& root_dir, const std::vector<std::string>& class_subdirs) {
  if (!fs::is_directory(root_dir)) throw Error("dataset root is not a directory: " + root_dir);
  if (class_subdirs.empty()) throw Error("no class subdirectories given");

  std::vector<std::pair<std::string, std::int64_t>> items;
  for (std::int64_t ci = 0; ci < std::int64_t(class_subdirs.size()); ++ci) {
    const fs::path dir = fs::path(root_dir) / class_subdirs[std::size_t(ci)];
    if (!fs::is_directory(dir))
      throw Error("class directory missing: " + dir.string());

    std::vector<std::string> paths;
    for (const auto& de : fs::directory_iterator(dir)) {
      if (de.is_regular_file() && has_image_extension(de.path())) {
        paths.push_back(de.path().string());
      } else {
        std::cerr << "warning: skipping non-image entry " << de.path().string() << "\n";
      }
    }
    if (paths.empty())
      throw Error("class directory has no images: " + class_subdirs[std::size_t(ci)]);

    std::sort(paths.begin(), paths.end());
    for (auto& p : paths) items.emplace_back(std::move(p), ci);
  }
  return items;
}

DatasetManifest split_stratified(
    const std::vector<std::string>& classes,
    const std::vector<std::pair<std::string, std::int64_t>>& items, const SplitRatios& ratios,
    std::uint64_t seed) {
  ratios.validate();
  if (classes.empty()) throw Error("split requires at least one class");

  // Positions of each class's items in the (already sorted) inventory.
  std::vector<std::vector<std::int64_t>> by_class(classes.size());
  for (std::int64_t i = 0; i < std::int64_t(items.size()); ++i) {
    const std::int64_t ci = items[std::size_t(i)].second;
    if (ci < 0 || ci >= std::int64_t(classes.size()))
      throw Error("item class index out of range: " + items[std::size_t(i)].first);
    by_class[std::size_t(ci)].push_back(i);
  }

  DatasetManifest m;
  m.classes = classes;
  m.seed = seed;
  m.ratios = ratios;
  m.entries.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    m.entries[i].path = items[i].first;
    m.entries[i].class_index = items[i].second;
  }

  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    auto& positions = by_class[ci];
    if (positions.empty()) throw Error("class has no items: " + classes[ci]);

    auto rng = derive_stream(seed, RngStream::split, std::uint64_t(ci));
    std::shuffle(positions.begin(), positions.end(), rng);

    auto counts = apportion(std::int64_t(positions.size()), ratios);
    if (counts[0] == 0) {
      std::cerr << "warning: class " << classes[ci]
                << " is too small for the requested split; forcing one training item\n";
      int donor = counts[1] >= counts[2] ? 1 : 2;
      --counts[donor];
      ++counts[0];
    }

    std::int64_t k = 0;
    for (int s = 0; s < 3; ++s)
      for (std::int64_t j = 0; j < counts[std::size_t(s)]; ++j, ++k)
        m.entries[std::size_t(positions[std::size_t(k)])].split = static_cast<Split>(s);
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: keep line endings exact
  if (!out) throw Error("cannot open manifest for writing: " + path);

  out << kManifestHeader << "\n";
  out << "seed " << manifest.seed << "\n";
  std::ostringstream ratios;
  ratios.precision(17);
  ratios << manifest.ratios.train << " " << manifest.ratios.val << " " << manifest.ratios.test;
  out << "ratios " << ratios.str() << "\n";
  out << "classes";
  for (const auto& c : manifest.classes) out << " " << c;
  out << "\n";
  for (const auto& e : manifest.entries)
    out << e.path << "\t" << e.class_index << "\t" << split_name(e.split) << "\n";
  if (!out) throw Error("failed writing manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    throw Error("not a manifest file (bad header): " + path);

  DatasetManifest m;
  if (!std::getline(in, line) || line.rfind("seed ", 0) != 0)
    throw Error("manifest missing seed line: " + path);
  m.seed = std::stoull(line.substr(5));

  if (!std::getline(in, line) || line.rfind("ratios ", 0) != 0)
    throw Error("manifest missing ratios line: " + path);
  {
    std::istringstream is(line.substr(7));
    if (!(is >> m.ratios.train >> m.ratios.val >> m.ratios.test))
      throw Error("manifest has malformed ratios: " + path);
  }

  if (!std::getline(in, line) || line.rfind("classes ", 0) != 0)
    throw Error("manifest missing classes line: " + path);
  {
    std::istringstream is(line.substr(8));
    std::string name;
    while (is >> name) m.classes.push_back(name);
  }
  if (m.classes.empty()) throw Error("manifest lists no classes: " + path);

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw Error("manifest has malformed record: " + line);
    DatasetEntry e;
    e.path = line.substr(0, t1);
    e.class_index = std::stoll(line.substr(t1 + 1, t2 - t1 - 1));
    e.split = split_from_name(line.substr(t2 + 1));
    if (e.class_index < 0 || e.class_index >= std::int64_t(m.classes.size()))
      throw Error("manifest record has out-of-range class index: " + line);
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace histoconv
