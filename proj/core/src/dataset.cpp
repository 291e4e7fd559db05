#include "skyseg/dataset.hpp"

#include <fstream>
#include <sstream>

#include "skyseg/errors.hpp"
#include "skyseg/labels.hpp"

namespace skyseg {

Dataset Dataset::open(const std::filesystem::path& root) {
  Dataset ds;
  ds.root = root;
  std::ifstream in(root / "manifest.txt");
  if (!in) throw DataError("cannot open manifest: " + (root / "manifest.txt").string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SampleInfo s;
    std::string field;
    if (!std::getline(ls, s.id, ',')) throw DataError("manifest: bad line: " + line);
    try {
      if (!std::getline(ls, field, ',')) throw std::invalid_argument(field);
      s.width = std::stoul(field);
      if (!std::getline(ls, field, ',')) throw std::invalid_argument(field);
      s.height = std::stoul(field);
    } catch (const std::invalid_argument&) {
      throw DataError("manifest: bad dims in line: " + line);
    }
    if (!std::getline(ls, s.class_set)) throw DataError("manifest: missing class set: " + line);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw DataError("manifest is empty: " + root.string());
  return ds;
}

Image Dataset::image(std::size_t i) const {
  return read_ppm(root / "images" / (samples.at(i).id + ".ppm"));
}

LabelMap Dataset::mask(std::size_t i) const {
  return read_pgm(root / "masks" / (samples.at(i).id + ".pgm"));
}

void write_manifest(const std::filesystem::path& root,
                    const std::vector<SampleInfo>& samples) {
  auto tmp = root / "manifest.txt.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest: " + tmp.string());
    for (const auto& s : samples)
      out << s.id << ',' << s.width << ',' << s.height << ',' << s.class_set << '\n';
  }
  std::filesystem::rename(tmp, root / "manifest.txt");
}

std::vector<LabelMap> branch_label_maps(Task task, const LabelMap& mask) {
  switch (task) {
    case Task::Dense20: {
      auto edges = derive_edges(mask);
      return {mask, std::move(edges.multi), std::move(edges.binary)};
    }
    case Task::Lane13: {
      // lane classes from the dense alphabet: lane-marking pixels become the
      // first marking class, everything else is non-lane
      LabelMap sem = mask;
      for (auto& v : sem.v) v = v == 9 ? 1 : 0;
      LabelMap bin = sem;
      for (auto& v : bin.v) v = v != 0;
      return {std::move(sem), std::move(bin)};
    }
    case Task::Category11:
      return {merge_classes(mask, dense20_to_category11())};
    case Task::EdgeBinary:
      return {derive_edges(mask).binary};
    case Task::EdgeMulti:
      return {derive_edges(mask).multi};
  }
  throw ConfigError("unknown task");
}

}  // namespace skyseg
