#include "skyseg/labels.hpp"

#include <algorithm>
#include <cmath>

#include "skyseg/errors.hpp"

namespace skyseg {

void ClassMap::validate() const {
  if (to_target.size() != source_names.size())
    throw ConfigError("ClassMap: mapping does not cover the source alphabet");
  for (std::uint8_t t : to_target)
    if (t >= target_names.size()) throw ConfigError("ClassMap: target index out of range");
}

const std::vector<std::string>& dense20_names() {
  static const std::vector<std::string> names = {
      "low-vegetation", "paved-road", "non-paved-road", "paved-parking-place",
      "non-paved-parking-place", "bikeway", "sidewalk", "entrance-exit",
      "danger-area", "lane-marking", "building", "car", "van", "truck",
      "long-truck", "bus", "trailer", "clutter", "impervious-surface", "tree"};
  return names;
}

const std::vector<std::string>& potsdam6_names() {
  static const std::vector<std::string> names = {
      "impervious-surface", "building", "low-vegetation", "tree", "vehicle", "clutter"};
  return names;
}

const std::vector<std::string>& category11_names() {
  static const std::vector<std::string> names = {
      "nature", "driving-area", "parking-area", "human-area", "shared-area",
      "road-feature", "residential", "dynamic-vehicle", "static-vehicle",
      "man-made-surface", "others"};
  return names;
}

const std::vector<std::string>& lane13_names() {
  static const std::vector<std::string> names = {
      "non-lane", "dash-line", "long-line", "small-dash-line", "turn-sign",
      "plus-sign", "other-signs", "crosswalk", "stop-line", "zebra-zone",
      "no-parking-zone", "parking-space", "other-lane-markings"};
  return names;
}

const std::vector<std::string>& class_set_names(const std::string& class_set) {
  if (class_set == "dense20") return dense20_names();
  if (class_set == "potsdam6") return potsdam6_names();
  if (class_set == "category11") return category11_names();
  if (class_set == "lane13") return lane13_names();
  throw ConfigError("unknown class set: " + class_set);
}

ClassMap dense20_to_potsdam6() {
  ClassMap m;
  m.source_names = dense20_names();
  m.target_names = potsdam6_names();
  m.to_target = {2,  // low-vegetation -> low-vegetation
                 0,  // paved-road -> impervious-surface
                 0,  // non-paved-road
                 0,  // paved-parking-place
                 0,  // non-paved-parking-place
                 0,  // bikeway
                 0,  // sidewalk
                 0,  // entrance-exit
                 0,  // danger-area
                 0,  // lane-marking
                 1,  // building -> building
                 4,  // car -> vehicle
                 4,  // van
                 4,  // truck
                 4,  // long-truck
                 4,  // bus
                 5,  // trailer -> clutter
                 5,  // clutter -> clutter
                 0,  // impervious-surface
                 3}; // tree -> tree
  m.validate();
  return m;
}

ClassMap dense20_to_category11() {
  ClassMap m;
  m.source_names = dense20_names();
  m.target_names = category11_names();
  m.to_target = {0,   // low-vegetation -> nature
                 1,   // paved-road -> driving-area
                 1,   // non-paved-road
                 2,   // paved-parking-place -> parking-area
                 2,   // non-paved-parking-place
                 3,   // bikeway -> human-area
                 3,   // sidewalk
                 4,   // entrance-exit -> shared-area
                 3,   // danger-area -> human-area
                 5,   // lane-marking -> road-feature
                 6,   // building -> residential
                 7,   // car -> dynamic-vehicle
                 7,   // van
                 7,   // truck
                 7,   // long-truck
                 7,   // bus
                 8,   // trailer -> static-vehicle
                 10,  // clutter -> others
                 9,   // impervious-surface -> man-made-surface
                 0};  // tree -> nature
  m.validate();
  return m;
}

LabelMap merge_classes(const LabelMap& mask, const ClassMap& map) {
  map.validate();
  LabelMap out = mask;
  for (auto& v : out.v) {
    if (v >= map.to_target.size())
      throw DataError("merge_classes: label " + std::to_string(v) +
                      " outside the source alphabet");
    v = map.to_target[v];
  }
  return out;
}

EdgeMaps derive_edges(const LabelMap& mask, std::size_t radius) {
  if (radius < 1) throw ConfigError("derive_edges: radius must be >= 1");
  const std::size_t h = mask.h, w = mask.w;
  LabelMap seed = LabelMap::filled(h, w, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::uint8_t v = mask.at(y, x);
      bool edge = (y > 0 && mask.at(y - 1, x) != v) ||
                  (y + 1 < h && mask.at(y + 1, x) != v) ||
                  (x > 0 && mask.at(y, x - 1) != v) ||
                  (x + 1 < w && mask.at(y, x + 1) != v);
      if (edge) seed.at(y, x) = 1;
    }
  }
  EdgeMaps out{LabelMap::filled(h, w, 0), LabelMap::filled(h, w, 0)};
  const std::ptrdiff_t r = std::ptrdiff_t(radius) - 1;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      bool hit = false;
      for (std::ptrdiff_t dy = -r; dy <= r && !hit; ++dy) {
        std::ptrdiff_t yy = std::ptrdiff_t(y) + dy;
        if (yy < 0 || yy >= std::ptrdiff_t(h)) continue;
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
          std::ptrdiff_t xx = std::ptrdiff_t(x) + dx;
          if (xx < 0 || xx >= std::ptrdiff_t(w)) continue;
          if (seed.at(std::size_t(yy), std::size_t(xx))) {
            hit = true;
            break;
          }
        }
      }
      if (hit) {
        out.binary.at(y, x) = 1;
        out.multi.at(y, x) = mask.at(y, x);
      }
    }
  }
  return out;
}

void flip_augment(Image& img, LabelMap& mask, FlipMode mode) {
  if (img.h != mask.h || img.w != mask.w)
    throw ShapeError("flip_augment: image/mask dims differ");
  if (mode == FlipMode::Horizontal) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < img.h; ++y)
        for (std::size_t x = 0; x < img.w / 2; ++x)
          std::swap(img.at(c, y, x), img.at(c, y, img.w - 1 - x));
    for (std::size_t y = 0; y < mask.h; ++y)
      for (std::size_t x = 0; x < mask.w / 2; ++x)
        std::swap(mask.at(y, x), mask.at(y, mask.w - 1 - x));
  } else {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < img.h / 2; ++y)
        for (std::size_t x = 0; x < img.w; ++x)
          std::swap(img.at(c, y, x), img.at(c, img.h - 1 - y, x));
    for (std::size_t y = 0; y < mask.h / 2; ++y)
      for (std::size_t x = 0; x < mask.w; ++x)
        std::swap(mask.at(y, x), mask.at(mask.h - 1 - y, x));
  }
}

namespace {

std::size_t scaled_dim(std::size_t d, double factor) {
  auto n = std::llround(double(d) * factor);
  return n < 1 ? 1 : std::size_t(n);
}

double check_factor(double source_gsd, double target_gsd) {
  if (!(source_gsd > 0.0) || !(target_gsd > 0.0))
    throw ConfigError("rescale_gsd: GSDs must be positive");
  return source_gsd / target_gsd;
}

}  // namespace

Image rescale_gsd(const Image& img, double source_gsd, double target_gsd) {
  double f = check_factor(source_gsd, target_gsd);
  if (f == 1.0) return img;
  std::size_t oh = scaled_dim(img.h, f), ow = scaled_dim(img.w, f);
  Image out = Image::blank(oh, ow);
  for (std::size_t y = 0; y < oh; ++y) {
    double sy = (double(y) + 0.5) / f - 0.5;
    sy = std::clamp(sy, 0.0, double(img.h - 1));
    std::size_t y0 = std::size_t(sy);
    std::size_t y1 = std::min(y0 + 1, img.h - 1);
    double fy = sy - double(y0);
    for (std::size_t x = 0; x < ow; ++x) {
      double sx = (double(x) + 0.5) / f - 0.5;
      sx = std::clamp(sx, 0.0, double(img.w - 1));
      std::size_t x0 = std::size_t(sx);
      std::size_t x1 = std::min(x0 + 1, img.w - 1);
      double fx = sx - double(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        double top = double(img.at(c, y0, x0)) * (1 - fx) + double(img.at(c, y0, x1)) * fx;
        double bot = double(img.at(c, y1, x0)) * (1 - fx) + double(img.at(c, y1, x1)) * fx;
        out.at(c, y, x) = std::uint8_t(std::clamp(std::lround(top * (1 - fy) + bot * fy),
                                                  0l, 255l));
      }
    }
  }
  return out;
}

LabelMap rescale_gsd(const LabelMap& mask, double source_gsd, double target_gsd) {
  double f = check_factor(source_gsd, target_gsd);
  if (f == 1.0) return mask;
  std::size_t oh = scaled_dim(mask.h, f), ow = scaled_dim(mask.w, f);
  LabelMap out = LabelMap::filled(oh, ow, 0);
  auto nearest = [f](std::size_t i, std::size_t limit) {
    double s = std::clamp((double(i) + 0.5) / f - 0.5, 0.0, double(limit - 1));
    return std::size_t(std::llround(s));
  };
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      out.at(y, x) = mask.at(nearest(y, mask.h), nearest(x, mask.w));
  return out;
}

}  // namespace skyseg
