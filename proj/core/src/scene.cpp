#include "skyseg/scene.hpp"

#include <algorithm>
#include <random>

#include "skyseg/errors.hpp"

namespace skyseg {

namespace {

// dense20 labels used by the generator
constexpr std::uint8_t kVeg = 0, kRoad = 1, kSidewalk = 6, kMarking = 9,
                       kBuilding = 10, kCar = 11;

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb base_color(std::uint8_t label) {
  switch (label) {
    case kVeg: return {62, 122, 48};
    case kRoad: return {72, 72, 78};
    case kSidewalk: return {156, 152, 148};
    case kMarking: return {242, 240, 216};
    case kBuilding: return {168, 82, 58};
    case kCar: return {36, 70, 198};
  }
  return {0, 0, 0};
}

struct Band {
  bool horizontal;
  std::size_t lo, hi;  // inclusive pixel range across the band
};

void fill_rect(LabelMap& mask, std::size_t y0, std::size_t y1, std::size_t x0,
               std::size_t x1, std::uint8_t label) {
  y1 = std::min(y1, mask.h);
  x1 = std::min(x1, mask.w);
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) mask.at(y, x) = label;
}

}  // namespace

LabeledScene generate_scene(const SceneSpec& spec) {
  if (spec.height < 8 || spec.width < 8)
    throw ConfigError("generate_scene: canvas must be at least 8x8");
  std::mt19937_64 rng(spec.seed);
  const std::size_t h = spec.height, w = spec.width;
  const std::size_t dim = std::min(h, w);

  LabelMap mask = LabelMap::filled(h, w, kVeg);

  // densities are expected primitive counts; primitive sizes scale with the
  // canvas, so the same density works at 64 and at 512
  auto count_of = [&](double density) {
    std::size_t n = std::size_t(density);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < density - double(n)) ++n;
    return n;
  };

  // buildings under the roads
  std::size_t n_buildings = count_of(spec.building_density);
  for (std::size_t i = 0; i < n_buildings; ++i) {
    std::uniform_int_distribution<std::size_t> side(dim / 8, std::max<std::size_t>(dim / 8, dim / 4));
    std::size_t bh = side(rng), bw = side(rng);
    std::uniform_int_distribution<std::size_t> py(0, h - 1), px(0, w - 1);
    std::size_t y0 = py(rng), x0 = px(rng);
    fill_rect(mask, y0, y0 + bh, x0, x0 + bw, kBuilding);
  }

  // road bands with sidewalks on both sides
  std::vector<Band> bands;
  std::size_t n_roads = count_of(spec.road_density);
  std::size_t walk = std::max<std::size_t>(1, dim / 24);
  for (std::size_t i = 0; i < n_roads; ++i) {
    bool horizontal = rng() & 1;
    std::size_t extent = horizontal ? h : w;
    std::uniform_int_distribution<std::size_t> wd(std::max<std::size_t>(3, dim / 10),
                                                  std::max<std::size_t>(3, dim / 6));
    std::size_t width = wd(rng);
    std::uniform_int_distribution<std::size_t> pos(0, extent - width);
    std::size_t lo = pos(rng);
    if (horizontal) {
      fill_rect(mask, lo >= walk ? lo - walk : 0, lo + width + walk, 0, w, kSidewalk);
      fill_rect(mask, lo, lo + width, 0, w, kRoad);
    } else {
      fill_rect(mask, 0, h, lo >= walk ? lo - walk : 0, lo + width + walk, kSidewalk);
      fill_rect(mask, 0, h, lo, lo + width, kRoad);
    }
    bands.push_back({horizontal, lo, lo + width - 1});
  }

  // dashed lane markings along road centers, 1-2 px wide
  if (spec.lane_markings) {
    std::uniform_int_distribution<std::size_t> dash(3, 6), gap(3, 8);
    for (const auto& b : bands) {
      std::size_t center = (b.lo + b.hi) / 2;
      std::size_t thick = (b.hi - b.lo) >= 12 ? 2 : 1;
      std::size_t along = b.horizontal ? w : h;
      std::size_t p = 0;
      while (p < along) {
        std::size_t len = dash(rng);
        for (std::size_t q = p; q < std::min(p + len, along); ++q)
          for (std::size_t t = 0; t < thick; ++t) {
            std::size_t yy = b.horizontal ? center + t : q;
            std::size_t xx = b.horizontal ? q : center + t;
            if (yy < h && xx < w && mask.at(yy, xx) == kRoad) mask.at(yy, xx) = kMarking;
          }
        p += len + gap(rng);
      }
    }
  }

  // vehicles on roads
  if (!bands.empty()) {
    std::size_t n_cars = count_of(spec.vehicle_density);
    std::size_t car_l = std::max<std::size_t>(2, dim / 16);
    std::size_t car_w = std::max<std::size_t>(1, car_l / 2);
    std::uniform_int_distribution<std::size_t> pick(0, bands.size() - 1);
    for (std::size_t i = 0; i < n_cars; ++i) {
      const Band& b = bands[pick(rng)];
      std::size_t along = b.horizontal ? w : h;
      if (along <= car_l || b.hi - b.lo + 1 <= car_w) continue;
      std::uniform_int_distribution<std::size_t> pa(0, along - car_l);
      std::uniform_int_distribution<std::size_t> pc(b.lo, b.hi - car_w);
      std::size_t a = pa(rng), c = pc(rng);
      if (b.horizontal)
        fill_rect(mask, c, c + car_w, a, a + car_l, kCar);
      else
        fill_rect(mask, a, a + car_l, c, c + car_w, kCar);
    }
  }

  // render with per-pixel jitter so texture is not a constant per class
  Image rgb = Image::blank(h, w);
  std::uniform_real_distribution<double> jitter(-spec.noise, spec.noise);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      Rgb c = base_color(mask.at(y, x));
      double j = jitter(rng);
      rgb.at(0, y, x) = std::uint8_t(std::clamp(double(c.r) + j, 0.0, 255.0));
      rgb.at(1, y, x) = std::uint8_t(std::clamp(double(c.g) + j, 0.0, 255.0));
      rgb.at(2, y, x) = std::uint8_t(std::clamp(double(c.b) + j, 0.0, 255.0));
    }
  }
  return {std::move(rgb), std::move(mask)};
}

}  // namespace skyseg
