#pragma once

#include <random>
#include <string>
#include <vector>

#include "indet/image.hpp"
#include "indet/types.hpp"

namespace testutil {

// The parking-lot example: five trucks and one light pair, boxes as used in
// the prompt fixtures.
inline indet::ImageRecord fire_truck_record() {
  indet::ImageRecord r;
  r.image_id = "obj365_fire_station";
  r.uri = "obj365_fire_station.ppm";
  r.width_px = 200;
  r.height_px = 100;
  auto add = [&](std::string id, std::string category, indet::BBoxNorm b) {
    indet::ObjectEntry o;
    o.object_id = std::move(id);
    o.category = std::move(category);
    o.bbox = b;
    r.objects.push_back(std::move(o));
  };
  add("1", "Street lights", {0.0, 0.23, 0.03, 0.26});
  add("2", "Fire truck", {0.05, 0.6, 0.21, 0.76});
  add("3", "Fire truck", {0.19, 0.58, 0.37, 0.77});
  add("4", "Fire truck", {0.33, 0.55, 0.61, 0.77});
  add("5", "Fire truck", {0.56, 0.57, 0.74, 0.77});
  add("6", "Fire truck", {0.72, 0.57, 1.0, 0.76});
  return r;
}

// Verbatim block-formatted reply used for the golden parse checks. The
// first (1) line carries a near-duplicate phrase that dedup must collapse.
inline const char* fire_truck_response() {
  return
      "**[Fire Truck]**\n"
      "\n"
      "(1) vehicle, emergency vehicle, fire engine, parked outside the fire station, an "
      "essential part of the fire station's resources, essential part of the fire station's "
      "resources\n"
      "(2) lined up in a neat row, ready for use, object parked in the row with other fire "
      "trucks, object with ladders and equipment\n"
      "\n"
      "**[Street Lights]**\n"
      "\n"
      "(1) light fixtures, outdoor lighting, two lights visible, providing illumination, source "
      "of illumination\n"
      "(2) objects providing illumination, objects in the parking lot, objects providing a "
      "clear representation of the overall setting, objects providing light for the parking "
      "lot\n";
}

inline indet::Image noise_image(int w, int h, std::uint64_t seed) {
  indet::Image img = indet::Image::solid(w, h, {0, 0, 0});
  std::mt19937_64 rng(seed);
  for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

inline indet::Expression expr(std::string text, std::vector<std::string> ids,
                              indet::ExpressionSource source) {
  indet::Expression e;
  e.text = std::move(text);
  e.target = indet::TargetSet::of(std::move(ids));
  e.source = source;
  return e;
}

}  // namespace testutil
