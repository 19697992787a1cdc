#pragma once

#include <cstdint>
#include <vector>

#include "wbench/geom.hpp"
#include "wbench/image.hpp"
#include "wbench/sidecar.hpp"

namespace wbench::testing {

// Fronto-parallel textured plane at depth z0 seen by a camera sliding along +x
// by `shift_px` pixels per frame. Principal point and shifts are integral, so
// every rendered pixel lands exactly on a texel.
struct PlaneScene {
  int width = 48;
  int height = 36;
  double f = 40;
  double z0 = 4;
  int shift_px = 1;
  int frames = 11;

  double cx() const { return width / 2; }
  double cy() const { return height / 2; }

  static std::uint8_t texel(long i, long j, int c) {
    const std::uint64_t h = static_cast<std::uint64_t>(i * 73856093L) ^
                            static_cast<std::uint64_t>(j * 19349663L) ^
                            static_cast<std::uint64_t>(c * 83492791L);
    return static_cast<std::uint8_t>((h * 2654435761ULL) >> 24);
  }

  geom::Pose pose(int k) const {
    geom::Pose p;
    p.translation.x() = k * shift_px * z0 / f;
    return p;
  }

  geom::Track track() const {
    geom::Track t;
    for (int k = 0; k < frames; ++k) t.push_back({k, pose(k)});
    return t;
  }

  Image frame(int k) const {
    Image img{width, height, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3)};
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = texel(x + k * shift_px, y, c);
    return img;
  }

  DepthSeries depth() const {
    DepthSeries d;
    d.width = width;
    d.height = height;
    d.fx = d.fy = static_cast<float>(f);
    d.cx = static_cast<float>(cx());
    d.cy = static_cast<float>(cy());
    for (int k = 0; k < frames; ++k) {
      d.frames.push_back(k);
      d.maps.emplace_back(static_cast<std::size_t>(width) * height, static_cast<float>(z0));
    }
    return d;
  }
};

}  // namespace wbench::testing
