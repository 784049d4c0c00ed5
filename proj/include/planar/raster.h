#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "planar/homography.h"

namespace planar {

// 8-bit raster, 1 (gray) or 3 (RGB) interleaved channels, row-major with row 0
// at the top.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Raster&) const = default;
};

// Output raster pixel (c, r) samples destination coordinate (x0 + c, y0 + r).
struct RasterBounds {
  double x0 = 0.0;
  double y0 = 0.0;
  int width = 0;
  int height = 0;
};

enum class Interpolation { kNearest, kBilinear };

struct WarpOptions {
  Interpolation interp = Interpolation::kBilinear;
  std::uint8_t fill = 0;
  // Output rows are split across this many threads; the result does not
  // depend on the split.
  int workers = 1;
};

// Inverse-mapping warp of src by h (src coordinates -> destination
// coordinates). Samples falling outside src get options.fill. Throws
// EmptyBounds.
Raster warp_raster(const Homography& h, const Raster& src, const RasterBounds& bounds,
                   const WarpOptions& options = {});

double psnr(const Raster& a, const Raster& b, int x0, int y0, int width, int height);

// PGM (P5), PPM (P6) and PNG, chosen by file extension. Throws IoError.
Raster read_raster(const std::string& path);
void write_raster(const std::string& path, const Raster& raster);

}  // namespace planar
