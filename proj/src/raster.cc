#include "planar/raster.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <png.h>

#include "planar/error.h"

namespace planar {

namespace {

void warp_rows(const Eigen::Matrix3d& inv, const Raster& src, const RasterBounds& b,
               const WarpOptions& opt, int row_begin, int row_end, Raster* out) {
  const int ch = src.channels;
  for (int r = row_begin; r < row_end; ++r) {
    for (int c = 0; c < b.width; ++c) {
      const Eigen::Vector3d x = inv * Eigen::Vector3d(b.x0 + c, b.y0 + r, 1.0);
      if (!(std::abs(x.z()) >= 1e-12)) continue;
      const double sx = x.x() / x.z();
      const double sy = x.y() / x.z();
      if (opt.interp == Interpolation::kNearest) {
        const double rx = std::round(sx);
        const double ry = std::round(sy);
        if (!(rx >= 0.0 && ry >= 0.0 && rx < src.width && ry < src.height)) continue;
        for (int k = 0; k < ch; ++k) {
          out->at(c, r, k) = src.at(static_cast<int>(rx), static_cast<int>(ry), k);
        }
        continue;
      }
      // Tolerates roundoff from the normalized inverse at the border.
      constexpr double kEdge = 1e-9;
      if (!(sx >= -kEdge && sy >= -kEdge && sx <= src.width - 1 + kEdge &&
            sy <= src.height - 1 + kEdge)) {
        continue;
      }
      const double cx = std::clamp(sx, 0.0, src.width - 1.0);
      const double cy = std::clamp(sy, 0.0, src.height - 1.0);
      const int ix = static_cast<int>(cx);
      const int iy = static_cast<int>(cy);
      const int jx = std::min(ix + 1, src.width - 1);
      const int jy = std::min(iy + 1, src.height - 1);
      const double fx = cx - ix;
      const double fy = cy - iy;
      for (int k = 0; k < ch; ++k) {
        const double top = (1.0 - fx) * src.at(ix, iy, k) + fx * src.at(jx, iy, k);
        const double bottom = (1.0 - fx) * src.at(ix, jy, k) + fx * src.at(jx, jy, k);
        const double value = (1.0 - fy) * top + fy * bottom;
        out->at(c, r, k) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
      }
    }
  }
}

std::string extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

Raster read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") {
    throw Error(ErrorCode::kIoError, path + ": only binary P5/P6 images are supported");
  }
  auto next_int = [&]() {
    int value = 0;
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
        continue;
      }
      break;
    }
    if (!(in >> value)) throw Error(ErrorCode::kIoError, path + ": malformed header");
    return value;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw Error(ErrorCode::kIoError, path + ": expected 8-bit image");
  }
  in.get();
  Raster raster(w, h, magic == "P5" ? 1 : 3);
  in.read(reinterpret_cast<char*>(raster.data.data()),
          static_cast<std::streamsize>(raster.data.size()));
  if (!in) throw Error(ErrorCode::kIoError, path + ": truncated pixel data");
  return raster;
}

void write_pnm(const std::string& path, const Raster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << (raster.channels == 1 ? "P5" : "P6") << '\n'
      << raster.width << ' ' << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.data.data()),
            static_cast<std::streamsize>(raster.data.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

Raster read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kIoError, path + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Raster raster(static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3);
  if (!png_image_finish_read(&image, nullptr, raster.data.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kIoError, path + ": " + message);
  }
  return raster;
}

void write_png(const std::string& path, const Raster& raster) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.data.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, path + ": " + image.message);
  }
}

}  // namespace

Raster warp_raster(const Homography& h, const Raster& src, const RasterBounds& bounds,
                   const WarpOptions& options) {
  if (bounds.width <= 0 || bounds.height <= 0) {
    throw Error(ErrorCode::kEmptyBounds, "output bounds are empty");
  }
  if (src.width <= 0 || src.height <= 0 || (src.channels != 1 && src.channels != 3)) {
    throw Error(ErrorCode::kInvalidArgument, "source raster is empty or has bad channels");
  }
  const Eigen::Matrix3d inv = h.inverse().matrix();
  Raster out(bounds.width, bounds.height, src.channels, options.fill);
  const int workers = std::clamp(options.workers, 1, bounds.height);
  if (workers == 1) {
    warp_rows(inv, src, bounds, options, 0, bounds.height, &out);
    return out;
  }
  std::vector<std::jthread> threads;
  const int chunk = (bounds.height + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(bounds.height, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      warp_rows(inv, src, bounds, options, begin, end, &out);
    });
  }
  threads.clear();
  return out;
}

double psnr(const Raster& a, const Raster& b, int x0, int y0, int width, int height) {
  if (a.channels != b.channels) {
    throw Error(ErrorCode::kInvalidArgument, "channel count mismatch");
  }
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (int y = y0; y < y0 + height; ++y) {
    for (int x = x0; x < x0 + width; ++x) {
      for (int k = 0; k < a.channels; ++k) {
        const double d = static_cast<double>(a.at(x, y, k)) - b.at(x, y, k);
        sum_sq += d * d;
        ++n;
      }
    }
  }
  const double mse = sum_sq / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

Raster read_raster(const std::string& path) {
  const std::string ext = extension(path);
  if (ext == "png") return read_png(path);
  if (ext == "pgm" || ext == "ppm" || ext == "pnm") return read_pnm(path);
  throw Error(ErrorCode::kIoError, path + ": unsupported image format");
}

void write_raster(const std::string& path, const Raster& raster) {
  const std::string ext = extension(path);
  if (ext == "png") return write_png(path, raster);
  if (ext == "pgm" || ext == "ppm" || ext == "pnm") {
    if ((ext == "pgm") != (raster.channels == 1) && ext != "pnm") {
      throw Error(ErrorCode::kIoError, path + ": extension does not match channel count");
    }
    return write_pnm(path, raster);
  }
  throw Error(ErrorCode::kIoError, path + ": unsupported image format");
}

}  // namespace planar
