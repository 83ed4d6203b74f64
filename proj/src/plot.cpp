#include "ccfdm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <vector>

#include "ccfdm/metrics.hpp"

namespace ccfdm {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

class Image {
 public:
  Image(int w, int h, Rgb fill) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h), fill) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    px_[static_cast<std::size_t>(y * w_ + x)] = c;
  }

  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }
  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
  }

  void thick_line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = std::abs(y1 - y0);
    const int steps = std::max({dx, dy, 1});
    for (int i = 0; i <= steps; ++i) {
      const int x = x0 + (x1 - x0) * i / steps;
      const int y = y0 + (y1 - y0) * i / steps;
      set(x, y, c);
      set(x + 1, y, c);
      set(x, y + 1, c);
    }
  }

  // Uncompressed 24-bit bottom-up BMP.
  void write_bmp(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("plot: cannot write " + path);
    const int row_bytes = (w_ * 3 + 3) / 4 * 4;
    const std::uint32_t data_size = static_cast<std::uint32_t>(row_bytes * h_);
    const std::uint32_t file_size = 54 + data_size;
    std::uint8_t header[54] = {};
    header[0] = 'B';
    header[1] = 'M';
    auto put32 = [&](int off, std::uint32_t v) {
      header[off] = static_cast<std::uint8_t>(v & 0xff);
      header[off + 1] = static_cast<std::uint8_t>((v >> 8) & 0xff);
      header[off + 2] = static_cast<std::uint8_t>((v >> 16) & 0xff);
      header[off + 3] = static_cast<std::uint8_t>((v >> 24) & 0xff);
    };
    put32(2, file_size);
    put32(10, 54);
    put32(14, 40);
    put32(18, static_cast<std::uint32_t>(w_));
    put32(22, static_cast<std::uint32_t>(h_));
    header[26] = 1;
    header[28] = 24;
    put32(34, data_size);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<std::uint8_t> row(static_cast<std::size_t>(row_bytes), 0);
    for (int y = h_ - 1; y >= 0; --y) {
      for (int x = 0; x < w_; ++x) {
        const Rgb& c = px_[static_cast<std::size_t>(y * w_ + x)];
        row[static_cast<std::size_t>(x * 3)] = c.b;
        row[static_cast<std::size_t>(x * 3 + 1)] = c.g;
        row[static_cast<std::size_t>(x * 3 + 2)] = c.r;
      }
      out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
    }
    if (!out) throw IoError("plot: write failed for " + path);
  }

 private:
  int w_, h_;
  std::vector<Rgb> px_;
};

std::string series_path_for(const std::string& out_path) {
  const auto dot = out_path.find_last_of('.');
  const auto slash = out_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out_path + ".csv";
  }
  std::string stem = out_path.substr(0, dot);
  if (out_path.substr(dot) == ".csv") return out_path + ".csv";
  return stem + ".csv";
}

}  // namespace

std::string export_curves(const std::string& metrics_path, const std::string& out_path) {
  std::int64_t skipped = 0;
  const auto rows = read_metrics(metrics_path, &skipped);

  std::vector<std::pair<std::int64_t, double>> series;
  for (const auto& r : rows) {
    if (r.eval_return_mean.has_value()) series.emplace_back(r.env_step, *r.eval_return_mean);
  }

  const std::string series_path = series_path_for(out_path);
  {
    std::ofstream out(series_path, std::ios::trunc);
    if (!out) throw IoError("plot: cannot write " + series_path);
    out << "env_step,eval_return_mean\n";
    char buf[64];
    for (const auto& [step, v] : series) {
      std::snprintf(buf, sizeof(buf), "%lld,%.10g\n", static_cast<long long>(step), v);
      out << buf;
    }
  }

  const int width = 800, height = 480;
  const int ml = 60, mr = 20, mt = 20, mb = 40;  // margins
  Image img(width, height, Rgb{250, 250, 250});
  const Rgb axis{40, 40, 40};
  const Rgb grid{215, 215, 215};
  const Rgb curve{30, 90, 200};

  // axes box
  img.hline(ml, width - mr, height - mb, axis);
  img.vline(ml, mt, height - mb, axis);
  for (int i = 1; i <= 4; ++i) {
    const int y = mt + (height - mt - mb) * i / 5;
    img.hline(ml + 1, width - mr, y, grid);
  }
  for (int i = 1; i <= 5; ++i) {
    const int x = ml + (width - ml - mr) * i / 6;
    img.vline(x, mt, height - mb - 1, grid);
  }

  if (!series.empty()) {
    std::int64_t xmin = series.front().first, xmax = series.back().first;
    if (xmin == xmax) {
      xmin -= 1;
      xmax += 1;
    }
    double ymin = series.front().second, ymax = series.front().second;
    for (const auto& [s, v] : series) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
    if (ymax - ymin < 1e-12) {
      ymin -= 1.0;
      ymax += 1.0;
    }
    auto to_px = [&](std::int64_t step, double v) {
      const double fx = static_cast<double>(step - xmin) / static_cast<double>(xmax - xmin);
      const double fy = (v - ymin) / (ymax - ymin);
      const int x = ml + static_cast<int>(std::lround(fx * (width - ml - mr)));
      const int y = height - mb - static_cast<int>(std::lround(fy * (height - mt - mb)));
      return std::pair{x, y};
    };
    auto [px, py] = to_px(series.front().first, series.front().second);
    for (std::size_t i = 1; i < series.size(); ++i) {
      auto [x, y] = to_px(series[i].first, series[i].second);
      img.thick_line(px, py, x, y, curve);
      px = x;
      py = y;
    }
    if (series.size() == 1) img.thick_line(px, py, px, py, curve);
  }

  img.write_bmp(out_path);
  return series_path;
}

}  // namespace ccfdm
