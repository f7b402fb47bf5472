#include "histoconv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "histoconv/canvas.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

namespace {

std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string metrics_row(const EpochMetrics& m) {
  std::ostringstream os;
  os << m.epoch << ',' << format_metric(m.train_loss) << ',' << format_metric(m.train_acc)
     << ',' << format_metric(m.val_loss) << ',' << format_metric(m.val_acc);
  return os.str();
}

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{220, 220, 220};
constexpr Rgb kTrain{31, 119, 180};  // blue
constexpr Rgb kVal{255, 127, 14};    // orange

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// One chart: two series against epoch, ticks, labels, legend.
void render_series(const std::string& path, const std::string& title,
                   const std::vector<EpochMetrics>& rows, double EpochMetrics::* train_field,
                   double EpochMetrics::* val_field) {
  const std::int64_t width = 640, height = 480;
  const std::int64_t left = 70, right = 24, top = 46, bottom = 56;
  const std::int64_t plot_w = width - left - right;
  const std::int64_t plot_h = height - top - bottom;

  double x_min = double(rows.front().epoch), x_max = double(rows.back().epoch);
  if (x_min == x_max) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  double y_min = 1e300, y_max = -1e300;
  for (const auto& r : rows) {
    y_min = std::min({y_min, r.*train_field, r.*val_field});
    y_max = std::max({y_max, r.*train_field, r.*val_field});
  }
  if (y_min == y_max) {
    const double pad = std::max(0.1, std::abs(y_min) * 0.1);
    y_min -= pad;
    y_max += pad;
  } else {
    const double pad = (y_max - y_min) * 0.05;
    y_min -= pad;
    y_max += pad;
  }

  const auto to_x = [&](double v) {
    return left + std::int64_t(std::lround((v - x_min) / (x_max - x_min) * double(plot_w - 1)));
  };
  const auto to_y = [&](double v) {
    return top + plot_h - 1 -
           std::int64_t(std::lround((v - y_min) / (y_max - y_min) * double(plot_h - 1)));
  };

  Canvas canvas(width, height, kWhite);

  // ticks and gridlines: 5 per axis at even fractions
  for (int t = 0; t <= 4; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 4.0;
    const double fy = y_min + (y_max - y_min) * t / 4.0;
    const std::int64_t gx = to_x(fx), gy = to_y(fy);
    canvas.draw_line(gx, top, gx, top + plot_h - 1, kGrid);
    canvas.draw_line(left, gy, left + plot_w - 1, gy, kGrid);
    const auto xs = tick_label(fx);
    canvas.draw_text(gx - Canvas::text_width(xs.size()) / 2, top + plot_h + 6, xs, kBlack);
    const auto ys = tick_label(fy);
    canvas.draw_text(left - Canvas::text_width(ys.size()) - 6, gy - 3, ys, kBlack);
  }

  // axes
  canvas.draw_line(left, top, left, top + plot_h - 1, kBlack);
  canvas.draw_line(left, top + plot_h - 1, left + plot_w - 1, top + plot_h - 1, kBlack);

  // title and axis labels
  canvas.draw_text((width - Canvas::text_width(title.size(), 2)) / 2, 12, title, kBlack, 2);
  const std::string x_label = "epoch";
  canvas.draw_text((width - Canvas::text_width(x_label.size())) / 2, height - 18, x_label,
                   kBlack);

  // series with small square markers so single points stay visible
  const auto draw_series = [&](double EpochMetrics::* field, Rgb color) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::int64_t x = to_x(double(rows[i].epoch));
      const std::int64_t y = to_y(rows[i].*field);
      canvas.fill_rect(x - 1, y - 1, 3, 3, color);
      if (i > 0) {
        const std::int64_t px = to_x(double(rows[i - 1].epoch));
        const std::int64_t py = to_y(rows[i - 1].*field);
        canvas.draw_line(px, py, x, y, color);
      }
    }
  };
  draw_series(train_field, kTrain);
  draw_series(val_field, kVal);

  // legend, top-right inside the plot area
  const std::int64_t lx = left + plot_w - 110, ly = top + 8;
  canvas.draw_line(lx, ly + 3, lx + 18, ly + 3, kTrain);
  canvas.draw_text(lx + 24, ly, "train", kBlack);
  canvas.draw_line(lx, ly + 17, lx + 18, ly + 17, kVal);
  canvas.draw_text(lx + 24, ly + 14, "val", kBlack);

  canvas.save_png(path);
}

}  // namespace

struct MetricsCsvWriter::Impl {
  std::ofstream out;
  std::string path;
};

MetricsCsvWriter::MetricsCsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->path = path;
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) {
    delete impl_;
    throw Error("cannot open metrics csv for writing: " + path);
  }
  impl_->out << kMetricsHeader << "\n";
  impl_->out.flush();
}

MetricsCsvWriter::~MetricsCsvWriter() { delete impl_; }

void MetricsCsvWriter::append(const EpochMetrics& m) {
  impl_->out << metrics_row(m) << "\n";
  impl_->out.flush();
  if (!impl_->out) throw Error("failed writing metrics csv: " + impl_->path);
}

void save_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows) {
  MetricsCsvWriter w(path);
  for (const auto& r : rows) w.append(r);
}

std::vector<EpochMetrics> load_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open metrics csv: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw Error("metrics csv line 1: expected header '" + std::string(kMetricsHeader) + "'");

  std::vector<EpochMetrics> rows;
  for (std::int64_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    std::istringstream is(line);
    EpochMetrics m;
    char c1, c2, c3, c4;
    if (!(is >> m.epoch >> c1 >> m.train_loss >> c2 >> m.train_acc >> c3 >> m.val_loss >> c4 >>
          m.val_acc) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || !(is >> std::ws).eof())
      throw Error("metrics csv line " + std::to_string(line_no) + ": malformed row: " + line);
    rows.push_back(m);
  }
  return rows;
}

std::vector<std::string> plot_curves(const std::string& metrics_csv,
                                     const std::string& out_dir) {
  const auto rows = load_metrics_csv(metrics_csv);
  if (rows.empty()) throw Error("metrics csv has no rows: " + metrics_csv);
  std::filesystem::create_directories(out_dir);

  const auto loss_path = (std::filesystem::path(out_dir) / "loss.png").string();
  const auto acc_path = (std::filesystem::path(out_dir) / "accuracy.png").string();
  render_series(loss_path, "loss", rows, &EpochMetrics::train_loss, &EpochMetrics::val_loss);
  render_series(acc_path, "accuracy", rows, &EpochMetrics::train_acc, &EpochMetrics::val_acc);
  return {loss_path, acc_path};
}

}  // namespace histoconv
