#pragma once

#include <string>
#include <vector>

#include "histoconv/loss.hpp"

namespace histoconv {

inline constexpr char kMetricsHeader[] = "epoch,train_loss,train_acc,val_loss,val_acc";

// Streaming CSV writer: header on open, one row per epoch, flushed per row so
// a crash loses at most the in-flight epoch.
class MetricsCsvWriter {
 public:
  explicit MetricsCsvWriter(const std::string& path);
  ~MetricsCsvWriter();
  MetricsCsvWriter(const MetricsCsvWriter&) = delete;
  MetricsCsvWriter& operator=(const MetricsCsvWriter&) = delete;

  void append(const EpochMetrics& m);

 private:
  struct Impl;
  Impl* impl_;
};

void save_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows);

// Strict reader: exact header, five comma-separated fields per row; errors
// carry the 1-based line number.
std::vector<EpochMetrics> load_metrics_csv(const std::string& path);

// Renders loss.png (train/val loss vs epoch) and accuracy.png (train/val
// accuracy vs epoch) into out_dir from a metrics CSV. Axes are labelled and
// a legend names both series. Returns the two file paths written.
std::vector<std::string> plot_curves(const std::string& metrics_csv, const std::string& out_dir);

}  // namespace histoconv
