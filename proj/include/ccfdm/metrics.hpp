#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ccfdm/common.hpp"

namespace ccfdm {

inline constexpr const char* kMetricsHeader =
    "env_step,episode_return,eval_return_mean,eval_return_std,contrastive_loss,critic_loss,"
    "actor_loss,alpha,mean_intrinsic_reward,re_max,ri_max,wall_time_s";

// One metrics row; episode rows and evaluation rows share the schema, with
// fields that do not apply left empty in the file.
struct MetricsRow {
  std::int64_t env_step = 0;
  std::optional<double> episode_return;
  std::optional<double> eval_return_mean;
  std::optional<double> eval_return_std;
  std::optional<double> contrastive_loss;
  std::optional<double> critic_loss;
  std::optional<double> actor_loss;
  std::optional<double> alpha;
  std::optional<double> mean_intrinsic_reward;
  std::optional<double> re_max;
  std::optional<double> ri_max;
  double wall_time_s = 0.0;
};

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricsRow& row);
  std::int64_t rows_written() const { return rows_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::int64_t rows_ = 0;
};

// Reads a metrics file; malformed rows are skipped and counted in
// *skipped_rows (stderr warning per row).
std::vector<MetricsRow> read_metrics(const std::string& path, std::int64_t* skipped_rows = nullptr);

std::string format_metrics_row(const MetricsRow& row);

}  // namespace ccfdm
