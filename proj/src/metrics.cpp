#include "ccfdm/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace ccfdm {

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v.has_value()) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", *v);
  return buf;
}

bool parse_opt(const std::string& cell, std::optional<double>* out) {
  if (cell.empty()) {
    out->reset();
    return true;
  }
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) return false;
    *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  char wall[40];
  std::snprintf(wall, sizeof(wall), "%.3f", r.wall_time_s);
  std::ostringstream os;
  os << r.env_step << ',' << fmt_opt(r.episode_return) << ',' << fmt_opt(r.eval_return_mean) << ','
     << fmt_opt(r.eval_return_std) << ',' << fmt_opt(r.contrastive_loss) << ','
     << fmt_opt(r.critic_loss) << ',' << fmt_opt(r.actor_loss) << ',' << fmt_opt(r.alpha) << ','
     << fmt_opt(r.mean_intrinsic_reward) << ',' << fmt_opt(r.re_max) << ',' << fmt_opt(r.ri_max)
     << ',' << wall;
  return os.str();
}

MetricsWriter::MetricsWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("metrics: cannot open " + path);
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

void MetricsWriter::append(const MetricsRow& row) {
  out_ << format_metrics_row(row) << '\n';
  out_.flush();
  ++rows_;
}

std::vector<MetricsRow> read_metrics(const std::string& path, std::int64_t* skipped_rows) {
  std::ifstream in(path);
  if (!in) throw IoError("metrics: cannot open " + path);
  std::vector<MetricsRow> rows;
  std::int64_t skipped = 0;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (first) {
      first = false;
      continue;  // header
    }
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    MetricsRow r;
    bool ok = cells.size() == 12;
    if (ok) {
      try {
        std::size_t pos = 0;
        r.env_step = std::stoll(cells[0], &pos);
        ok = pos == cells[0].size();
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (ok) ok = parse_opt(cells[1], &r.episode_return);
    if (ok) ok = parse_opt(cells[2], &r.eval_return_mean);
    if (ok) ok = parse_opt(cells[3], &r.eval_return_std);
    if (ok) ok = parse_opt(cells[4], &r.contrastive_loss);
    if (ok) ok = parse_opt(cells[5], &r.critic_loss);
    if (ok) ok = parse_opt(cells[6], &r.actor_loss);
    if (ok) ok = parse_opt(cells[7], &r.alpha);
    if (ok) ok = parse_opt(cells[8], &r.mean_intrinsic_reward);
    if (ok) ok = parse_opt(cells[9], &r.re_max);
    if (ok) ok = parse_opt(cells[10], &r.ri_max);
    if (ok) {
      std::optional<double> wall;
      ok = parse_opt(cells[11], &wall) && wall.has_value();
      if (ok) r.wall_time_s = *wall;
    }
    if (!ok) {
      std::fprintf(stderr, "metrics: skipping malformed row at %s:%d\n", path.c_str(), lineno);
      ++skipped;
      continue;
    }
    rows.push_back(r);
  }
  if (skipped_rows != nullptr) *skipped_rows = skipped;
  return rows;
}

}  // namespace ccfdm
