#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "vpet/error.hpp"
#include "vpet/eval.hpp"

namespace vpet::eval {

namespace {

using Column = std::optional<double> ReconRecord::*;

std::optional<ColumnStats> column_stats(std::span<const ReconRecord> records, Column col) {
  std::vector<double> values;
  for (const auto& r : records) {
    if (r.*col) values.push_back(*(r.*col));
  }
  if (values.empty()) return std::nullopt;
  ColumnStats s;
  s.count = values.size();
  for (double v : values) {
    if (std::isinf(v)) {
      s.mean = std::numeric_limits<double>::infinity();
      s.stddev = std::numeric_limits<double>::quiet_NaN();
      return s;
    }
  }
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string cell(const std::optional<double>& v) { return v ? number(*v) : "undefined"; }

std::string table_cell(const std::optional<ColumnStats>& s) {
  if (!s) return "undefined";
  if (std::isinf(s->mean)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << s->mean << " ± " << s->stddev;
  return os.str();
}

}  // namespace

ReconReport aggregate_report(std::span<const ReconRecord> records, std::string method) {
  require(!records.empty(), ErrorCode::kEmptyInput, "a report needs at least one scan record");
  ReconReport rep;
  rep.method = std::move(method);
  rep.records.assign(records.begin(), records.end());
  rep.mae_high = column_stats(records, &ReconRecord::mae_high);
  rep.psnr_high = column_stats(records, &ReconRecord::psnr_high);
  rep.mae_low = column_stats(records, &ReconRecord::mae_low);
  rep.psnr_low = column_stats(records, &ReconRecord::psnr_low);
  rep.mae_avg = column_stats(records, &ReconRecord::mae_avg);
  rep.psnr_avg = column_stats(records, &ReconRecord::psnr_avg);
  for (const auto& r : records) rep.scans_without_high += r.mae_high ? 0 : 1;
  return rep;
}

void write_report_csv(std::span<const ReconReport> reports, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  require(static_cast<bool>(os), ErrorCode::kIoFailure, "cannot write " + path.string());
  os << "method,scan,mae_high,psnr_high,mae_low,psnr_low,mae_avg,psnr_avg\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.records) {
      os << rep.method << ',' << r.scan << ',' << cell(r.mae_high) << ',' << cell(r.psnr_high) << ','
         << cell(r.mae_low) << ',' << cell(r.psnr_low) << ',' << cell(r.mae_avg) << ',' << cell(r.psnr_avg) << '\n';
    }
    const std::optional<ColumnStats>* cols[] = {&rep.mae_high, &rep.psnr_high, &rep.mae_low,
                                                &rep.psnr_low, &rep.mae_avg,   &rep.psnr_avg};
    os << rep.method << ",mean";
    for (const auto* c : cols) os << ',' << (*c ? number((*c)->mean) : "undefined");
    os << '\n' << rep.method << ",std";
    for (const auto* c : cols) os << ',' << (*c ? number((*c)->stddev) : "undefined");
    os << '\n';
  }
  require(static_cast<bool>(os.flush()), ErrorCode::kIoFailure, "write failed for " + path.string());
}

std::string render_table(std::span<const ReconReport> reports) {
  const std::vector<std::string> head = {"Method", "High MAE", "High PSNR", "Low MAE",
                                         "Low PSNR", "Avg MAE", "Avg PSNR"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& rep : reports) {
    rows.push_back({rep.method, table_cell(rep.mae_high), table_cell(rep.psnr_high), table_cell(rep.mae_low),
                    table_cell(rep.psnr_low), table_cell(rep.mae_avg), table_cell(rep.psnr_avg)});
  }
  // "±" is two bytes but one column wide.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80 ? 1 : 0;
    return w;
  };
  std::vector<std::size_t> widths(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    widths[c] = width(head[c]);
    for (const auto& r : rows) widths[c] = std::max(widths[c], width(r[c]));
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c == 0 ? "| " : " | ") << cells[c] << std::string(widths[c] - width(cells[c]), ' ');
    }
    os << " |\n";
  };
  line(head);
  std::vector<std::string> rule;
  for (std::size_t w : widths) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& r : rows) line(r);
  for (const auto& rep : reports) {
    if (rep.scans_without_high > 0) {
      os << rep.method << ": " << rep.scans_without_high << " scan(s) without high-SUV voxels excluded from high columns\n";
    }
  }
  return os.str();
}

}  // namespace vpet::eval
