#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpet/dataprep.hpp"
#include "vpet/volume.hpp"

namespace vpet::eval {

/// PSNR peak, the upper end of the SUV window.
inline constexpr double kPsnrPeak = 20.0;

/// Metric inputs may be SUV volumes or NORMALIZED volumes in the SUV window;
/// both are compared in SUV units. A mask, when given, must be a MASK on
/// the same grid. An empty selection yields std::nullopt.
std::optional<double> mae(const Volume3D& syn, const Volume3D& ref, const Volume3D* mask = nullptr);

/// 10 log10(peak^2 / MSE) in dB; +infinity when MSE is zero.
std::optional<double> psnr(const Volume3D& syn, const Volume3D& ref, const Volume3D* mask = nullptr);

struct RegionMasks {
  Volume3D high;
  Volume3D low;
};

/// high = {ref > threshold} (strict), low = its complement. The threshold
/// is in SUV and is mapped into the window for NORMALIZED input.
RegionMasks suv_region_masks(const Volume3D& ref, double threshold_suv = kHighSuvThreshold);

struct ReconRecord {
  std::string scan;
  std::optional<double> mae_high;
  std::optional<double> psnr_high;
  std::optional<double> mae_low;
  std::optional<double> psnr_low;
  std::optional<double> mae_avg;   // defined when both regions are
  std::optional<double> psnr_avg;
};

/// Six region metrics of one scan, optionally restricted to an axial range.
ReconRecord evaluate_pair(const Volume3D& syn, const Volume3D& ref, std::optional<prep::SliceRange> range = {},
                          std::string scan = {}, double threshold_suv = kHighSuvThreshold);

/// Mean and population standard deviation of the defined values of a column.
/// When any value is +infinity the mean is +infinity and the std is NaN.
struct ColumnStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct ReconReport {
  std::string method;
  std::vector<ReconRecord> records;
  std::optional<ColumnStats> mae_high, psnr_high, mae_low, psnr_low, mae_avg, psnr_avg;
  std::size_t scans_without_high = 0;
};

ReconReport aggregate_report(std::span<const ReconRecord> records, std::string method = "synthesized");

/// One row per scan per method, then `mean` and `std` rows per method.
void write_report_csv(std::span<const ReconReport> reports, const std::filesystem::path& path);

/// Plain-text table: one row per method, cells "mean ± std", high / low /
/// average column groups.
std::string render_table(std::span<const ReconReport> reports);

}  // namespace vpet::eval
