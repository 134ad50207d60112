#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vpet/error.hpp"
#include "vpet/lesion.hpp"

namespace vpet::lesion {

std::vector<double> default_threshold_grid() { return {0.80, 0.85, 0.90, 0.95, 0.99}; }

std::vector<FrocPoint> froc(std::span<const FrocScan> scans, std::span<const double> th_grid, bool use_fpr_layer,
                            double suv_th, int min_overlap) {
  require(!th_grid.empty(), ErrorCode::kEmptyInput, "FROC needs at least one threshold");
  require(!scans.empty(), ErrorCode::kEmptyInput, "FROC needs at least one scan");
  for (std::size_t i = 0; i < th_grid.size(); ++i) {
    require(th_grid[i] > 0.0 && th_grid[i] < 1.0, ErrorCode::kInvalidArgument, "thresholds must lie in (0, 1)");
    require(i == 0 || th_grid[i] > th_grid[i - 1], ErrorCode::kInvalidArgument, "thresholds must be increasing");
  }
  std::vector<Volume3D> suv_masks;
  for (const auto& s : scans) {
    require(s.prob != nullptr && s.gt != nullptr, ErrorCode::kInvalidArgument, "FROC scan lacks inputs");
    require(s.prob->modality() == Modality::kProb, ErrorCode::kInvalidArgument, "FROC needs PROB maps");
    if (use_fpr_layer) {
      require(s.syn_pet != nullptr, ErrorCode::kInvalidArgument, "the reduction layer needs a synthesized PET");
      suv_masks.push_back(suv_threshold_mask(*s.syn_pet, suv_th));
    }
  }

  std::vector<FrocPoint> points;
  for (double th : th_grid) {
    FrocPoint p;
    p.threshold = th;
    std::size_t lesions = 0;
    std::size_t detected = 0;
    double fp_total = 0.0;
    for (std::size_t k = 0; k < scans.size(); ++k) {
      const Volume3D& prob = *scans[k].prob;
      std::vector<float> bin(prob.size());
      for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = prob.data()[i] > th ? 1.0f : 0.0f;
      CandidateSet cands = connected_components(prob.with_data(std::move(bin), Modality::kMask), prob);
      p.candidates += cands.size();
      if (use_fpr_layer) cands = reduce_false_positives(cands, suv_masks[k], min_overlap);
      p.kept += cands.size();
      const DetectionScore s = score_detection(cands, *scans[k].gt, min_overlap);
      lesions += s.lesions;
      detected += s.detected;
      fp_total += s.fpr;
    }
    p.mean_fpr = fp_total / static_cast<double>(scans.size());
    if (lesions > 0) p.tpr = static_cast<double>(detected) / static_cast<double>(lesions);
    points.push_back(p);
  }
  return points;
}

void write_froc_csv(const std::filesystem::path& path, std::span<const FrocPoint> without_layer,
                    std::span<const FrocPoint> with_layer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  require(static_cast<bool>(os), ErrorCode::kIoFailure, "cannot write " + path.string());
  os << "curve,threshold,mean_fpr,tpr,candidates,kept\n";
  auto rows = [&](std::string_view curve, std::span<const FrocPoint> pts) {
    for (const auto& p : pts) {
      os << curve << ',' << p.threshold << ',' << p.mean_fpr << ',' << (p.tpr ? std::to_string(*p.tpr) : "undefined")
         << ',' << p.candidates << ',' << p.kept << '\n';
    }
  };
  rows("detector", without_layer);
  rows("detector+virtual_pet", with_layer);
  require(static_cast<bool>(os.flush()), ErrorCode::kIoFailure, "write failed for " + path.string());
}

void write_froc_svg(const std::filesystem::path& path, std::span<const FrocPoint> without_layer,
                    std::span<const FrocPoint> with_layer, double highlight_th) {
  constexpr double kW = 560, kH = 400, kLeft = 70, kRight = 170, kTop = 30, kBottom = 60;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  double max_fpr = 1.0;
  for (auto pts : {without_layer, with_layer}) {
    for (const auto& p : pts) max_fpr = std::max(max_fpr, p.mean_fpr);
  }
  max_fpr = std::ceil(max_fpr * 1.1);
  auto sx = [&](double f) { return kLeft + pw * f / max_fpr; };
  auto sy = [&](double t) { return kTop + ph * (1.0 - t); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">FROC</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << sy(0) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << sy(0)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << sy(0) << "\" x2=\"" << kLeft << "\" y2=\"" << sy(1)
     << "\" stroke=\"black\"/>\n";
  const int xticks = static_cast<int>(max_fpr);
  const int xstep = std::max(1, xticks / 10);
  for (int i = 0; i <= xticks; i += xstep) {
    os << "<line x1=\"" << sx(i) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(i) << "\" y2=\"" << sy(0) + 5
       << "\" stroke=\"black\"/><text x=\"" << sx(i) << "\" y=\"" << sy(0) + 18 << "\" text-anchor=\"middle\">" << i
       << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = i / 5.0;
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy(t) << "\" x2=\"" << kLeft << "\" y2=\"" << sy(t)
       << "\" stroke=\"black\"/><text x=\"" << kLeft - 8 << "\" y=\"" << sy(t) + 4 << "\" text-anchor=\"end\">" << t
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
     << "\" text-anchor=\"middle\">False positives per scan</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">True positive rate</text>\n";

  struct Curve {
    std::span<const FrocPoint> pts;
    const char* colour;
    const char* label;
  };
  const Curve curves[] = {{without_layer, "#1f77b4", "detector"}, {with_layer, "#d62728", "detector + virtual PET"}};
  double legend_y = kTop + 10;
  for (const auto& c : curves) {
    std::vector<const FrocPoint*> pts;
    for (const auto& p : c.pts) {
      if (p.tpr) pts.push_back(&p);
    }
    std::sort(pts.begin(), pts.end(), [](const FrocPoint* a, const FrocPoint* b) { return a->mean_fpr < b->mean_fpr; });
    os << "<polyline fill=\"none\" stroke=\"" << c.colour << "\" stroke-width=\"2\" points=\"";
    for (const auto* p : pts) os << sx(p->mean_fpr) << ',' << sy(*p->tpr) << ' ';
    os << "\"/>\n";
    for (const auto* p : pts) {
      const bool op = std::abs(p->threshold - highlight_th) < 1e-9;
      os << "<circle cx=\"" << sx(p->mean_fpr) << "\" cy=\"" << sy(*p->tpr) << "\" r=\"" << (op ? 6 : 3)
         << "\" fill=\"" << (op ? "none" : c.colour) << "\" stroke=\"" << c.colour << "\"><title>th=" << p->threshold
         << "</title></circle>\n";
    }
    os << "<line x1=\"" << kW - kRight + 15 << "\" y1=\"" << legend_y << "\" x2=\"" << kW - kRight + 35 << "\" y2=\""
       << legend_y << "\" stroke=\"" << c.colour << "\" stroke-width=\"2\"/><text x=\"" << kW - kRight + 40
       << "\" y=\"" << legend_y + 4 << "\">" << c.label << "</text>\n";
    legend_y += 18;
  }
  os << "<circle cx=\"" << kW - kRight + 25 << "\" cy=\"" << legend_y << "\" r=\"6\" fill=\"none\" stroke=\"black\"/>"
     << "<text x=\"" << kW - kRight + 40 << "\" y=\"" << legend_y + 4 << "\">th = " << highlight_th << "</text>\n";
  os << "</svg>\n";

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::trunc);
  require(static_cast<bool>(file), ErrorCode::kIoFailure, "cannot write " + path.string());
  file << os.str();
  require(static_cast<bool>(file.flush()), ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace vpet::lesion
