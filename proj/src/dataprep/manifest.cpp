#include <fstream>
#include <sstream>

#include "vpet/dataprep.hpp"
#include "vpet/error.hpp"

namespace vpet::prep {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const fs::path& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == field.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(line) + ": bad number '" + field + "'");
}

}  // namespace

std::vector<PairRecord> read_pair_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kMissingFile, path.string());
  const fs::path base = path.parent_path();
  std::vector<PairRecord> records;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(text);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
    if (text.back() == ',') fields.emplace_back();
    require(fields.size() == 6, ErrorCode::kInvalidArgument,
            path.string() + ":" + std::to_string(line) + ": expected 6 comma-separated fields");
    PairRecord r;
    r.ct = fs::path(fields[0]).is_absolute() ? fs::path(fields[0]) : base / fields[0];
    r.pet = fs::path(fields[1]).is_absolute() ? fs::path(fields[1]) : base / fields[1];
    r.dose_kbq = parse_number(fields[2], path, line);
    r.weight_g = parse_number(fields[3], path, line);
    if (!fields[4].empty() || !fields[5].empty()) {
      r.slice_range = SliceRange{static_cast<int>(parse_number(fields[4], path, line)),
                                 static_cast<int>(parse_number(fields[5], path, line))};
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_pair_manifest(const fs::path& path, std::span<const PairRecord> records) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoFailure, "cannot write " + path.string());
  const fs::path base = path.parent_path();
  out << "# ct,pet,dose_kbq,weight_g,slice_lo,slice_hi\n";
  out.precision(17);
  for (const auto& r : records) {
    out << fs::relative(r.ct, base.empty() ? fs::path(".") : base).generic_string() << ','
        << fs::relative(r.pet, base.empty() ? fs::path(".") : base).generic_string() << ',' << r.dose_kbq << ','
        << r.weight_g << ',';
    if (r.slice_range) out << r.slice_range->lo << ',' << r.slice_range->hi;
    else out << ',';
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace vpet::prep
