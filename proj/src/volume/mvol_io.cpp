#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "vpet/error.hpp"
#include "vpet/volume.hpp"

namespace vpet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSidecarSuffix = ".mvol.json";
constexpr std::string_view kRasterSuffix = ".mvol.raw";

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

fs::path with_suffix(const fs::path& stem, std::string_view suffix) {
  return fs::path(stem.string() + std::string(suffix));
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

Vec3 read_triple(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    fail(ErrorCode::kMalformedSidecar, std::string("'") + key + "' must be an array of 3 numbers");
  }
  for (const auto& e : j[key]) {
    if (!e.is_number()) fail(ErrorCode::kMalformedSidecar, std::string("'") + key + "' holds a non-number");
  }
  return {j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>()};
}

}  // namespace

fs::path mvol_stem(const fs::path& path) {
  std::string s = path.string();
  if (ends_with(s, kSidecarSuffix)) {
    s.resize(s.size() - kSidecarSuffix.size());
  } else if (ends_with(s, kRasterSuffix)) {
    s.resize(s.size() - kRasterSuffix.size());
  }
  return fs::path(s);
}

Volume3D load_volume(const fs::path& path) {
  require(!path.empty(), ErrorCode::kInvalidArgument, "empty volume path");
  const fs::path stem = mvol_stem(path);
  const fs::path sidecar = with_suffix(stem, kSidecarSuffix);
  const fs::path raster = with_suffix(stem, kRasterSuffix);
  require(fs::exists(sidecar), ErrorCode::kMissingFile, sidecar.string());
  require(fs::exists(raster), ErrorCode::kMissingFile, raster.string());

  json meta;
  {
    std::ifstream in(sidecar);
    require(static_cast<bool>(in), ErrorCode::kIoFailure, "cannot open " + sidecar.string());
    meta = json::parse(in, nullptr, /*allow_exceptions=*/false);
  }
  require(meta.is_object(), ErrorCode::kMalformedSidecar, sidecar.string() + " is not a JSON object");

  if (!meta.contains("dims") || !meta["dims"].is_array() || meta["dims"].size() != 3) {
    fail(ErrorCode::kMalformedSidecar, "'dims' must be an array of 3 positive integers");
  }
  Dims dims;
  int* axes[] = {&dims.x, &dims.y, &dims.z};
  for (int i = 0; i < 3; ++i) {
    const auto& d = meta["dims"][i];
    require(d.is_number_integer() && d.get<long long>() >= 1, ErrorCode::kMalformedSidecar,
            "'dims' must be an array of 3 positive integers");
    *axes[i] = d.get<int>();
  }
  Grid grid{dims, read_triple(meta, "spacing_mm"), read_triple(meta, "offset_mm")};
  require(grid.spacing.x > 0 && grid.spacing.y > 0 && grid.spacing.z > 0, ErrorCode::kMalformedSidecar,
          "'spacing_mm' must be positive");
  require(meta.contains("modality") && meta["modality"].is_string(), ErrorCode::kMalformedSidecar,
          "'modality' missing");
  require(meta.value("dtype", "") == "f32le", ErrorCode::kMalformedSidecar, "'dtype' must be \"f32le\"");
  Modality modality;
  try {
    modality = modality_from_string(meta["modality"].get<std::string>());
  } catch (const Error&) {
    fail(ErrorCode::kMalformedSidecar, "unknown modality " + meta["modality"].dump());
  }

  const auto bytes = fs::file_size(raster);
  require(bytes == dims.count() * sizeof(float), ErrorCode::kRasterSizeMismatch,
          raster.string() + " has " + std::to_string(bytes / sizeof(float)) + " values, dims need " +
              std::to_string(dims.count()));
  std::vector<std::uint32_t> words(dims.count());
  {
    std::ifstream in(raster, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::kIoFailure, "cannot open " + raster.string());
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
    require(static_cast<bool>(in), ErrorCode::kIoFailure, "short read on " + raster.string());
  }
  std::vector<float> data(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    data[i] = std::bit_cast<float>(to_little_endian(words[i]));
    require(std::isfinite(data[i]), ErrorCode::kNonFiniteVoxel, raster.string());
  }
  return Volume3D(grid, modality, std::move(data));
}

void save_volume(const Volume3D& v, const fs::path& path) {
  require(!path.empty(), ErrorCode::kInvalidArgument, "empty volume path");
  for (float x : v.data()) require(std::isfinite(x), ErrorCode::kNonFiniteVoxel, "refusing to write " + path.string());

  const fs::path stem = mvol_stem(path);
  if (stem.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(stem.parent_path(), ec);
  }
  const auto& g = v.grid();
  json meta = {
      {"dims", {g.dims.x, g.dims.y, g.dims.z}},
      {"spacing_mm", {g.spacing.x, g.spacing.y, g.spacing.z}},
      {"offset_mm", {g.offset.x, g.offset.y, g.offset.z}},
      {"modality", std::string(to_string(v.modality()))},
      {"dtype", "f32le"},
  };
  {
    std::ofstream out(with_suffix(stem, kSidecarSuffix));
    require(static_cast<bool>(out), ErrorCode::kIoFailure, "cannot write " + stem.string() + ".mvol.json");
    out << meta.dump(2) << '\n';
    require(static_cast<bool>(out), ErrorCode::kIoFailure, "write failed for " + stem.string() + ".mvol.json");
  }
  std::vector<std::uint32_t> words(v.size());
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = to_little_endian(std::bit_cast<std::uint32_t>(v.data()[i]));
  std::ofstream out(with_suffix(stem, kRasterSuffix), std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIoFailure, "cannot write " + stem.string() + ".mvol.raw");
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * sizeof(float)));
  require(static_cast<bool>(out), ErrorCode::kIoFailure, "write failed for " + stem.string() + ".mvol.raw");
}

}  // namespace vpet
