// vpet: command-line pipeline for CT-to-PET synthesis, evaluation and
// false-positive reduction. Run `vpet --help` or `vpet <command> --help`.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "run_context.hpp"
#include "vpet/dataprep.hpp"
#include "vpet/error.hpp"
#include "vpet/eval.hpp"
#include "vpet/lesion.hpp"
#include "vpet/phantom.hpp"
#include "vpet/random.hpp"
#include "vpet/training.hpp"
#include "vpet/volume.hpp"

namespace fs = std::filesystem;
using namespace vpet;
using namespace vpet::cli;

namespace {

struct OptSpec {
  std::string key;
  std::string fallback;
  std::string help;
};

struct Command {
  std::string name;
  std::string description;
  std::vector<OptSpec> options;
  void (*run)(RunContext&);
};

std::string flag_of(const std::string& key) {
  std::string f = key;
  for (char& c : f) c = c == '_' ? '-' : c;
  return "--" + f;
}

std::string stem_name(int scan, const std::string& what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "scan_%03d_%s.mvol.json", scan, what.c_str());
  return buf;
}

std::string scan_id(int scan) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scan_%03d", scan);
  return buf;
}

// --- small CSV tables (header row, comma separated, '#' comments) ---------------

using Row = std::map<std::string, std::string>;

std::vector<Row> read_table(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kMissingFile, "cannot read " + path.string());
  std::vector<std::string> header;
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (header.empty()) {
      header = cells;
      continue;
    }
    require(cells.size() == header.size(), ErrorCode::kMalformedSidecar,
            path.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                std::to_string(header.size()));
    Row r;
    for (std::size_t i = 0; i < cells.size(); ++i) r[header[i]] = cells[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

fs::path column_path(const Row& r, const std::string& col, const fs::path& table) {
  auto it = r.find(col);
  require(it != r.end() && !it->second.empty(), ErrorCode::kMalformedSidecar,
          table.string() + ": missing column '" + col + "'");
  const fs::path p(it->second);
  return p.is_absolute() ? p : table.parent_path() / p;
}

// --- shared loaders -------------------------------------------------------------

struct PreparedScan {
  std::string id;
  prep::ScanPair pair;
};

std::vector<PreparedScan> load_prepared(RunContext& ctx) {
  const fs::path manifest = ctx.path("data");
  std::vector<PreparedScan> scans;
  int i = 0;
  for (const auto& rec : prep::read_pair_manifest(manifest)) {
    ctx.add_input(rec.ct);
    ctx.add_input(rec.pet);
    scans.push_back({scan_id(i++), prep::make_scan_pair(load_volume(rec.ct), load_volume(rec.pet), rec.slice_range)});
  }
  require(!scans.empty(), ErrorCode::kEmptyInput, manifest.string() + " lists no scans");
  return scans;
}

train::TrainConfig train_config(const RunContext& ctx) {
  static const std::map<std::string, std::string> kRename = {
      {"steps", "max_steps"}, {"suv_th", "suv_threshold"}};
  std::map<std::string, std::string> kv;
  for (const auto& key : {"learning_rate", "batch_size", "adam_beta1", "adam_beta2", "adam_epsilon", "lambda",
                          "suv_th", "steps", "seed", "width_scale", "input_size", "fcn_kind", "augment",
                          "noise_bound", "joint_finetune", "early_stop_patience", "val_interval"}) {
    if (!ctx.has(key)) continue;
    auto r = kRename.find(key);
    kv[r == kRename.end() ? key : r->second] = ctx.text(key);
  }
  try {
    train::TrainConfig cfg = train::TrainConfig::from_key_values(kv);
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

struct Split {
  std::vector<prep::SlicePair> train;
  std::vector<prep::SlicePair> val;
};

Split split_slices(const std::vector<PreparedScan>& scans, double fraction, std::uint64_t seed) {
  std::vector<prep::SlicePair> all;
  std::vector<int> groups;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    for (auto& s : prep::extract_slices(scans[i].pair, static_cast<int>(i))) {
      groups.push_back(static_cast<int>(i));
      all.push_back(std::move(s));
    }
  }
  const prep::SplitIndices idx = scans.size() >= 2 ? prep::split_train_val_by_group(groups, fraction, seed)
                                                   : prep::split_train_val(all.size(), fraction, seed);
  Split out;
  for (auto i : idx.train) out.train.push_back(all[i]);
  for (auto i : idx.val) out.val.push_back(all[i]);
  return out;
}

void print_loss_tail(const train::TrainState& s, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    const auto v = s.series(n);
    if (v.empty()) continue;
    const auto smooth = train::moving_average(v, std::min<std::size_t>(20, v.size()));
    std::cout << "  " << n << ": first " << v.front() << ", last(smoothed) " << smooth.back() << '\n';
  }
}

// --- commands -----------------------------------------------------------------

void cmd_phantom(RunContext& ctx) {
  const fs::path out = ctx.out_dir();
  fs::create_directories(out);
  const int n_scans = ctx.integer("n_scans");
  const int n_false = ctx.integer("n_false");
  const std::uint64_t seed = ctx.u64("seed");
  if (n_scans < 1) throw UsageError("--n-scans must be >= 1");

  phantom::PhantomConfig pc;
  pc.ct_dims = {ctx.integer("size"), ctx.integer("size"), ctx.integer("slices")};
  pc.n_lesions = ctx.integer("n_lesions");

  std::vector<prep::PairRecord> records;
  std::ostringstream det;
  det << "scan,prob,candidates,gt\n";
  for (int i = 0; i < n_scans; ++i) {
    Rng rng = make_rng(seed, {0x5CA7, static_cast<std::uint64_t>(i)});
    pc.seed = rng();
    const phantom::PhantomPair ph = phantom::generate_phantom_pair(pc);
    const prep::ScanPair aligned = prep::prepare_pair(ph.ct, ph.pet, 1.0, 1.0);
    const Volume3D high = lesion::suv_threshold_mask(aligned.pet);
    const phantom::CandidateOutput cands = phantom::generate_candidates(ph.gt_mask, n_false, high, rng());

    const std::vector<std::pair<std::string, const Volume3D*>> files = {
        {"ct", &ph.ct}, {"pet", &ph.pet}, {"gt", &ph.gt_mask}, {"prob", &cands.prob}};
    for (const auto& [what, vol] : files) {
      save_volume(*vol, out / stem_name(i, what));
      ctx.add_output(out / stem_name(i, what));
    }
    const Volume3D cand_mask = cands.candidates.to_mask();
    save_volume(cand_mask, out / stem_name(i, "candidates"));
    ctx.add_output(out / stem_name(i, "candidates"));

    records.push_back({out / stem_name(i, "ct"), out / stem_name(i, "pet"), 1.0, 1.0, std::nullopt});
    det << scan_id(i) << ',' << stem_name(i, "prob") << ',' << stem_name(i, "candidates") << ','
        << stem_name(i, "gt") << '\n';
    std::cout << scan_id(i) << ": " << ph.lesions.size() << " lesions, " << cands.candidates.size()
              << " candidates\n";
  }
  prep::write_pair_manifest(out / "pairs.csv", records);
  ctx.add_output(out / "pairs.csv");
  std::ofstream(out / "detections.csv") << det.str();
  ctx.add_output(out / "detections.csv");
}

void cmd_prepare(RunContext& ctx) {
  const fs::path manifest = ctx.path("manifest");
  const fs::path out = ctx.out_dir();
  fs::create_directories(out);
  std::vector<prep::PairRecord> prepared;
  int i = 0;
  for (const auto& rec : prep::read_pair_manifest(manifest)) {
    ctx.add_input(rec.ct);
    ctx.add_input(rec.pet);
    const prep::ScanPair p =
        prep::prepare_pair(load_volume(rec.ct), load_volume(rec.pet), rec.dose_kbq, rec.weight_g, kCtWindow,
                           kSuvWindow, rec.slice_range);
    const fs::path ct = out / stem_name(i, "ct_norm");
    const fs::path pet = out / stem_name(i, "pet_norm");
    save_volume(p.ct, ct);
    save_volume(p.pet, pet);
    ctx.add_output(ct);
    ctx.add_output(pet);
    prepared.push_back({ct, pet, 1.0, 1.0, rec.slice_range});
    ++i;
  }
  require(!prepared.empty(), ErrorCode::kEmptyInput, manifest.string() + " lists no scans");
  prep::write_pair_manifest(out / "prepared.csv", prepared);
  ctx.add_output(out / "prepared.csv");
  std::cout << "prepared " << prepared.size() << " scan pair(s)\n";
}

void cmd_train_fcn(RunContext& ctx) {
  const train::TrainConfig cfg = train_config(ctx);
  const auto scans = load_prepared(ctx);
  const Split split = split_slices(scans, ctx.real("val_fraction"), cfg.seed);
  const fs::path out = ctx.out_dir();
  std::cout << "training FCN on " << split.train.size() << " slices (" << split.val.size() << " validation), "
            << cfg.max_steps << " steps\n";
  const train::TrainState s = train::train_fcn(split.train, cfg, split.val);
  train::save_checkpoint(s, out / "fcn.ckpt");
  train::write_loss_csv(s.history, out / "fcn_loss.csv");
  ctx.add_output(out / "fcn.ckpt");
  ctx.add_output(out / "fcn_loss.csv");
  print_loss_tail(s, {"fcn_l2", "val_loss"});
  if (s.stopped_early) std::cout << "  stopped early at step " << s.step << '\n';
}

void cmd_train_cgan(RunContext& ctx) {
  const train::TrainConfig cfg = train_config(ctx);
  const train::TrainState fcn = train::load_checkpoint(ctx.path("fcn"));
  const auto scans = load_prepared(ctx);
  const Split split = split_slices(scans, ctx.real("val_fraction"), cfg.seed);
  const fs::path out = ctx.out_dir();
  std::cout << "training cGAN on " << split.train.size() << " slices (" << split.val.size() << " validation), "
            << cfg.max_steps << " steps\n";
  const train::TrainState s = train::train_cgan(split.train, fcn, cfg, split.val);
  train::save_checkpoint(s, out / "cgan.ckpt");
  train::write_loss_csv(s.history, out / "cgan_loss.csv");
  ctx.add_output(out / "cgan.ckpt");
  ctx.add_output(out / "cgan_loss.csv");
  print_loss_tail(s, {"d_loss", "d_acc", "g_adv", "g_recon", "val_loss"});
  if (!split.val.empty()) {
    std::cout << "  held-out discriminator accuracy " << train::discriminator_accuracy(s, fcn, split.val) << '\n';
  }
}

void cmd_synthesize(RunContext& ctx) {
  const train::TrainState fcn = train::load_checkpoint(ctx.path("fcn"));
  std::optional<train::TrainState> cgan;
  if (ctx.has("cgan")) cgan = train::load_checkpoint(ctx.path("cgan"));
  const auto scans = load_prepared(ctx);
  const fs::path out = ctx.out_dir();
  fs::create_directories(out);
  std::ostringstream table;
  table << "scan,syn,ref,slice_lo,slice_hi\n";
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const Volume3D syn = train::synthesize(scans[i].pair.ct, fcn, cgan ? &*cgan : nullptr);
    const fs::path syn_path = out / stem_name(static_cast<int>(i), "vpet");
    const fs::path ref_path = out / stem_name(static_cast<int>(i), "ref");
    save_volume(syn, syn_path);
    save_volume(scans[i].pair.pet, ref_path);
    ctx.add_output(syn_path);
    ctx.add_output(ref_path);
    table << scans[i].id << ',' << syn_path.filename().generic_string() << ',' << ref_path.filename().generic_string()
          << ',';
    if (scans[i].pair.slice_range) table << scans[i].pair.slice_range->lo << ',' << scans[i].pair.slice_range->hi;
    else table << ',';
    table << '\n';
  }
  std::ofstream(out / "synthesized.csv") << table.str();
  ctx.add_output(out / "synthesized.csv");
  std::cout << "synthesized " << scans.size() << " volume(s) with " << (cgan ? "FCN + cGAN" : "FCN only") << '\n';
}

void cmd_evaluate(RunContext& ctx) {
  const double suv_th = ctx.real("suv_th");
  std::vector<eval::ReconReport> reports;
  if (ctx.has("pred") || ctx.has("ref")) {
    const Volume3D pred = load_volume(ctx.path("pred"));
    const Volume3D ref = load_volume(ctx.path("ref"));
    const eval::ReconRecord r = eval::evaluate_pair(pred, ref, std::nullopt, "pair", suv_th);
    reports.push_back(eval::aggregate_report(std::span(&r, 1), ctx.has("label") ? ctx.text("label") : "synthesized"));
  }
  std::stringstream specs(ctx.text("syn"));
  std::string spec;
  while (std::getline(specs, spec, ';')) {
    if (spec.empty()) continue;
    const auto eq = spec.find('=');
    const std::string label = eq == std::string::npos ? "synthesized" : spec.substr(0, eq);
    const fs::path table = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
    ctx.add_input(table);
    std::vector<eval::ReconRecord> records;
    for (const Row& row : read_table(table)) {
      const Volume3D syn = load_volume(column_path(row, "syn", table));
      const Volume3D ref = load_volume(column_path(row, "ref", table));
      std::optional<prep::SliceRange> range;
      if (!row.at("slice_lo").empty()) range = prep::SliceRange{std::stoi(row.at("slice_lo")), std::stoi(row.at("slice_hi"))};
      records.push_back(eval::evaluate_pair(syn, ref, range, row.at("scan"), suv_th));
    }
    reports.push_back(eval::aggregate_report(records, label));
  }
  if (reports.empty()) throw UsageError("evaluate needs --syn LABEL=TABLE or --pred/--ref");
  const fs::path out = ctx.out_dir();
  eval::write_report_csv(reports, out / "report.csv");
  const std::string text = eval::render_table(reports);
  std::ofstream(out / "report.txt") << text;
  ctx.add_output(out / "report.csv");
  ctx.add_output(out / "report.txt");
  std::cout << text;
}

nlohmann::json score_json(const lesion::DetectionScore& s) {
  return {{"tpr", s.tpr ? nlohmann::json(*s.tpr) : nlohmann::json(nullptr)},
          {"fpr", s.fpr},
          {"lesions", s.lesions},
          {"detected", s.detected},
          {"false_positives", s.false_positives}};
}

void cmd_reduce_fp(RunContext& ctx) {
  const Volume3D syn = load_volume(ctx.path("syn"));
  lesion::CandidateSet cands;
  if (ctx.has("candidates")) {
    cands = lesion::connected_components(load_volume(ctx.path("candidates")));
  } else {
    const Volume3D prob = load_volume(ctx.path("prob"));
    const double th = ctx.real("prob_th");
    std::vector<float> bin(prob.size());
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = prob.data()[i] > th ? 1.0f : 0.0f;
    cands = lesion::connected_components(prob.with_data(std::move(bin), Modality::kMask), prob);
  }
  const int min_overlap = ctx.integer("min_overlap");
  if (min_overlap < 1) throw UsageError("--min-overlap must be >= 1");
  const Volume3D suv_mask = lesion::suv_threshold_mask(syn, ctx.real("suv_th"));
  const lesion::CandidateSet kept = lesion::reduce_false_positives(cands, suv_mask, min_overlap);

  const fs::path out = ctx.out_dir();
  save_volume(kept.to_mask(), out / "candidates_reduced.mvol.json");
  ctx.add_output(out / "candidates_reduced.mvol.json");
  nlohmann::json result{{"candidates_before", cands.size()}, {"candidates_after", kept.size()}};
  std::cout << "candidates: " << cands.size() << " -> " << kept.size() << '\n';
  if (ctx.has("gt")) {
    const lesion::CandidateSet gt = lesion::connected_components(load_volume(ctx.path("gt")));
    const auto before = lesion::score_detection(cands, gt, min_overlap);
    const auto after = lesion::score_detection(kept, gt, min_overlap);
    result["before"] = score_json(before);
    result["after"] = score_json(after);
    std::cout << "TPR " << (before.tpr ? std::to_string(*before.tpr) : "undefined") << " -> "
              << (after.tpr ? std::to_string(*after.tpr) : "undefined") << ", FPs/scan " << before.fpr << " -> "
              << after.fpr << '\n';
  }
  std::ofstream(out / "detection.json") << result.dump(2) << '\n';
  ctx.add_output(out / "detection.json");
}

void cmd_froc(RunContext& ctx) {
  const fs::path det_table = ctx.path("detections");
  const fs::path syn_table = ctx.path("syn");
  std::map<std::string, fs::path> syn_by_scan;
  for (const Row& r : read_table(syn_table)) syn_by_scan[r.at("scan")] = column_path(r, "syn", syn_table);

  std::vector<double> grid;
  {
    std::stringstream ss(ctx.text("thresholds"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        grid.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw UsageError("--thresholds: cannot parse '" + item + "'");
      }
    }
  }

  std::vector<Volume3D> probs, syns;
  std::vector<lesion::CandidateSet> gts;
  for (const Row& r : read_table(det_table)) {
    auto it = syn_by_scan.find(r.at("scan"));
    require(it != syn_by_scan.end(), ErrorCode::kMalformedSidecar, "no synthesized PET for " + r.at("scan"));
    probs.push_back(load_volume(column_path(r, "prob", det_table)));
    gts.push_back(lesion::connected_components(load_volume(column_path(r, "gt", det_table))));
    syns.push_back(load_volume(it->second));
  }
  std::vector<lesion::FrocScan> scans;
  for (std::size_t i = 0; i < probs.size(); ++i) scans.push_back({&probs[i], &gts[i], &syns[i]});
  const double suv_th = ctx.real("suv_th");
  const auto without = lesion::froc(scans, grid, false, suv_th);
  const auto with = lesion::froc(scans, grid, true, suv_th);

  const fs::path out = ctx.out_dir();
  lesion::write_froc_csv(out / "froc.csv", without, with);
  lesion::write_froc_svg(out / "froc.svg", without, with, ctx.real("prob_th"));
  ctx.add_output(out / "froc.csv");
  ctx.add_output(out / "froc.svg");
  std::printf("%-9s %-22s %-22s\n", "th", "detector (FPR, TPR)", "+virtual PET (FPR, TPR)");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::printf("%-9.2f %6.2f, %-13.3f %6.2f, %-13.3f\n", grid[i], without[i].mean_fpr,
                without[i].tpr.value_or(std::nan("")), with[i].mean_fpr, with[i].tpr.value_or(std::nan("")));
  }
}

// --- option tables ----------------------------------------------------------------

const std::vector<OptSpec> kCommon = {
    {"seed", "0", "random seed"},
    {"out", "", "output directory"},
};

const std::vector<OptSpec> kTraining = {
    {"data", "", "prepared pair manifest (prepared.csv)"},
    {"steps", "200", "optimizer steps"},
    {"width_scale", "0.25", "channel width multiplier"},
    {"input_size", "64", "slice height and width"},
    {"lambda", "20", "reconstruction weight in the generator objective"},
    {"suv_th", "2.5", "high/low SUV threshold"},
    {"learning_rate", "1e-5", "Adam learning rate"},
    {"batch_size", "4", "slices per step"},
    {"adam_beta1", "0.5", "Adam beta1"},
    {"adam_beta2", "0.999", "Adam beta2"},
    {"adam_epsilon", "1e-8", "Adam epsilon"},
    {"fcn_kind", "FCN4s", "FCN4s, FCN8s or FCN2s"},
    {"augment", "true", "online scale/translation augmentation"},
    {"noise_bound", "0.005", "CT input noise bound"},
    {"joint_finetune", "false", "also update the FCN during cGAN training"},
    {"early_stop_patience", "0", "validation checks without improvement before stopping (0: off)"},
    {"val_interval", "50", "steps between validation checks"},
    {"val_fraction", "0.2", "held-out fraction (whole scans when there are several)"},
};

std::vector<OptSpec> concat(std::initializer_list<std::vector<OptSpec>> parts) {
  std::vector<OptSpec> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Command> commands() {
  return {
      {"phantom", "write a synthetic CT/PET dataset with lesion masks and detector candidates",
       concat({kCommon,
               {{"n_scans", "4", "number of phantom scans"},
                {"n_lesions", "2", "lesions per scan"},
                {"n_false", "3", "planted false-positive candidates per scan"},
                {"size", "64", "CT slice width and height"},
                {"slices", "16", "CT slices"}}}),
       cmd_phantom},
      {"prepare", "convert, align and window CT/PET pairs listed in a pair manifest",
       concat({kCommon, {{"manifest", "", "pair manifest (ct,pet,dose,weight,slice_lo,slice_hi)"}}}), cmd_prepare},
      {"train-fcn", "stage one: train the FCN on prepared pairs", concat({kCommon, kTraining}), cmd_train_fcn},
      {"train-cgan", "stage two: train the cGAN refinement against a frozen FCN",
       concat({kCommon, kTraining, {{"fcn", "", "FCN checkpoint"}}}), cmd_train_cgan},
      {"synthesize", "predict virtual PET volumes for prepared CT volumes",
       concat({kCommon,
               {{"data", "", "prepared pair manifest"},
                {"fcn", "", "FCN checkpoint"},
                {"cgan", "", "optional cGAN checkpoint"}}}),
       cmd_synthesize},
      {"evaluate", "MAE/PSNR report split by SUV region",
       concat({kCommon,
               {{"syn", "", "LABEL=synthesized.csv; repeat or separate with ';' to compare methods"},
                {"pred", "", "single predicted volume"},
                {"ref", "", "single reference volume"},
                {"label", "", "method label for --pred/--ref"},
                {"suv_th", "2.5", "high/low SUV threshold"}}}),
       cmd_evaluate},
      {"reduce-fp", "drop candidate components that miss the high-SUV region of a virtual PET",
       concat({kCommon,
               {{"syn", "", "synthesized PET volume"},
                {"candidates", "", "binary candidate mask"},
                {"prob", "", "probability map (used when --candidates is absent)"},
                {"gt", "", "optional ground-truth lesion mask for scoring"},
                {"suv_th", "2.5", "SUV threshold"},
                {"prob_th", "0.95", "probability threshold for --prob"},
                {"min_overlap", "1", "voxels of overlap needed to keep a candidate"}}}),
       cmd_reduce_fp},
      {"froc", "FROC curves with and without the virtual-PET reduction layer",
       concat({kCommon,
               {{"detections", "", "table with scan,prob,gt columns"},
                {"syn", "", "synthesized.csv from the synthesize command"},
                {"thresholds", "0.80,0.85,0.90,0.95,0.99", "probability thresholds"},
                {"suv_th", "2.5", "SUV threshold"},
                {"prob_th", "0.95", "operating point highlighted in the plot"}}}),
       cmd_froc},
  };
}

int run_command(const Command& cmd, const Options& given, const std::optional<fs::path>& config_file) {
  Options resolved;
  std::optional<RunContext> ctx;
  try {
    for (const auto& o : cmd.options) resolved[o.key] = o.fallback;
    if (config_file) {
      for (const auto& [k, v] : read_config_file(*config_file)) {
        if (!resolved.contains(k)) throw UsageError("config key '" + k + "' is not valid for " + cmd.name);
        resolved[k] = v;
      }
    }
    for (const auto& [k, v] : given) resolved[k] = v;
  } catch (const UsageError& e) {
    std::cerr << "vpet " << cmd.name << ": " << e.what() << '\n';
    return kExitUsage;
  }

  ctx.emplace(cmd.name, resolved);
  int code = kExitOk;
  std::string message;
  try {
    cmd.run(*ctx);
  } catch (const UsageError& e) {
    code = kExitUsage;
    message = e.what();
  } catch (const Error& e) {
    code = e.code() == ErrorCode::kDivergence ? kExitDivergence : kExitData;
    message = e.what();
  } catch (const std::exception& e) {
    code = kExitData;
    message = e.what();
  }
  if (code != kExitOk) std::cerr << "vpet " << cmd.name << ": " << message << '\n';
  try {
    if (code != kExitUsage || ctx->has("out")) {
      if (auto p = ctx->write_manifest(code == kExitOk ? "ok" : "failed", message)) {
        std::cout << "manifest: " << p->generic_string() << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "vpet " << cmd.name << ": cannot write manifest: " << e.what() << '\n';
    if (code == kExitOk) code = kExitData;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual PET: CT-to-PET synthesis, evaluation and false-positive reduction"};
  app.require_subcommand(1);
  const std::vector<Command> cmds = commands();

  struct Bound {
    CLI::App* sub;
    std::map<std::string, std::string> values;
    std::map<std::string, std::vector<std::string>> multi;
    std::map<std::string, CLI::Option*> opts;
    std::string config;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& c : cmds) {
    auto b = std::make_unique<Bound>();
    b->sub = app.add_subcommand(c.name, c.description);
    b->sub->add_option("--config", b->config, "key = value file; flags override it");
    for (const auto& o : c.options) {
      const std::string help = o.help + (o.fallback.empty() ? "" : " (default " + o.fallback + ")");
      if (c.name == "evaluate" && o.key == "syn") {
        b->opts[o.key] = b->sub->add_option(flag_of(o.key), b->multi[o.key], help);
      } else {
        b->opts[o.key] = b->sub->add_option(flag_of(o.key), b->values[o.key], help);
      }
    }
    bound.push_back(std::move(b));
  }

  std::string replay_path;
  CLI::App* replay = app.add_subcommand("replay", "rerun a command from its run manifest");
  replay->add_option("manifest", replay_path, "a <command>.manifest.json file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (replay->parsed()) {
    nlohmann::json m;
    try {
      std::ifstream in(replay_path);
      if (!in) throw std::runtime_error("cannot read " + replay_path);
      m = nlohmann::json::parse(in);
      const std::string name = m.at("command").get<std::string>();
      for (const auto& c : cmds) {
        if (c.name == name) return run_command(c, m.at("config").get<Options>(), std::nullopt);
      }
      throw std::runtime_error("unknown command '" + name + "' in manifest");
    } catch (const std::exception& e) {
      std::cerr << "vpet replay: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Bound& b = *bound[i];
    if (!b.sub->parsed()) continue;
    Options given;
    for (const auto& [key, opt] : b.opts) {
      if (opt->count() == 0) continue;
      if (b.multi.contains(key)) {
        std::string joined;
        for (const auto& v : b.multi[key]) joined += (joined.empty() ? "" : ";") + v;
        given[key] = joined;
      } else {
        given[key] = b.values[key];
      }
    }
    std::optional<fs::path> config;
    if (!b.config.empty()) config = b.config;
    return run_command(cmds[i], given, config);
  }
  return kExitUsage;
}
