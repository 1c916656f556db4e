// Copyright 2026 The dctscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "dctscope/error.h"
#include "dctscope/jpeg_codec.h"
#include "dctscope/png_io.h"

namespace dctscope::cli {
namespace fs = std::filesystem;
namespace {

[[noreturn]] void ConfigError(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

void CheckKeys(const Json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      ConfigError(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

template <typename T>
T Get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    ConfigError(std::string("bad value for '") + key + "'");
  }
}

void CheckQualities(const std::vector<int>& qs, const char* what) {
  if (qs.empty()) ConfigError(std::string(what) + " is empty");
  for (int q : qs) {
    if (q < 1 || q > 100) ConfigError(std::string(what) + " outside [1, 100]");
  }
}

Json ReadJsonFile(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    ConfigError(path + ": " + e.what());
  }
}

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

GrayImage ToGray(const ProbabilityMap& p) {
  GrayImage g(p.width, p.height);
  for (size_t i = 0; i < p.size(); ++i) {
    g.values[i] = static_cast<uint8_t>(std::lround(std::clamp(p.values[i], 0.0, 1.0) * 255));
  }
  return g;
}

Mask Binarize(const GrayImage& img) {
  Mask m(img.width, img.height);
  for (size_t i = 0; i < img.size(); ++i) m.values[i] = img.values[i] >= 128 ? 1 : 0;
  return m;
}

GrayImage MaskImage(const Mask& m) {
  GrayImage g(m.width, m.height);
  for (size_t i = 0; i < m.size(); ++i) g.values[i] = m.values[i] ? 255 : 0;
  return g;
}

bool IsPng(std::span<const uint8_t> b) {
  static const uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  return b.size() >= 8 && std::equal(kSig, kSig + 8, b.begin());
}

std::string KindName(SynthKind k) {
  switch (k) {
    case SynthKind::kSplice: return "splice";
    case SynthKind::kCopyMove: return "copy_move";
    case SynthKind::kDjpeg: return "djpeg";
  }
  return "splice";
}

std::string Numbered(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d.%s", i, ext);
  return buf;
}

std::string VariantName(const LearnerArch& a) {
  return InputKindName(a.input) + (a.use_qtable ? "+qt" : "");
}

Json ArchToJson(const LearnerArch& a) {
  return {{"input", InputKindName(a.input)},   {"use_qtable", a.use_qtable},
          {"threshold", a.threshold},          {"dilated_width", a.dilated_width},
          {"branch_width", a.branch_width},    {"post_width", a.post_width}};
}

Json TrainConfigToJson(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"lr_decay", t.lr_decay},
          {"lr_step_epochs", t.lr_step_epochs},
          {"momentum", t.momentum},
          {"weight_decay", t.weight_decay},
          {"seed", t.seed}};
}

Json EstimateToJson(const Q1Estimate& e) {
  Json freqs = Json::array();
  for (const FrequencyEstimate& f : e.frequencies) {
    freqs.push_back({{"row", f.frequency.row},
                     {"col", f.frequency.col},
                     {"q2", f.q2},
                     {"effective_q2", f.effective_q2},
                     {"q1", f.q1},
                     {"score", f.score},
                     {"reliable", f.reliable}});
  }
  return {{"confidence", e.confidence},
          {"reliable", e.reliable},
          {"blocks", e.blocks},
          {"frequencies", freqs}};
}

struct CommonFlags {
  int workers = 0;
  int Workers() const { return workers > 0 ? workers : DefaultWorkers(); }
};

// ---- analyze ----

struct AnalyzeArgs {
  std::string image, mask, out, checkpoint, config;
};

Json CmdAnalyze(const AnalyzeArgs& a) {
  AdqConfig adq;
  if (!a.config.empty()) {
    const Json j = ReadJsonFile(a.config);
    CheckKeys(j, {"schema_version", "adq"}, "analyze config");
    if (j.contains("adq")) adq = ParseAdqConfig(j.at("adq"));
  }
  const std::vector<uint8_t> bytes = ReadFileBytes(a.image);
  JpegModel model;
  Json decoder;
  if (IsPng(bytes)) {
    model = CoeffsFromUncompressed(DecodePng(bytes));
    decoder["format"] = "png";
    decoder["qtable"] = "all-ones (uncompressed path)";
  } else {
    model = DecodeJpeg(bytes);
    decoder["format"] = "jpeg";
    const std::optional<int> q = MatchQuality(model.luma_qtable);
    decoder["qtable"] = q ? "standard quality " + std::to_string(*q) : "custom";
  }
  decoder["quality_match"] = model.from_uncompressed ? Json(nullptr)
                             : MatchQuality(model.luma_qtable)
                                 ? Json(*MatchQuality(model.luma_qtable))
                                 : Json(nullptr);
  decoder["width"] = model.pixel_width;
  decoder["height"] = model.pixel_height;
  decoder["restart_interval"] = model.restart_interval;
  decoder["chroma_components"] = model.chroma.size();
  decoder["luma_qtable"] = model.luma_qtable.steps();

  std::optional<Mask> mask;
  if (!a.mask.empty()) {
    mask = Binarize(ReadPng(a.mask));
    if (mask->width != model.pixel_width || mask->height != model.pixel_height) {
      throw Error(ErrorCode::kDimMismatch, "mask and image sizes differ");
    }
  }
  const AnalysisOutcome outcome = AnalyzeModel(model, adq);
  fs::create_directories(a.out);
  WriteFileAtomic(fs::path(a.out) / "heatmap.png", EncodePng(ToGray(outcome.map.pixels)));

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = kToolVersion;
  report["command"] = "analyze";
  report["input"] = a.image;
  report["decoder"] = decoder;
  report["q1_estimate"] = outcome.estimate ? EstimateToJson(*outcome.estimate) : Json(nullptr);
  report["unreliable"] = outcome.map.unreliable;
  report["warning"] = outcome.map.warning;
  report["heatmap"] = (fs::path(a.out) / "heatmap.png").string();
  if (mask) {
    report["mask"] = a.mask;
    report["metrics"] = MetricsToJson(EvaluateMap(*mask, outcome.map.pixels));
  }
  if (!a.checkpoint.empty()) {
    const LearnerParams params = LoadCheckpoint(a.checkpoint);
    const ProbabilityMap lm = SlidingWindowMap(params, model);
    const fs::path lpath = fs::path(a.out) / "learner_heatmap.png";
    WriteFileAtomic(lpath, EncodePng(ToGray(lm)));
    Json learner = {{"checkpoint", a.checkpoint},
                    {"variant", VariantName(params.arch)},
                    {"heatmap", lpath.string()}};
    if (mask) learner["metrics"] = MetricsToJson(EvaluateMap(*mask, lm));
    report["learner"] = learner;
  }
  report["config"] = {{"adq", ConfigToJson(adq)}};
  WriteFileAtomic(fs::path(a.out) / "report.json", Dump(report));
  return report;
}

// ---- synth ----

Json CmdSynth(const std::string& config_path, const std::string& out,
              std::optional<uint64_t> seed, int workers) {
  SynthConfig c;
  if (!config_path.empty()) c = ParseSynthConfig(ReadJsonFile(config_path));
  if (seed) c.seed = *seed;
  const fs::path root(out);
  fs::create_directories(root / "images");
  std::vector<std::string> lines;
  if (c.kind == SynthKind::kDjpeg) {
    const std::vector<PatchSample> samples =
        GenDjpegDataset(c.seed, c.count, c.size, c.qualities);
    for (size_t i = 0; i < samples.size(); ++i) {
      const std::string file = "images/" + Numbered(static_cast<int>(i), "jpg");
      WriteFileAtomic(root / file, samples[i].jpeg);
      Json line = {{"index", i},
                   {"kind", "djpeg"},
                   {"file", file},
                   {"mask", nullptr},
                   {"label", samples[i].label},
                   {"q1", samples[i].q1 ? Json(*samples[i].q1) : Json(nullptr)},
                   {"q2", samples[i].q2},
                   {"source", samples[i].source}};
      lines.push_back(line.dump());
    }
  } else {
    fs::create_directories(root / "masks");
    const std::vector<SynthRecipe> recipes = ForgeryRecipes(c);
    lines.resize(recipes.size());
    ParallelFor(recipes.size(), workers, [&](size_t i) {
      const SynthRecipe& r = recipes[i];
      const ForgerySample s = GenerateForgery(c.kind, r);
      const std::string file = "images/" + Numbered(static_cast<int>(i), "jpg");
      const std::string mask = "masks/" + Numbered(static_cast<int>(i), "png");
      WriteFileAtomic(root / file, s.jpeg);
      WriteFileAtomic(root / mask, EncodePng(MaskImage(s.mask)));
      const PasteGeometry& g = s.geometry;
      Json line = {
          {"index", i},
          {"kind", KindName(c.kind)},
          {"file", file},
          {"mask", mask},
          {"label", 1},
          {"recipe",
           {{"seed", r.seed},
            {"size", r.size},
            {"q1_background", r.q1_background},
            {"q1_donor", r.q1_donor ? Json(*r.q1_donor) : Json(nullptr)},
            {"q2", r.q2},
            {"alignment", AlignmentModeName(r.alignment)},
            {"rotate", r.rotate},
            {"resize", r.resize},
            {"photo_fraction", r.photo_fraction}}},
          {"geometry",
           {{"background", g.background_id},
            {"donor", g.donor_id},
            {"source_x", g.source_x},
            {"source_y", g.source_y},
            {"paste_x", g.paste_x},
            {"paste_y", g.paste_y},
            {"box_width", g.box_width},
            {"box_height", g.box_height},
            {"aligned", g.aligned},
            {"resampled", g.resampled},
            {"mask_area", g.mask_area}}}};
      lines[i] = line.dump();
    });
  }
  std::string manifest;
  for (const std::string& l : lines) manifest += l + "\n";
  WriteFileAtomic(root / "manifest.jsonl", manifest);
  Json echo = {{"schema_version", kSchemaVersion}, {"config", SynthConfigToJson(c)}};
  WriteFileAtomic(root / "synth_config.json", Dump(echo));
  return {{"schema_version", kSchemaVersion},
          {"tool_version", kToolVersion},
          {"command", "synth"},
          {"manifest", (root / "manifest.jsonl").string()},
          {"samples", lines.size()},
          {"config", SynthConfigToJson(c)}};
}

// ---- train ----

Json CmdTrain(const std::string& config_path, const std::string& out,
              std::optional<uint64_t> seed, std::optional<int> epochs, std::ostream& err) {
  TrainJob job;
  if (!config_path.empty()) job = ParseTrainJob(ReadJsonFile(config_path));
  if (seed) job.train.seed = *seed;
  if (epochs) job.train.epochs = *epochs;
  std::vector<TrainExample> train, val;
  LoadTrainData(job, train, val);
  const TrainResult r = Train(job.arch, job.train, train, val, [&](const EpochRecord& e) {
    err << "epoch " << e.epoch << " loss " << e.train_loss << " train_acc " << e.train.acc
        << " val_acc " << e.val.acc << std::endl;
  });
  const fs::path root(out);
  fs::create_directories(root);
  SaveCheckpoint(root / "checkpoint.bin", r.params);
  SaveCheckpoint(root / "final.bin", r.final_params);
  WriteFileAtomic(root / "history.csv", HistoryCsv(r.history));
  Json history = Json::array();
  for (const EpochRecord& e : r.history) {
    history.push_back({{"epoch", e.epoch},
                       {"learning_rate", e.learning_rate},
                       {"train_loss", e.train_loss},
                       {"train", ClassMetricsToJson(e.train)},
                       {"val", ClassMetricsToJson(e.val)}});
  }
  Json report = {{"schema_version", kSchemaVersion},
                 {"tool_version", kToolVersion},
                 {"command", "train"},
                 {"variant", VariantName(job.arch)},
                 {"train_count", train.size()},
                 {"val_count", val.size()},
                 {"best_epoch", r.best_epoch},
                 {"best_val", ClassMetricsToJson(r.best_val)},
                 {"checkpoint", (root / "checkpoint.bin").string()},
                 {"final_checkpoint", (root / "final.bin").string()},
                 {"history_csv", (root / "history.csv").string()},
                 {"history", history},
                 {"config", TrainJobToJson(job)}};
  WriteFileAtomic(root / "train_report.json", Dump(report));
  return report;
}

// ---- eval ----

Json CmdEval(const std::vector<std::string>& checkpoints, const std::string& manifest,
             const std::string& out) {
  const std::vector<TrainExample> data = LoadManifestExamples(manifest);
  Json rows = Json::array();
  std::string csv = "variant,checkpoint,acc,tpr,tnr,count\n";
  for (const std::string& path : checkpoints) {
    const LearnerParams p = LoadCheckpoint(path);
    const ClassMetrics m = Evaluate(p, data);
    rows.push_back({{"variant", VariantName(p.arch)},
                    {"checkpoint", path},
                    {"acc", m.acc},
                    {"tpr", m.tpr},
                    {"tnr", m.tnr},
                    {"count", m.count}});
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%lld\n", m.acc, m.tpr, m.tnr,
                  static_cast<long long>(m.count));
    csv += VariantName(p.arch) + "," + path + buf;
  }
  Json report = {{"schema_version", kSchemaVersion},
                 {"tool_version", kToolVersion},
                 {"command", "eval"},
                 {"manifest", manifest},
                 {"rows", rows}};
  if (!out.empty()) {
    fs::create_directories(out);
    WriteFileAtomic(fs::path(out) / "eval_table.csv", csv);
    report["table_csv"] = (fs::path(out) / "eval_table.csv").string();
    WriteFileAtomic(fs::path(out) / "eval.json", Dump(report));
  }
  return report;
}

// ---- qgrid ----

Json CmdQgrid(const std::string& config_path, const std::string& out,
              std::optional<int> q3, int workers) {
  SynthConfig grid;
  AdqConfig adq;
  double band = 0.05;
  int shrink = 2;
  if (!config_path.empty()) {
    const Json j = ReadJsonFile(config_path);
    CheckKeys(j, {"schema_version", "grid", "adq", "band", "montage_shrink"}, "qgrid config");
    if (j.contains("grid")) grid = ParseSynthConfig(j.at("grid"));
    if (j.contains("adq")) adq = ParseAdqConfig(j.at("adq"));
    band = Get(j, "band", band);
    shrink = Get(j, "montage_shrink", shrink);
  }
  if (grid.kind == SynthKind::kDjpeg) ConfigError("qgrid needs a forgery grid");
  if (shrink < 1 || grid.size % shrink) ConfigError("montage_shrink must divide size");
  const QgridResult r = RunQgrid(grid, adq, workers, q3);
  const fs::path root(out);
  fs::create_directories(root);
  std::string csv = "q1\\q2";
  for (int q2 : r.q2s) csv += "," + std::to_string(q2);
  csv += "\n";
  Json cells = Json::array();
  for (size_t i = 0; i < r.q1s.size(); ++i) {
    csv += std::to_string(r.q1s[i]);
    for (size_t k = 0; k < r.q2s.size(); ++k) {
      const QgridCell& c = r.at(i, k);
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.4f", c.mean_p_ap);
      csv += buf;
      cells.push_back({{"q1", c.q1},
                       {"q2", c.q2},
                       {"mean_p_ap", c.mean_p_ap},
                       {"inside_above_outside", c.inside_above_outside},
                       {"unreliable", c.unreliable},
                       {"images", c.images}});
    }
    csv += "\n";
  }
  WriteFileAtomic(root / "qgrid.csv", csv);
  WriteFileAtomic(root / "montage.png", EncodePng(Montage(r, shrink)));
  Json checks = Json::array();
  bool all = true;
  for (const MonotonicityCheck& m : CheckQgrid(r, band)) {
    checks.push_back({{"name", m.name}, {"pass", m.pass}, {"detail", m.detail}});
    all = all && m.pass;
  }
  Json report = {{"schema_version", kSchemaVersion},
                 {"tool_version", kToolVersion},
                 {"command", "qgrid"},
                 {"matrix_csv", (root / "qgrid.csv").string()},
                 {"montage", (root / "montage.png").string()},
                 {"montage_layout", {{"rows", "q1"}, {"columns", "q2"}}},
                 {"q3", q3 ? Json(*q3) : Json(nullptr)},
                 {"cells", cells},
                 {"monotonicity", {{"band", band}, {"pass", all}, {"checks", checks}}},
                 {"config", {{"grid", SynthConfigToJson(grid)}, {"adq", ConfigToJson(adq)}}}};
  WriteFileAtomic(root / "qgrid.json", Dump(report));
  return report;
}

}  // namespace

int DefaultWorkers() {
  if (const char* env = std::getenv("DCTSCOPE_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn) {
  const size_t threads = std::min<size_t>(n, static_cast<size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t failed_at = n;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SynthConfig ParseSynthConfig(const Json& j) {
  CheckKeys(j,
            {"schema_version", "kind", "seed", "size", "q1", "q2", "count_per_pair", "q1_donor",
             "alignment", "rotate", "resize", "photo_fraction", "count", "qualities"},
            "synth config");
  SynthConfig c;
  const std::string kind = Get<std::string>(j, "kind", "splice");
  if (kind == "splice") {
    c.kind = SynthKind::kSplice;
  } else if (kind == "copy_move") {
    c.kind = SynthKind::kCopyMove;
  } else if (kind == "djpeg") {
    c.kind = SynthKind::kDjpeg;
    c.size = 64;
  } else {
    ConfigError("unknown kind '" + kind + "'");
  }
  c.seed = Get(j, "seed", c.seed);
  c.size = Get(j, "size", c.size);
  c.q1 = Get(j, "q1", c.q1);
  c.q2 = Get(j, "q2", c.q2);
  c.count_per_pair = Get(j, "count_per_pair", c.count_per_pair);
  if (j.contains("q1_donor") && !j.at("q1_donor").is_null()) {
    c.q1_donor = Get(j, "q1_donor", 0);
    CheckQualities({*c.q1_donor}, "q1_donor");
  }
  const std::string align = Get<std::string>(j, "alignment", AlignmentModeName(c.alignment));
  const std::optional<AlignmentMode> mode = ParseAlignmentMode(align);
  if (!mode) ConfigError("unknown alignment '" + align + "'");
  c.alignment = *mode;
  c.rotate = Get(j, "rotate", c.rotate);
  c.resize = Get(j, "resize", c.resize);
  c.photo_fraction = Get(j, "photo_fraction", c.photo_fraction);
  c.count = Get(j, "count", c.count);
  c.qualities = Get(j, "qualities", c.qualities);
  CheckQualities(c.q1, "q1");
  CheckQualities(c.q2, "q2");
  CheckQualities(c.qualities, "qualities");
  if (c.size < 8 || c.size % 8) ConfigError("size must be a positive multiple of 8");
  if (c.count < 1 || c.count_per_pair < 1) ConfigError("counts must be positive");
  if (!(c.photo_fraction >= 0 && c.photo_fraction <= 1)) {
    ConfigError("photo_fraction outside [0, 1]");
  }
  return c;
}

Json SynthConfigToJson(const SynthConfig& c) {
  Json j = {{"kind", KindName(c.kind)}, {"seed", c.seed}, {"size", c.size}};
  if (c.kind == SynthKind::kDjpeg) {
    j["count"] = c.count;
    j["qualities"] = c.qualities;
  } else {
    j["q1"] = c.q1;
    j["q2"] = c.q2;
    j["count_per_pair"] = c.count_per_pair;
    j["q1_donor"] = c.q1_donor ? Json(*c.q1_donor) : Json(nullptr);
    j["alignment"] = AlignmentModeName(c.alignment);
    j["rotate"] = c.rotate;
    j["resize"] = c.resize;
    j["photo_fraction"] = c.photo_fraction;
  }
  return j;
}

std::vector<SynthRecipe> ForgeryRecipes(const SynthConfig& c) {
  std::vector<SynthRecipe> out;
  for (int q1 : c.q1) {
    for (int q2 : c.q2) {
      for (int i = 0; i < c.count_per_pair; ++i) {
        SynthRecipe r;
        r.seed = c.seed + static_cast<uint64_t>(i);
        r.size = c.size;
        r.q1_background = q1;
        r.q1_donor = c.q1_donor;
        r.q2 = q2;
        r.alignment = c.alignment;
        r.rotate = c.rotate;
        r.resize = c.resize;
        r.photo_fraction = c.photo_fraction;
        out.push_back(r);
      }
    }
  }
  return out;
}

ForgerySample GenerateForgery(SynthKind kind, const SynthRecipe& r) {
  if (kind == SynthKind::kCopyMove) return GenCopyMove(r);
  if (kind == SynthKind::kSplice) return GenSplice(r);
  ConfigError("not a forgery kind");
}

AnalysisOutcome AnalyzeModel(const JpegModel& model, const AdqConfig& config) {
  AnalysisOutcome out;
  try {
    out.estimate = EstimateQ1(model, config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientData) throw;
    const int bw = model.luma.blocks_wide(), bh = model.luma.blocks_high();
    out.map.pixels = ProbabilityMap(model.pixel_width, model.pixel_height, 0.5);
    out.map.blocks = ProbabilityMap(bw, bh, 0.5);
    out.map.unreliable = true;
    out.map.warning = e.what();
    return out;
  }
  out.map = BlockPosteriorMap(model, *out.estimate, config);
  return out;
}

QgridResult RunQgrid(const SynthConfig& c, const AdqConfig& adq, int workers,
                     std::optional<int> q3) {
  if (c.kind == SynthKind::kDjpeg) ConfigError("qgrid needs a forgery grid");
  const std::vector<SynthRecipe> recipes = ForgeryRecipes(c);
  struct Item {
    double p_ap = 0;
    bool inside_above = false;
    bool unreliable = false;
    ProbabilityMap map;
  };
  std::vector<Item> items(recipes.size());
  ParallelFor(recipes.size(), workers, [&](size_t i) {
    const ForgerySample s = GenerateForgery(c.kind, recipes[i]);
    const std::vector<uint8_t> bytes = q3 ? GenRecompressed(s.jpeg, *q3) : s.jpeg;
    const AnalysisOutcome a = AnalyzeModel(DecodeJpeg(bytes), adq);
    double in = 0, outside = 0;
    int64_t ni = 0, no = 0;
    for (size_t k = 0; k < s.mask.size(); ++k) {
      if (s.mask.values[k]) {
        in += a.map.pixels.values[k];
        ++ni;
      } else {
        outside += a.map.pixels.values[k];
        ++no;
      }
    }
    items[i].p_ap = EvaluateMap(s.mask, a.map.pixels).p_ap;
    items[i].inside_above = ni && no && in / ni > outside / no;
    items[i].unreliable = a.map.unreliable;
    if (i % c.count_per_pair == 0) items[i].map = a.map.pixels;
  });
  QgridResult r;
  r.q1s = c.q1;
  r.q2s = c.q2;
  size_t idx = 0;
  for (int q1 : c.q1) {
    for (int q2 : c.q2) {
      QgridCell cell;
      cell.q1 = q1;
      cell.q2 = q2;
      cell.images = c.count_per_pair;
      int wins = 0;
      r.example.push_back(items[idx].map);
      for (int i = 0; i < c.count_per_pair; ++i, ++idx) {
        cell.mean_p_ap += items[idx].p_ap;
        wins += items[idx].inside_above;
        cell.unreliable += items[idx].unreliable;
      }
      cell.mean_p_ap /= c.count_per_pair;
      cell.inside_above_outside = static_cast<double>(wins) / c.count_per_pair;
      r.cells.push_back(cell);
    }
  }
  return r;
}

std::vector<MonotonicityCheck> CheckQgrid(const QgridResult& r, double band) {
  std::vector<MonotonicityCheck> out;
  auto fmt = [](const char* f, int a, int b, double x, double y) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b, x, y);
    return std::string(buf);
  };
  MonotonicityCheck q1_check{"non_increasing_in_q1", true, ""};
  for (size_t k = 0; k < r.q2s.size(); ++k) {
    for (size_t i = 0; i + 1 < r.q1s.size(); ++i) {
      const double a = r.at(i, k).mean_p_ap, b = r.at(i + 1, k).mean_p_ap;
      if (r.q1s[i] < r.q1s[i + 1] ? b > a + band : a > b + band) {
        q1_check.pass = false;
        q1_check.detail += fmt("q2=%d q1=%d: %.3f vs %.3f; ", r.q2s[k], r.q1s[i + 1], b, a);
      }
    }
  }
  out.push_back(q1_check);
  MonotonicityCheck q2_check{"non_decreasing_in_q2", true, ""};
  for (size_t i = 0; i < r.q1s.size(); ++i) {
    for (size_t k = 0; k + 1 < r.q2s.size(); ++k) {
      const double a = r.at(i, k).mean_p_ap, b = r.at(i, k + 1).mean_p_ap;
      if (r.q2s[k] < r.q2s[k + 1] ? b < a - band : a < b - band) {
        q2_check.pass = false;
        q2_check.detail += fmt("q1=%d q2=%d: %.3f vs %.3f; ", r.q1s[i], r.q2s[k + 1], b, a);
      }
    }
  }
  out.push_back(q2_check);
  MonotonicityCheck diag{"diagonal_below_plus_20", true, ""};
  int compared = 0;
  for (size_t i = 0; i < r.q1s.size(); ++i) {
    const int q = r.q1s[i];
    if (q > 80) continue;
    const auto same = std::find(r.q2s.begin(), r.q2s.end(), q);
    const auto plus = std::find(r.q2s.begin(), r.q2s.end(), q + 20);
    if (same == r.q2s.end() || plus == r.q2s.end()) continue;
    const double d = r.at(i, same - r.q2s.begin()).mean_p_ap;
    const double p = r.at(i, plus - r.q2s.begin()).mean_p_ap;
    ++compared;
    if (!(d < p)) {
      diag.pass = false;
      diag.detail += fmt("q1=%d vs q2=%d: %.3f vs %.3f; ", q, q + 20, d, p);
    }
  }
  if (compared == 0) diag.detail = "no comparable cells";
  out.push_back(diag);
  return out;
}

GrayImage Montage(const QgridResult& r, int shrink) {
  const int gap = 2;
  int tile_w = 0, tile_h = 0;
  for (const ProbabilityMap& m : r.example) {
    tile_w = std::max(tile_w, m.width / shrink);
    tile_h = std::max(tile_h, m.height / shrink);
  }
  const int cols = static_cast<int>(r.q2s.size()), rows = static_cast<int>(r.q1s.size());
  GrayImage out(cols * tile_w + (cols + 1) * gap, rows * tile_h + (rows + 1) * gap, 255);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) {
      const ProbabilityMap& m = r.example[static_cast<size_t>(i) * cols + k];
      const int ox = gap + k * (tile_w + gap), oy = gap + i * (tile_h + gap);
      for (int y = 0; y < m.height / shrink; ++y) {
        for (int x = 0; x < m.width / shrink; ++x) {
          double sum = 0;
          for (int dy = 0; dy < shrink; ++dy) {
            for (int dx = 0; dx < shrink; ++dx) sum += m.at(x * shrink + dx, y * shrink + dy);
          }
          out.at(ox + x, oy + y) =
              static_cast<uint8_t>(std::lround(sum / (shrink * shrink) * 255));
        }
      }
    }
  }
  return out;
}

SynthConfig DefaultTrainingSet() {
  SynthConfig c;
  c.kind = SynthKind::kDjpeg;
  c.seed = kTrainingSetSeed;
  c.size = 64;
  return c;
}

TrainJob ParseTrainJob(const Json& j) {
  CheckKeys(j, {"schema_version", "dataset", "arch", "train"}, "train config");
  TrainJob t;
  {
    Json d = j.contains("dataset") ? j.at("dataset") : Json::object();
    if (!d.is_object()) ConfigError("dataset must be an object");
    t.manifest = Get<std::string>(d, "manifest", "");
    t.val_every = Get(d, "val_every", t.val_every);
    d.erase("manifest");
    d.erase("val_every");
    Json synth = d;
    if (!synth.contains("kind")) synth["kind"] = "djpeg";
    if (!synth.contains("seed")) synth["seed"] = kTrainingSetSeed;
    t.synth = ParseSynthConfig(synth);
    if (t.synth.kind != SynthKind::kDjpeg) ConfigError("training needs a djpeg dataset");
  }
  if (t.val_every < 2) ConfigError("val_every must be at least 2");
  if (j.contains("arch")) {
    const Json& a = j.at("arch");
    CheckKeys(a,
              {"input", "use_qtable", "threshold", "dilated_width", "branch_width",
               "post_width"},
              "arch");
    const std::string in = Get<std::string>(a, "input", InputKindName(t.arch.input));
    const std::optional<InputKind> kind = ParseInputKind(in);
    if (!kind) ConfigError("unknown input '" + in + "'");
    t.arch.input = *kind;
    t.arch.use_qtable = Get(a, "use_qtable", t.arch.use_qtable);
    t.arch.threshold = Get(a, "threshold", t.arch.threshold);
    t.arch.dilated_width = Get(a, "dilated_width", t.arch.dilated_width);
    t.arch.branch_width = Get(a, "branch_width", t.arch.branch_width);
    t.arch.post_width = Get(a, "post_width", t.arch.post_width);
  }
  if (j.contains("train")) {
    const Json& c = j.at("train");
    CheckKeys(c,
              {"epochs", "batch_size", "learning_rate", "lr_decay", "lr_step_epochs",
               "momentum", "weight_decay", "seed"},
              "train");
    t.train.epochs = Get(c, "epochs", t.train.epochs);
    t.train.batch_size = Get(c, "batch_size", t.train.batch_size);
    t.train.learning_rate = Get(c, "learning_rate", t.train.learning_rate);
    t.train.lr_decay = Get(c, "lr_decay", t.train.lr_decay);
    t.train.lr_step_epochs = Get(c, "lr_step_epochs", t.train.lr_step_epochs);
    t.train.momentum = Get(c, "momentum", t.train.momentum);
    t.train.weight_decay = Get(c, "weight_decay", t.train.weight_decay);
    t.train.seed = Get(c, "seed", t.train.seed);
  }
  ZeroParams(t.arch);  // validates the architecture
  return t;
}

Json TrainJobToJson(const TrainJob& t) {
  Json dataset = t.manifest.empty() ? SynthConfigToJson(t.synth) : Json{{"manifest", t.manifest}};
  dataset["val_every"] = t.val_every;
  return {{"dataset", dataset}, {"arch", ArchToJson(t.arch)}, {"train", TrainConfigToJson(t.train)}};
}

void LoadTrainData(const TrainJob& job, std::vector<TrainExample>& train,
                   std::vector<TrainExample>& val) {
  std::vector<TrainExample> all;
  if (!job.manifest.empty()) {
    all = LoadManifestExamples(job.manifest);
  } else {
    for (const PatchSample& s :
         GenDjpegDataset(job.synth.seed, job.synth.count, job.synth.size, job.synth.qualities)) {
      all.push_back(ExampleFromJpeg(s.jpeg, s.label));
    }
  }
  train.clear();
  val.clear();
  for (size_t i = 0; i < all.size(); ++i) {
    (static_cast<int>(i % job.val_every) == job.val_every - 1 ? val : train)
        .push_back(std::move(all[i]));
  }
}

std::vector<TrainExample> LoadManifestExamples(const std::string& manifest) {
  const std::vector<uint8_t> bytes = ReadFileBytes(manifest);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  const fs::path dir = fs::path(manifest).parent_path();
  std::vector<TrainExample> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception&) {
      ConfigError(manifest + ": line " + std::to_string(n) + " is not JSON");
    }
    if (!j.contains("file") || !j.contains("label")) {
      ConfigError(manifest + ": line " + std::to_string(n) + " lacks file or label");
    }
    const int label = Get(j, "label", 0);
    if (label != 0 && label != 1) ConfigError("labels must be 0 or 1");
    out.push_back(ExampleFromJpeg(ReadFileBytes(dir / Get<std::string>(j, "file", "")), label));
  }
  return out;
}

Json ConfigToJson(const AdqConfig& c) {
  return {{"frequency_count", c.frequency_count},
          {"min_blocks", c.min_blocks},
          {"candidate_min", c.candidate_min},
          {"candidate_max", c.candidate_max},
          {"top_k", c.top_k},
          {"reliability_threshold", c.reliability_threshold},
          {"min_empty_expected", c.min_empty_expected},
          {"max_empty_ratio", c.max_empty_ratio},
          {"histogram_bound", c.histogram_bound},
          {"smoothing", c.smoothing},
          {"max_log_ratio", c.max_log_ratio},
          {"prior_single", c.prior_single},
          {"requant_noise", c.requant_noise},
          {"fold_lattice", c.fold_lattice},
          {"saturation_margin", c.saturation_margin},
          {"neighbour_weight", c.neighbour_weight}};
}

AdqConfig ParseAdqConfig(const Json& j) {
  CheckKeys(j,
            {"frequency_count", "min_blocks", "candidate_min", "candidate_max", "top_k",
             "reliability_threshold", "min_empty_expected", "max_empty_ratio",
             "histogram_bound", "smoothing", "max_log_ratio", "prior_single", "requant_noise",
             "fold_lattice", "saturation_margin", "neighbour_weight"},
            "adq");
  AdqConfig c;
  c.frequency_count = Get(j, "frequency_count", c.frequency_count);
  c.min_blocks = Get(j, "min_blocks", c.min_blocks);
  c.candidate_min = Get(j, "candidate_min", c.candidate_min);
  c.candidate_max = Get(j, "candidate_max", c.candidate_max);
  c.top_k = Get(j, "top_k", c.top_k);
  c.reliability_threshold = Get(j, "reliability_threshold", c.reliability_threshold);
  c.min_empty_expected = Get(j, "min_empty_expected", c.min_empty_expected);
  c.max_empty_ratio = Get(j, "max_empty_ratio", c.max_empty_ratio);
  c.histogram_bound = Get(j, "histogram_bound", c.histogram_bound);
  c.smoothing = Get(j, "smoothing", c.smoothing);
  c.max_log_ratio = Get(j, "max_log_ratio", c.max_log_ratio);
  c.prior_single = Get(j, "prior_single", c.prior_single);
  c.requant_noise = Get(j, "requant_noise", c.requant_noise);
  c.fold_lattice = Get(j, "fold_lattice", c.fold_lattice);
  c.saturation_margin = Get(j, "saturation_margin", c.saturation_margin);
  c.neighbour_weight = Get(j, "neighbour_weight", c.neighbour_weight);
  return c;
}

Json MetricsToJson(const MetricReport& m) {
  return {{"acc", m.acc},
          {"f1", m.f1},
          {"ap", m.ap},
          {"p_acc", m.p_acc},
          {"p_f1", m.p_f1},
          {"p_ap", m.p_ap},
          {"has_positives", m.has_positives},
          {"f1_convention", m.f1_convention},
          {"counts",
           {{"tp", m.counts.tp}, {"tn", m.counts.tn}, {"fp", m.counts.fp}, {"fn", m.counts.fn}}}};
}

Json ClassMetricsToJson(const ClassMetrics& m) {
  return {{"acc", m.acc}, {"tpr", m.tpr}, {"tnr", m.tnr}, {"count", m.count}};
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dctscope: JPEG compression-artifact forensics"};
  app.require_subcommand(1);
  CommonFlags common;
  app.add_option("--workers", common.workers,
                 "worker threads (default: DCTSCOPE_WORKERS or 1)");

  AnalyzeArgs analyze;
  CLI::App* a = app.add_subcommand("analyze", "localize tampering in one image");
  a->add_option("--image", analyze.image, "JPEG or PNG")->required();
  a->add_option("--mask", analyze.mask, "ground-truth mask PNG");
  a->add_option("--out", analyze.out, "output directory")->required();
  a->add_option("--checkpoint", analyze.checkpoint, "learner checkpoint");
  a->add_option("--config", analyze.config, "JSON config");

  std::string config, outdir, manifest;
  std::optional<uint64_t> seed;
  std::optional<int> epochs, q3;
  std::vector<std::string> checkpoints;
  CLI::App* s = app.add_subcommand("synth", "generate a synthetic dataset");
  s->add_option("--config", config, "JSON config (default: the quality grid set)");
  s->add_option("--out", outdir, "output directory")->required();
  s->add_option("--seed", seed, "overrides the config seed");

  CLI::App* t = app.add_subcommand("train", "train the learner");
  t->add_option("--config", config, "JSON config");
  t->add_option("--out", outdir, "output directory")->required();
  t->add_option("--seed", seed, "overrides the training seed");
  t->add_option("--epochs", epochs, "overrides the epoch count");

  CLI::App* e = app.add_subcommand("eval", "evaluate checkpoints on a manifest");
  e->add_option("--checkpoint", checkpoints, "checkpoint (repeatable)")->required();
  e->add_option("--manifest", manifest, "JSON-lines manifest")->required();
  e->add_option("--out", outdir, "directory for the table");

  CLI::App* g = app.add_subcommand("qgrid", "localizer over a quality grid");
  g->add_option("--config", config, "JSON config");
  g->add_option("--out", outdir, "output directory")->required();
  g->add_option("--q3", q3, "recompress every image at this quality first");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }
  try {
    Json result;
    if (a->parsed()) {
      result = CmdAnalyze(analyze);
    } else if (s->parsed()) {
      result = CmdSynth(config, outdir, seed, common.Workers());
    } else if (t->parsed()) {
      result = CmdTrain(config, outdir, seed, epochs, err);
    } else if (e->parsed()) {
      result = CmdEval(checkpoints, manifest, outdir);
    } else if (g->parsed()) {
      if (q3 && (*q3 < 1 || *q3 > 100)) ConfigError("q3 outside [1, 100]");
      result = CmdQgrid(config, outdir, q3, common.Workers());
    }
    out << result.dump(2) << "\n";
    return 0;
  } catch (const Error& ex) {
    out << Json{{"schema_version", kSchemaVersion},
                {"error", {{"code", std::string(ErrorCodeName(ex.code()))},
                           {"message", ex.what()}}}}
               .dump()
        << "\n";
    return 2;
  } catch (const std::exception& ex) {
    out << Json{{"schema_version", kSchemaVersion},
                {"error", {{"code", "Internal"}, {"message", ex.what()}}}}
               .dump()
        << "\n";
    return 3;
  }
}

}  // namespace dctscope::cli
