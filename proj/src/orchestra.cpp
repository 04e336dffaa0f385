#include "ocrpipe/orchestra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ocrpipe/evalcer.hpp"
#include "ocrpipe/image_io.hpp"
#include "ocrpipe/rng.hpp"

namespace ocrpipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestSchema = "ocrpipe.manifest/1";
constexpr std::string_view kJobSchema = "ocrpipe.job/1";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// --- dataset -----------------------------------------------------------------

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::validation: return "validation";
    case SplitTag::test: return "test";
    case SplitTag::unassigned: break;
  }
  return "unassigned";
}

SplitTag parse_split_tag(std::string_view name) {
  if (name == "train") return SplitTag::train;
  if (name == "validation") return SplitTag::validation;
  if (name == "test") return SplitTag::test;
  if (name == "unassigned") return SplitTag::unassigned;
  throw std::invalid_argument("unknown split tag '" + std::string(name) + "'");
}

DatasetManifest ingest(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::map<std::string, std::vector<fs::path>> images;
  std::map<std::string, fs::path> gts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (ends_with(name, ".gt.txt")) {
      gts.emplace(name.substr(0, name.size() - 7), entry.path());
    } else if (is_image_file(entry.path())) {
      images[entry.path().stem().string()].push_back(entry.path());
    }
  }

  DatasetManifest m;
  for (auto& [id, paths] : images) {
    std::sort(paths.begin(), paths.end());
    auto gt = gts.find(id);
    if (gt == gts.end()) {
      for (const auto& p : paths) m.warnings.push_back("image without ground truth: " + p.string());
      continue;
    }
    // prefer .png when both encodings exist
    auto png = std::find_if(paths.begin(), paths.end(), [](const fs::path& p) { return p.extension() == ".png"; });
    const fs::path chosen = png != paths.end() ? *png : paths.front();
    if (paths.size() > 1) m.warnings.push_back("several images for " + id + ", using " + chosen.string());
    m.entries.push_back({id, chosen, gt->second, SplitTag::unassigned});
  }
  for (const auto& [id, path] : gts) {
    if (!images.count(id)) m.warnings.push_back("ground truth without image: " + path.string());
  }
  if (m.entries.empty()) throw std::runtime_error("no image/ground-truth pairs in " + dir.string());
  return m;
}

std::vector<std::size_t> split_counts(std::size_t n, const std::vector<double>& fractions) {
  if (fractions.empty() || fractions.size() > 3) {
    throw std::invalid_argument("split: expected 1 to 3 fractions");
  }
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw std::invalid_argument("split: fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");

  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

DatasetManifest split(const DatasetManifest& manifest, const std::vector<double>& fractions, std::uint64_t seed) {
  const std::size_t n = manifest.entries.size();
  const auto counts = split_counts(n, fractions);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  static constexpr SplitTag kTags[] = {SplitTag::train, SplitTag::validation, SplitTag::test};
  DatasetManifest out = manifest;
  out.split_seed = seed;
  std::size_t k = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    for (std::size_t c = 0; c < counts[t]; ++c) out.entries[order[k++]].split = kTags[t];
  }
  return out;
}

std::vector<std::size_t> train_indices(const DatasetManifest& manifest) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split == SplitTag::train) out.push_back(i);
  }
  return out;
}

std::vector<std::string> budget_subset(const DatasetManifest& manifest, std::size_t budget, std::uint64_t seed) {
  auto train = train_indices(manifest);
  if (budget > train.size()) {
    throw std::invalid_argument("budget " + std::to_string(budget) + " exceeds " + std::to_string(train.size()) +
                                " train lines");
  }
  if (budget == 0) budget = train.size();
  Rng rng(mix_seed(seed ^ 0x5B5E7ULL));
  for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.index(i)]);
  std::vector<std::string> out;
  out.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) out.push_back(manifest.entries[train[i]].line_id);
  std::sort(out.begin(), out.end());
  return out;
}

json manifest_to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"line_id", e.line_id},
                       {"image", e.image.generic_string()},
                       {"ground_truth", e.ground_truth.generic_string()},
                       {"split", std::string(to_string(e.split))}});
  }
  json j{{"schema", kManifestSchema}, {"entries", std::move(entries)}};
  j["split_seed"] = manifest.split_seed ? json(*manifest.split_seed) : json(nullptr);
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  if (j.value("schema", std::string()) != kManifestSchema) {
    throw std::invalid_argument("manifest: expected schema " + std::string(kManifestSchema));
  }
  DatasetManifest m;
  std::set<std::string> seen;
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry{e.at("line_id").get<std::string>(), fs::path(e.at("image").get<std::string>()),
                        fs::path(e.at("ground_truth").get<std::string>()),
                        parse_split_tag(e.value("split", std::string("unassigned")))};
    if (!seen.insert(entry.line_id).second) throw std::invalid_argument("manifest: duplicate line id " + entry.line_id);
    m.entries.push_back(std::move(entry));
  }
  if (j.contains("split_seed") && !j.at("split_seed").is_null()) m.split_seed = j.at("split_seed").get<std::uint64_t>();
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) { write_json(manifest_to_json(manifest), path); }

DatasetManifest read_manifest(const fs::path& path) { return manifest_from_json(read_json(path)); }

// --- ablation stages ---------------------------------------------------------

StagePlan stage_settings(int stage) {
  if (stage < 1 || stage > kStageCount) {
    throw std::invalid_argument("stage must be in [1, " + std::to_string(kStageCount) + "]");
  }
  static const char* const kNames[] = {"baseline",         "harmonize",          "searched_architecture",
                                       "batch_size",       "clipping_norm",      "augment_distort",
                                       "augment_blotches", "augment_contrast",   "ensemble_voting",
                                       "remove_architecture", "remove_augmentation"};
  StagePlan p;
  p.architecture = calamari_default_spec();
  const int cumulative = std::min(stage, 9);
  if (cumulative >= 2) p.harmonize = true;
  if (cumulative >= 3) {
    p.searched_architecture = true;
    p.architecture = psi_spec();
  }
  if (cumulative >= 4) p.batch_size = 8;
  if (cumulative >= 5) p.clipping_norm = 0.001;
  if (cumulative >= 6) {
    p.augmentation.ratio = 200.0;
    p.augmentation.ops.push_back(LoResDistortParams{8, 0.5});
  }
  if (cumulative >= 7) {
    BlotchParams b;
    b.amount = 0.0009;
    b.scale = 9.0;
    p.augmentation.ops.push_back(b);
  }
  if (cumulative >= 8) p.augmentation.ops.push_back(BrightnessContrastParams{0.2, 0.9});
  if (cumulative >= 9) p.folds = 5;
  if (stage == 10) {
    p.searched_architecture = false;
    p.architecture = calamari_default_spec();
  }
  if (stage == 11) p.augmentation = AugmentationPlan{};
  p.stage = stage;
  p.name = kNames[stage - 1];
  return p;
}

int default_replicates(int stage) { return stage <= 8 ? 16 : 4; }

// --- jobs --------------------------------------------------------------------

std::string job_id(int stage, std::size_t budget, int replicate) {
  char buf[64];
  if (budget == 0) {
    std::snprintf(buf, sizeof buf, "s%02d_bfull_r%02d", stage, replicate);
  } else {
    std::snprintf(buf, sizeof buf, "s%02d_b%zu_r%02d", stage, budget, replicate);
  }
  return buf;
}

namespace {

std::uint64_t job_seed(std::uint64_t seed, int stage, std::size_t budget, int replicate) {
  std::uint64_t s = mix_seed(seed);
  s = mix_seed(s ^ static_cast<std::uint64_t>(stage));
  s = mix_seed(s ^ static_cast<std::uint64_t>(budget));
  return mix_seed(s ^ static_cast<std::uint64_t>(replicate));
}

void reorder_ops(AugmentationPlan& plan, const std::vector<std::string>& order) {
  if (order.empty()) return;
  auto rank = [&](const AugmentOp& op) {
    auto it = std::find(order.begin(), order.end(), op_name(op));
    return static_cast<std::size_t>(it - order.begin());
  };
  std::stable_sort(plan.ops.begin(), plan.ops.end(),
                   [&](const AugmentOp& a, const AugmentOp& b) { return rank(a) < rank(b); });
}

}  // namespace

std::vector<TrainJob> plan_ablation(const DatasetManifest& manifest, const PlanConfig& config) {
  if (config.replicates && *config.replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  const std::size_t available = train_indices(manifest).size();
  std::map<std::size_t, std::vector<std::string>> subsets;
  for (std::size_t budget : config.budgets) {
    if (budget > available) {
      throw std::invalid_argument("budget " + std::to_string(budget) + " exceeds " + std::to_string(available) +
                                  " train lines");
    }
    if (!subsets.count(budget)) subsets.emplace(budget, budget_subset(manifest, budget, config.seed));
  }

  std::vector<TrainJob> jobs;
  for (int stage : config.stages) {
    StagePlan plan = stage_settings(stage);
    reorder_ops(plan.augmentation, config.augmentation_order);
    const int replicates = config.replicates.value_or(default_replicates(stage));
    for (std::size_t budget : config.budgets) {
      for (int r = 0; r < replicates; ++r) {
        TrainJob job;
        job.job_id = job_id(stage, budget, r);
        job.plan = plan;
        job.budget = budget;
        job.replicate = r;
        job.seed = job_seed(config.seed, stage, budget, r);
        job.plan.augmentation.seed = job.seed;
        job.manifest_path = config.manifest_path;
        if (!plan.augmentation.ops.empty()) job.augmentation_dir = config.augmentation_root / job.job_id;
        job.train_ids = subsets.at(budget);
        job.wall_clock_hours = config.wall_clock_hours;
        jobs.push_back(std::move(job));
      }
    }
  }
  return jobs;
}

json job_to_json(const TrainJob& job) {
  const StagePlan& p = job.plan;
  json arch = emit(p.architecture);
  json j{
      {"schema", kJobSchema},
      {"job_id", job.job_id},
      {"stage", p.stage},
      {"stage_name", p.name},
      {"budget", job.budget},
      {"replicate", job.replicate},
      {"seed", job.seed},
      {"harmonize", p.harmonize},
      {"searched_architecture", p.searched_architecture},
      {"architecture", arch},
      {"network", arch.at("network")},
      {"batch_size", p.batch_size},
      {"clipping_norm", p.clipping_norm},
      {"dropout", p.architecture.dropout},
      {"folds", p.folds},
      {"augmentation", plan_to_json(p.augmentation)},
      {"manifest", job.manifest_path.generic_string()},
      {"augmentation_dir", job.augmentation_dir.generic_string()},
      {"train_ids", job.train_ids},
  };
  j["wall_clock_hours"] = job.wall_clock_hours ? json(*job.wall_clock_hours) : json(nullptr);
  return j;
}

TrainJob job_from_json(const json& j) {
  if (j.value("schema", std::string()) != kJobSchema) {
    throw std::invalid_argument("job: expected schema " + std::string(kJobSchema));
  }
  TrainJob job;
  job.job_id = j.at("job_id").get<std::string>();
  StagePlan& p = job.plan;
  p.stage = j.at("stage").get<int>();
  p.name = j.at("stage_name").get<std::string>();
  p.harmonize = j.at("harmonize").get<bool>();
  p.searched_architecture = j.at("searched_architecture").get<bool>();
  p.architecture = parse_spec(j.at("architecture"));
  p.batch_size = j.at("batch_size").get<int>();
  p.clipping_norm = j.at("clipping_norm").get<double>();
  p.architecture.dropout = j.at("dropout").get<double>();
  p.folds = j.at("folds").get<int>();
  p.augmentation = plan_from_json(j.at("augmentation"));
  job.budget = j.at("budget").get<std::size_t>();
  job.replicate = j.at("replicate").get<int>();
  job.seed = j.at("seed").get<std::uint64_t>();
  job.manifest_path = j.at("manifest").get<std::string>();
  job.augmentation_dir = j.at("augmentation_dir").get<std::string>();
  job.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  if (j.contains("wall_clock_hours") && !j.at("wall_clock_hours").is_null()) {
    job.wall_clock_hours = j.at("wall_clock_hours").get<double>();
  }
  if (j.contains("network") && j.at("network") != emit(p.architecture).at("network")) {
    throw std::invalid_argument("job " + job.job_id + ": network string does not match the architecture");
  }
  return job;
}

std::vector<fs::path> emit_jobs(const std::vector<TrainJob>& jobs, const fs::path& dir) {
  fs::create_directories(dir);
  std::set<std::string> seen;
  std::vector<fs::path> out;
  for (const auto& job : jobs) {
    if (!seen.insert(job.job_id).second) throw std::invalid_argument("duplicate job id " + job.job_id);
    const fs::path path = dir / (job.job_id + ".json");
    write_json(job_to_json(job), path);
    out.push_back(path);
  }
  return out;
}

TrainJob read_job(const fs::path& path) { return job_from_json(read_json(path)); }

std::vector<TrainJob> read_jobs(const fs::path& dir) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path());
  }
  std::vector<TrainJob> jobs;
  for (const auto& p : paths) {
    json j = read_json(p);
    if (j.is_object() && j.value("schema", std::string()) == kJobSchema) jobs.push_back(job_from_json(j));
  }
  std::sort(jobs.begin(), jobs.end(), [](const TrainJob& a, const TrainJob& b) { return a.job_id < b.job_id; });
  return jobs;
}

// --- results -----------------------------------------------------------------

namespace {

std::optional<double> read_result(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return std::nullopt;
  if (text[first] == '{') {
    const json j = json::parse(text);
    return j.at("cer").get<double>();
  }
  double v = 0.0;
  const char* b = text.data() + first;
  const char* e = text.data() + text.size();
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw std::invalid_argument(path.string() + ": not a CER value");
  return v;
}

}  // namespace

CollectReport collect(const std::vector<TrainJob>& jobs, const fs::path& results_dir) {
  struct Group {
    std::vector<double> values;
    std::size_t planned = 0;
  };
  std::map<std::pair<int, std::size_t>, Group> groups;
  CollectReport report;
  for (const auto& job : jobs) {
    Group& g = groups[{job.plan.stage, job.budget}];
    ++g.planned;
    const auto cer = read_result(results_dir / (job.job_id + ".cer"));
    if (cer) {
      g.values.push_back(*cer * 100.0);
    } else {
      report.missing.push_back(job.job_id);
    }
  }

  report.rows.reserve(groups.size());
  for (const auto& [key, g] : groups) {
    ReportRow row;
    row.stage = key.first;
    row.budget = key.second;
    row.planned = g.planned;
    if (!g.values.empty()) row.cerp = sample_stats(g.values);
    report.rows.push_back(std::move(row));
  }
  std::map<std::size_t, std::size_t> previous;  // budget -> last row index
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    ReportRow& row = report.rows[i];
    auto it = previous.find(row.budget);
    if (it != previous.end()) {
      const ReportRow& prev = report.rows[it->second];
      if (prev.cerp && row.cerp) row.delta_mu = row.cerp->mu - prev.cerp->mu;
    }
    previous[row.budget] = i;
  }
  std::sort(report.missing.begin(), report.missing.end());
  return report;
}

std::string report_to_csv(const CollectReport& report) {
  std::ostringstream os;
  os << "stage,budget,mu_cerp,delta_mu,sigma_cerp,min_cerp,n\n";
  for (const auto& r : report.rows) {
    os << r.stage << ',' << (r.budget == 0 ? std::string("full") : std::to_string(r.budget)) << ',';
    if (r.cerp) {
      os << format_double(r.cerp->mu) << ',' << (r.delta_mu ? format_double(*r.delta_mu) : "") << ','
         << format_double(r.cerp->sigma) << ',' << format_double(r.cerp->min) << ',' << r.cerp->n << '\n';
    } else {
      os << ",,,,0\n";
    }
  }
  return os.str();
}

json report_to_json(const CollectReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"stage", r.stage},
             {"budget", r.budget == 0 ? json("full") : json(r.budget)},
             {"planned", r.planned},
             {"n", r.cerp ? r.cerp->n : 0}};
    row["mu_cerp"] = r.cerp ? json(r.cerp->mu) : json(nullptr);
    row["sigma_cerp"] = r.cerp ? json(r.cerp->sigma) : json(nullptr);
    row["sigma_defined"] = r.cerp ? r.cerp->sigma_defined : false;
    row["min_cerp"] = r.cerp ? json(r.cerp->min) : json(nullptr);
    row["delta_mu"] = r.delta_mu ? json(*r.delta_mu) : json(nullptr);
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)}, {"missing", report.missing}, {"missing_count", report.missing.size()}};
}

}  // namespace ocrpipe
