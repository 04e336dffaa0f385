#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ocrpipe/augment.hpp"
#include "ocrpipe/nags.hpp"
#include "ocrpipe/stats.hpp"

namespace ocrpipe {

// --- dataset -----------------------------------------------------------------

enum class SplitTag { unassigned, train, validation, test };

std::string_view to_string(SplitTag tag);
SplitTag parse_split_tag(std::string_view name);

struct ManifestEntry {
  std::string line_id;
  std::filesystem::path image;
  std::filesystem::path ground_truth;
  SplitTag split = SplitTag::unassigned;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;  // sorted by line_id
  std::optional<std::uint64_t> split_seed;
  std::vector<std::string> warnings;   // orphans found while ingesting; not serialized
};

/// Pairs `<name>.png` / `<name>.pgm` with `<name>.gt.txt`. Orphans become
/// warnings. Throws std::runtime_error when no pair is found.
DatasetManifest ingest(const std::filesystem::path& dir);

/// Shuffles under `seed` and tags train / validation / test in that order.
/// 1 to 3 fractions summing to 1; counts use largest remainders.
DatasetManifest split(const DatasetManifest& manifest, const std::vector<double>& fractions,
                      std::uint64_t seed);

std::vector<std::size_t> split_counts(std::size_t n, const std::vector<double>& fractions);

/// Indices of train entries, in manifest order.
std::vector<std::size_t> train_indices(const DatasetManifest& manifest);

/// First `budget` train entries of a seed-derived permutation, so smaller
/// budgets are subsets of larger ones. budget 0 selects every train entry.
std::vector<std::string> budget_subset(const DatasetManifest& manifest, std::size_t budget,
                                       std::uint64_t seed);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// --- ablation stages ---------------------------------------------------------

inline constexpr int kStageCount = 11;

struct StagePlan {
  int stage = 1;
  std::string name;
  bool harmonize = false;
  bool searched_architecture = false;
  ArchitectureSpec architecture;
  int batch_size = 1;
  double clipping_norm = 5.0;
  AugmentationPlan augmentation;  // ratio 0 and no ops when disabled
  int folds = 1;

  friend bool operator==(const StagePlan&, const StagePlan&) = default;
};

/// Cumulative settings of stage 1..11. Throws std::invalid_argument otherwise.
StagePlan stage_settings(int stage);

/// 16 for stages 1 to 8, 4 (ensembles) from stage 9 on.
int default_replicates(int stage);

// --- jobs --------------------------------------------------------------------

struct PlanConfig {
  std::vector<int> stages;
  std::vector<std::size_t> budgets{0};  // line counts; 0 = all train lines
  std::optional<int> replicates;        // overrides default_replicates
  std::uint64_t seed = 0;
  std::filesystem::path manifest_path = "manifest.json";
  std::filesystem::path augmentation_root = "augmented";
  std::optional<double> wall_clock_hours;
  /// Expert override of the augmentation operator order (op names); operators
  /// not listed keep their relative order after the listed ones.
  std::vector<std::string> augmentation_order;
};

struct TrainJob {
  std::string job_id;  // s06_b10000_r03, s09_bfull_r00
  StagePlan plan;
  std::size_t budget = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::filesystem::path manifest_path;
  std::filesystem::path augmentation_dir;
  std::vector<std::string> train_ids;
  std::optional<double> wall_clock_hours;

  friend bool operator==(const TrainJob&, const TrainJob&) = default;
};

std::string job_id(int stage, std::size_t budget, int replicate);

/// One job per (stage, budget, replicate), in that nesting order. Throws
/// std::invalid_argument if a budget exceeds the train set.
std::vector<TrainJob> plan_ablation(const DatasetManifest& manifest, const PlanConfig& config);

nlohmann::json job_to_json(const TrainJob& job);
TrainJob job_from_json(const nlohmann::json& j);

/// Writes `<job_id>.json` per job; returns the written paths.
std::vector<std::filesystem::path> emit_jobs(const std::vector<TrainJob>& jobs,
                                             const std::filesystem::path& dir);
TrainJob read_job(const std::filesystem::path& path);
/// Every `*.json` descriptor in dir, ordered by job id.
std::vector<TrainJob> read_jobs(const std::filesystem::path& dir);

// --- results -----------------------------------------------------------------

struct ReportRow {
  int stage = 0;
  std::size_t budget = 0;
  std::optional<SampleStats> cerp;   // empty when no result arrived
  std::optional<double> delta_mu;    // against the previous planned stage, same budget
  std::size_t planned = 0;
};

struct CollectReport {
  std::vector<ReportRow> rows;              // sorted by (stage, budget)
  std::vector<std::string> missing;         // job ids without a result
};

/// Reads `<job_id>.cer` from results_dir: a bare CER fraction or a JSON
/// object with a "cer" field. Values are reported as CERp (CER * 100).
CollectReport collect(const std::vector<TrainJob>& jobs, const std::filesystem::path& results_dir);

std::string report_to_csv(const CollectReport& report);
nlohmann::json report_to_json(const CollectReport& report);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace ocrpipe
