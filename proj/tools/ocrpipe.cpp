// Command-line front end for the ocrpipe library.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ocrpipe/augment.hpp"
#include "ocrpipe/evalcer.hpp"
#include "ocrpipe/image_io.hpp"
#include "ocrpipe/lineimg.hpp"
#include "ocrpipe/nags.hpp"
#include "ocrpipe/orchestra.hpp"
#include "ocrpipe/stats.hpp"
#include "ocrpipe/utf8.hpp"
#include "ocrpipe/vote.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ocrpipe;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// "1-9,11" -> {1..9, 11}
std::vector<int> parse_stage_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoi(part));
    } else {
      const int lo = std::stoi(part.substr(0, dash));
      const int hi = std::stoi(part.substr(dash + 1));
      for (int s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  return out;
}

// "2K,5000,full" -> {2000, 5000, 0}
std::size_t parse_budget(std::string text) {
  if (text == "full") return 0;
  std::size_t scale = 1;
  if (!text.empty() && (text.back() == 'K' || text.back() == 'k')) {
    scale = 1000;
    text.pop_back();
  }
  return static_cast<std::size_t>(std::stoull(text)) * scale;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OCR training-pipeline toolkit: preprocessing, augmentation, architecture grids, "
               "evaluation, voting and experiment bookkeeping"};
  app.require_subcommand(1);

  // prepare ---------------------------------------------------------------
  auto* prepare_cmd = app.add_subcommand("prepare", "Deskew, rescale and optionally binarize line images");
  std::string prep_in, prep_out, prep_input = "gray48";
  bool prep_deskew = false;
  prepare_cmd->add_option("--in", prep_in, "Image file or directory")->required();
  prepare_cmd->add_option("--out", prep_out, "Output directory")->required();
  prepare_cmd->add_option("--input", prep_input, "gray48, bin48, gray64 or bin64");
  prepare_cmd->add_flag("--deskew", prep_deskew, "Estimate a baseline and deskew first");
  prepare_cmd->callback([&] {
    const InputConfig cfg = InputConfig::parse(prep_input);
    std::vector<fs::path> inputs = fs::is_directory(prep_in) ? list_images(prep_in) : std::vector<fs::path>{prep_in};
    fs::create_directories(prep_out);
    for (const auto& path : inputs) {
      const LineImage img = read_image(path);
      std::optional<Baseline> baseline;
      if (prep_deskew) baseline = estimate_baseline(img);
      write_image(prepare(img, cfg, baseline), fs::path(prep_out) / path.filename());
    }
  });

  // binarize --------------------------------------------------------------
  auto* bin_cmd = app.add_subcommand("binarize", "Sauvola or Otsu binarization of one image");
  std::string bin_in, bin_out, bin_method = "sauvola";
  std::optional<int> bin_window;
  double bin_k = 0.2;
  bin_cmd->add_option("--in", bin_in)->required();
  bin_cmd->add_option("--out", bin_out)->required();
  bin_cmd->add_option("--method", bin_method)->check(CLI::IsMember({"sauvola", "otsu"}));
  bin_cmd->add_option("--window", bin_window, "Sauvola window (odd)");
  bin_cmd->add_option("--k", bin_k, "Sauvola k");
  bin_cmd->callback([&] {
    const LineImage img = read_image(bin_in);
    if (bin_method == "otsu") {
      const auto r = binarize_otsu(img);
      write_image(r.image, bin_out);
      std::cout << "threshold " << r.threshold << (r.degenerate ? " (degenerate)" : "") << '\n';
    } else {
      write_image(binarize_sauvola(img, SauvolaParams{bin_window, bin_k, 128.0}), bin_out);
    }
  });

  // augment ---------------------------------------------------------------
  auto* aug_cmd = app.add_subcommand("augment", "Run an augmentation plan over a directory of lines");
  std::string aug_plan, aug_in, aug_out;
  std::optional<std::uint64_t> aug_seed;
  unsigned aug_workers = 1;
  aug_cmd->add_option("--plan", aug_plan, "Plan JSON")->required();
  aug_cmd->add_option("--in", aug_in, "Directory of line images (+ .gt.txt)")->required();
  aug_cmd->add_option("--out", aug_out, "Output directory")->required();
  aug_cmd->add_option("--seed", aug_seed, "Overrides the plan seed");
  aug_cmd->add_option("--workers", aug_workers)->check(CLI::PositiveNumber);
  aug_cmd->callback([&] {
    const AugmentationPlan plan = plan_from_json(load_json(aug_plan));
    const auto paths = list_images(aug_in);
    std::vector<LineImage> lines;
    for (const auto& p : paths) lines.push_back(read_image(p));
    const auto data = apply_plan(lines, plan, aug_seed.value_or(plan.seed), aug_workers);
    fs::create_directories(aug_out);
    for (std::size_t i = 0; i < data.lines.size(); ++i) {
      const fs::path& src = paths[data.source[i]];
      std::string stem = src.stem().string();
      if (i >= paths.size()) {
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_aug%06zu", i - paths.size());
        stem += suffix;
      }
      write_image(data.lines[i], fs::path(aug_out) / (stem + ".png"));
      const fs::path gt = src.parent_path() / (src.stem().string() + ".gt.txt");
      if (fs::exists(gt)) {
        fs::copy_file(gt, fs::path(aug_out) / (stem + ".gt.txt"), fs::copy_options::overwrite_existing);
      }
    }
    std::cout << data.lines.size() - paths.size() << " lines generated\n";
  });

  // nags ------------------------------------------------------------------
  auto* nags_cmd = app.add_subcommand("nags", "Architecture grid enumeration and spec emission");
  nags_cmd->require_subcommand(1);
  auto* enum_cmd = nags_cmd->add_subcommand("enumerate", "List every valid candidate of a search grid");
  std::string enum_grid, enum_out;
  enum_cmd->add_option("--grid", enum_grid, "Grid JSON (default: the full search space)");
  enum_cmd->add_option("--out", enum_out, "Output file (JSON lines), default stdout");
  enum_cmd->callback([&] {
    const SearchGrid grid = enum_grid.empty() ? full_search_grid() : parse_grid(load_json(enum_grid));
    const auto result = enumerate_grid(grid);
    std::string text;
    for (const auto& spec : result.specs) text += emit(spec).dump() + '\n';
    write_text(text, enum_out);
    std::cerr << result.candidates << " candidates, " << result.excluded << " excluded, " << result.specs.size()
              << " emitted\n";
  });
  auto* emit_cmd = nags_cmd->add_subcommand("emit", "Validate a spec and print its descriptor");
  std::string emit_spec;
  std::int64_t emit_codec = 0;
  emit_cmd->add_option("--spec", emit_spec, "Spec JSON")->required();
  emit_cmd->add_option("--codec-size", emit_codec, "Output classes incl. blank; adds params to the output");
  emit_cmd->callback([&] {
    const ArchitectureSpec spec = parse_spec(load_json(emit_spec));
    for (const auto& w : warnings(spec)) std::cerr << "warning: " << w << '\n';
    json j = emit(spec);
    if (emit_codec > 0) j["params"] = param_count(spec, emit_codec);
    std::cout << j.dump(2) << '\n';
  });

  // eval ------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Character error rate of predictions against ground truth");
  std::string eval_dir, eval_tsv, eval_rules, eval_json, eval_csv;
  bool eval_harmonize = false;
  auto* eval_src = eval_cmd->add_option("--dir", eval_dir, "Directory with <name>.gt.txt / <name>.pred.txt");
  eval_cmd->add_option("--tsv", eval_tsv, "TSV with gt and prediction columns")->excludes(eval_src);
  eval_cmd->add_flag("--harmonize", eval_harmonize, "Apply the default harmonization rules");
  eval_cmd->add_option("--rules", eval_rules, "Harmonization rules JSON (implies --harmonize)");
  eval_cmd->add_option("--json", eval_json, "Write the JSON report here");
  eval_cmd->add_option("--csv", eval_csv, "Write the CSV report here");
  eval_cmd->callback([&] {
    if (eval_dir.empty() == eval_tsv.empty()) throw CLI::ValidationError("eval", "need exactly one of --dir, --tsv");
    const auto pairs = eval_dir.empty() ? read_pair_tsv(eval_tsv) : read_pair_directory(eval_dir);
    std::optional<HarmonizationRules> rules;
    if (!eval_rules.empty()) {
      rules = parse_rules(load_json(eval_rules));
    } else if (eval_harmonize) {
      rules = default_rules();
    }
    const auto report = cer(pairs, rules);
    if (!eval_json.empty()) write_text(report_to_json(report).dump(2) + '\n', eval_json);
    if (!eval_csv.empty()) write_text(report_to_csv(report), eval_csv);
    std::cout << "CER " << format_double(report.cer) << " (" << report.total_distance << '/' << report.total_length
              << ", " << report.lines.size() << " lines)\n";
  });

  // codec-check -----------------------------------------------------------
  auto* codec_cmd = app.add_subcommand("codec-check", "Report characters outside the codec");
  std::string codec_file;
  std::vector<std::string> codec_texts;
  codec_cmd->add_option("--codec", codec_file, "Codec file (default: built-in)");
  codec_cmd->add_option("files", codec_texts, "Text files")->required();
  int codec_status = 0;
  codec_cmd->callback([&] {
    const Codec codec = codec_file.empty() ? default_codec() : load_codec(codec_file);
    for (const auto& f : codec_texts) {
      for (const auto& v : codec_check(read_text_file(f), codec)) {
        char cp[16];
        std::snprintf(cp, sizeof cp, "U+%04X", static_cast<unsigned>(v.character));
        std::cout << f << ':' << v.position << ": " << cp << ' ' << utf8_encode(v.character) << '\n';
        codec_status = 1;
      }
    }
  });

  // harmonize -------------------------------------------------------------
  auto* harm_cmd = app.add_subcommand("harmonize", "Harmonize text files in place or to stdout");
  std::vector<std::string> harm_files;
  std::string harm_rules;
  bool harm_dump = false;
  harm_cmd->add_option("files", harm_files, "Text files");
  harm_cmd->add_option("--rules", harm_rules, "Rules JSON (default: built-in)");
  harm_cmd->add_flag("--dump-rules", harm_dump, "Print the rules as JSON and exit");
  harm_cmd->callback([&] {
    const HarmonizationRules rules = harm_rules.empty() ? default_rules() : parse_rules(load_json(harm_rules));
    if (harm_dump) {
      std::cout << rules_to_json(rules).dump(2) << '\n';
      return;
    }
    for (const auto& f : harm_files) std::cout << harmonize(std::string_view(read_text_file(f)), rules) << '\n';
  });

  // vote ------------------------------------------------------------------
  auto* vote_cmd = app.add_subcommand("vote", "Merge per-fold predictions by character plurality");
  std::string vote_dir, vote_json, vote_out;
  auto* vote_src = vote_cmd->add_option("--dir", vote_dir, "Directory with <name>.fold<i>.pred.txt");
  vote_cmd->add_option("--json", vote_json, "JSON array of {line_id, hypotheses, confidences}")->excludes(vote_src);
  vote_cmd->add_option("--out", vote_out, "Directory for <name>.pred.txt")->required();
  vote_cmd->callback([&] {
    if (vote_dir.empty() == vote_json.empty()) throw CLI::ValidationError("vote", "need exactly one of --dir, --json");
    const auto lines = vote_dir.empty() ? read_fold_json(vote_json) : read_fold_directory(vote_dir);
    fs::create_directories(vote_out);
    for (const auto& line : lines) {
      std::ofstream out(fs::path(vote_out) / (line.line_id + ".pred.txt"), std::ios::binary);
      out << vote(line) << '\n';
    }
  });

  // ingest / split ----------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a manifest from a directory of line images");
  std::string ingest_dir, ingest_out;
  ingest_cmd->add_option("--dir", ingest_dir)->required();
  ingest_cmd->add_option("--out", ingest_out, "Manifest JSON")->required();
  ingest_cmd->callback([&] {
    const auto m = ingest(ingest_dir);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    write_manifest(m, ingest_out);
    std::cout << m.entries.size() << " entries\n";
  });

  auto* split_cmd = app.add_subcommand("split", "Assign train/validation/test tags");
  std::string split_in, split_out;
  std::vector<double> split_fractions{0.8, 0.2};
  std::uint64_t split_seed = 0;
  split_cmd->add_option("--manifest", split_in)->required();
  split_cmd->add_option("--out", split_out)->required();
  split_cmd->add_option("--fractions", split_fractions)->delimiter(',');
  split_cmd->add_option("--seed", split_seed);
  split_cmd->callback([&] {
    const auto m = split(read_manifest(split_in), split_fractions, split_seed);
    write_manifest(m, split_out);
    const auto counts = split_counts(m.entries.size(), split_fractions);
    for (std::size_t i = 0; i < counts.size(); ++i) std::cout << (i ? "/" : "") << counts[i];
    std::cout << '\n';
  });

  // plan / emit-jobs / collect --------------------------------------------
  auto* plan_cmd = app.add_subcommand("plan", "Plan the ablation jobs");
  std::string plan_manifest, plan_out, plan_stages = "1-11", plan_aug_root = "augmented", plan_order;
  std::vector<std::string> plan_budgets{"full"};
  std::optional<int> plan_replicates;
  std::optional<double> plan_hours;
  std::uint64_t plan_seed = 0;
  plan_cmd->add_option("--manifest", plan_manifest)->required();
  plan_cmd->add_option("--out", plan_out, "Plan JSON (array of job descriptors)")->required();
  plan_cmd->add_option("--stages", plan_stages, "e.g. 1-9 or 2,3,6,9");
  plan_cmd->add_option("--budgets", plan_budgets, "e.g. 2K,5K,full")->delimiter(',');
  plan_cmd->add_option("--replicates", plan_replicates, "Override the per-stage default");
  plan_cmd->add_option("--seed", plan_seed);
  plan_cmd->add_option("--augmentation-root", plan_aug_root);
  plan_cmd->add_option("--wall-clock-hours", plan_hours, "Advisory limit copied into descriptors");
  plan_cmd->add_option("--augmentation-order", plan_order, "Expert: comma-separated op names");
  plan_cmd->callback([&] {
    PlanConfig cfg;
    cfg.stages = parse_stage_list(plan_stages);
    cfg.budgets.clear();
    for (const auto& b : plan_budgets) cfg.budgets.push_back(parse_budget(b));
    cfg.replicates = plan_replicates;
    cfg.seed = plan_seed;
    cfg.manifest_path = plan_manifest;
    cfg.augmentation_root = plan_aug_root;
    cfg.wall_clock_hours = plan_hours;
    std::stringstream ss(plan_order);
    for (std::string op; std::getline(ss, op, ',');) cfg.augmentation_order.push_back(op);
    const auto jobs = plan_ablation(read_manifest(plan_manifest), cfg);
    json arr = json::array();
    for (const auto& job : jobs) arr.push_back(job_to_json(job));
    write_text(arr.dump(2) + '\n', plan_out);
    std::cout << jobs.size() << " jobs\n";
  });

  auto* emitjobs_cmd = app.add_subcommand("emit-jobs", "Write one descriptor file per planned job");
  std::string ej_plan, ej_out;
  emitjobs_cmd->add_option("--plan", ej_plan)->required();
  emitjobs_cmd->add_option("--out", ej_out, "Descriptor directory")->required();
  emitjobs_cmd->callback([&] {
    std::vector<TrainJob> jobs;
    for (const auto& j : load_json(ej_plan)) jobs.push_back(job_from_json(j));
    std::cout << emit_jobs(jobs, ej_out).size() << " descriptors\n";
  });

  auto* collect_cmd = app.add_subcommand("collect", "Aggregate per-job CERs into a stage/budget report");
  std::string col_jobs, col_results, col_csv, col_json;
  collect_cmd->add_option("--jobs", col_jobs, "Descriptor directory")->required();
  collect_cmd->add_option("--results", col_results, "Directory of <job_id>.cer files")->required();
  collect_cmd->add_option("--csv", col_csv, "CSV output (default stdout)");
  collect_cmd->add_option("--json", col_json, "JSON output");
  collect_cmd->callback([&] {
    const auto report = collect(read_jobs(col_jobs), col_results);
    write_text(report_to_csv(report), col_csv);
    if (!col_json.empty()) write_text(report_to_json(report).dump(2) + '\n', col_json);
    if (!report.missing.empty()) std::cerr << report.missing.size() << " jobs without results\n";
  });

  // stats -------------------------------------------------------------------
  auto* stats_cmd = app.add_subcommand("stats", "Sample statistics and replicate counts");
  std::vector<double> stats_values;
  std::optional<double> stats_sigma, stats_d;
  double stats_conf = 0.95;
  stats_cmd->add_option("values", stats_values, "CER values");
  stats_cmd->add_option("--sigma", stats_sigma, "Run-to-run stddev for the sample-size calculation");
  stats_cmd->add_option("--detect", stats_d, "Difference to detect");
  stats_cmd->add_option("--confidence", stats_conf);
  stats_cmd->callback([&] {
    if (!stats_values.empty()) {
      const auto s = sample_stats(stats_values);
      std::cout << "n " << s.n << "\nmu " << format_double(s.mu) << "\nsigma " << format_double(s.sigma)
                << (s.sigma_defined ? "" : " (undefined for n = 1)") << "\nmin " << format_double(s.min) << '\n';
    }
    if (stats_sigma && stats_d) {
      std::cout << "required_runs " << required_sample_size(*stats_sigma, *stats_d, stats_conf) << '\n';
    } else if (stats_values.empty()) {
      throw CLI::ValidationError("stats", "give values and/or --sigma with --detect");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return codec_status;
}
