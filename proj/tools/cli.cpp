#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "rdd/augment.hpp"
#include "rdd/dataset_io.hpp"
#include "rdd/errors.hpp"
#include "rdd/metrics.hpp"
#include "rdd/model_config.hpp"
#include "rdd/postprocess.hpp"

namespace rdd::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for problems that are the caller's fault rather than the data's.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool lenient = false;
  bool verbose = false;
  ParseMode mode() const { return lenient ? ParseMode::Lenient : ParseMode::Strict; }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

void emit(const std::string& output_path, const std::string& text, std::ostream& out) {
  if (output_path.empty()) {
    out << text;
  } else {
    write_file(output_path, text);
  }
}

fs::path require_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("no annotation directory given (use --annotations or set RDD_DATA_ROOT)");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw UsageError("annotation directory not found: " + dir);
  return dir;
}

fs::path require_file(const std::string& file, const char* what) {
  std::error_code ec;
  if (file.empty() || !fs::is_regular_file(file, ec)) throw UsageError(std::string(what) + " not found: " + file);
  return file;
}

LoadReport load(const std::string& dir, const Globals& g, std::ostream& err) {
  const auto path = require_dir(dir);
  auto report = load_split(path, path.filename().string(), g.mode());
  if (g.verbose) {
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    for (const auto& f : report.failures) err << "warning: skipped " << f.path.string() << ": " << f.message << "\n";
    const auto& t = report.tally;
    if (t.unknown_class || t.clipped_boxes || t.dropped_boxes) {
      err << "warning: unknown-class objects " << t.unknown_class << ", clipped boxes " << t.clipped_boxes
          << ", dropped boxes " << t.dropped_boxes << "\n";
    }
  }
  return report;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi)) throw UsageError("grid needs min <= max and step > 0");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  return grid;
}

std::string threshold_file(const ThresholdTable& table) {
  std::ostringstream s;
  s << format_threshold_table(table);
  for (const auto& [label, entry] : table.classes) {
    s << "# " << class_name(label) << " f1=" << entry.f1 << (entry.degenerate ? " degenerate" : "") << "\n";
  }
  s << "# pooled_f1=" << table.pooled_f1 << "\n";
  return s.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Road-damage detection tooling: dataset statistics, evaluation, post-processing, anchors, "
               "model scaling and augmentation."};
  app.name("rdd");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* strict_flag = app.add_flag("--strict", "Abort on the first annotation problem (default)");
  auto* lenient_flag = app.add_flag("--lenient", g.lenient, "Skip, clip and count annotation problems");
  strict_flag->excludes(lenient_flag);
  app.add_flag("-v,--verbose", g.verbose, "Report parse warnings on stderr");

  // stats
  std::string stats_dir, stats_format = "table";
  auto* stats = app.add_subcommand("stats", "Image and per-class box counts of an annotation directory");
  stats->add_option("-a,--annotations", stats_dir, "Directory of PASCAL-VOC XML files")->envname("RDD_DATA_ROOT");
  stats->add_option("-f,--format", stats_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  // evaluate
  std::string eval_dir, eval_preds, eval_thresholds, eval_format = "table", eval_curves, eval_output;
  double eval_iou = kCompetitionIou;
  ErrorThresholds eval_errors;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "F1, AP family and error breakdown of predictions");
  evaluate_cmd->add_option("-a,--annotations", eval_dir, "Ground-truth directory")->envname("RDD_DATA_ROOT");
  evaluate_cmd->add_option("-p,--predictions", eval_preds, "Prediction file")->required();
  evaluate_cmd->add_option("--iou", eval_iou, "IoU threshold for F1 and error breakdown")
      ->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_option("-t,--thresholds", eval_thresholds, "Per-class threshold table applied first");
  evaluate_cmd->add_option("-f,--format", eval_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  evaluate_cmd->add_option("--pr-curves", eval_curves, "Write per-class PR curves (CSV) at IoU 0.5:0.95");
  evaluate_cmd->add_option("-o,--output", eval_output, "Write the report here instead of stdout");
  evaluate_cmd->add_option("--fn-area", eval_errors.fn_tiny_area, "Tiny-area false-negative limit (px^2)");
  evaluate_cmd->add_option("--fp-pothole-area", eval_errors.fp_small_pothole_area,
                           "Small-pothole false-positive limit (px^2)");

  // sweep
  std::string sweep_dir, sweep_preds, sweep_output;
  double sweep_iou = kCompetitionIou, grid_min = 0.05, grid_max = 0.95, grid_step = 0.01;
  auto* sweep = app.add_subcommand("sweep", "Best per-class confidence threshold on a validation split");
  sweep->add_option("-a,--annotations", sweep_dir, "Ground-truth directory")->envname("RDD_DATA_ROOT");
  sweep->add_option("-p,--predictions", sweep_preds, "Prediction file")->required();
  sweep->add_option("--iou", sweep_iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--grid-min", grid_min, "Lowest threshold")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--grid-max", grid_max, "Highest threshold")->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--grid-step", grid_step, "Grid spacing");
  sweep->add_option("-o,--output", sweep_output, "Write the threshold table here instead of stdout");

  // nms
  std::string nms_preds, nms_output;
  double nms_iou = kDefaultNmsIou;
  auto* nms_cmd = app.add_subcommand("nms", "Per-class non-maximum suppression of a prediction file");
  nms_cmd->add_option("-p,--predictions", nms_preds, "Prediction file")->required();
  nms_cmd->add_option("--iou", nms_iou, "Suppression IoU threshold")->check(CLI::Range(0.0, 1.0));
  nms_cmd->add_option("-o,--output", nms_output, "Write the result here instead of stdout");

  // anchors
  std::string anchors_dir;
  int anchors_k = kDefaultAnchorRatios, anchors_resolution = 512;
  std::uint64_t anchors_seed = 0;
  auto* anchors = app.add_subcommand("anchors", "k-means anchor aspect ratios of the ground-truth boxes");
  anchors->add_option("-a,--annotations", anchors_dir, "Ground-truth directory")->envname("RDD_DATA_ROOT");
  anchors->add_option("-k,--k", anchors_k, "Number of ratios")->check(CLI::PositiveNumber);
  anchors->add_option("-r,--resolution", anchors_resolution, "Network input resolution")
      ->check(CLI::PositiveNumber);
  anchors->add_option("--seed", anchors_seed, "k-means++ seed");

  // scale
  int scale_phi = 0;
  auto* scale = app.add_subcommand("scale", "EfficientDet compound-scaling configuration");
  scale->add_option("--phi", scale_phi, "Compound coefficient")->required()->check(CLI::Range(0, kMaxPhi));

  // augment
  std::string aug_annotation, aug_policy, aug_image, aug_output, aug_boxes;
  std::uint64_t aug_seed = 0;
  bool aug_dry_run = false, aug_strip = false;
  auto* augment = app.add_subcommand("augment", "Apply an augmentation policy to one annotated image");
  augment->add_option("--annotation", aug_annotation, "PASCAL-VOC XML of the image")->required();
  augment->add_option("--policy", aug_policy, "Policy file")->required();
  augment->add_option("--image", aug_image, "Input PNG (optional with --dry-run)");
  augment->add_option("-o,--output", aug_output, "Output PNG");
  augment->add_option("--boxes", aug_boxes, "Write transformed boxes (CSV) here instead of stdout");
  augment->add_option("--seed", aug_seed, "Seed");
  augment->add_flag("--dry-run", aug_dry_run, "Only emit the transformed boxes as CSV");
  augment->add_flag("--strip-rotation", aug_strip, "Remove Rotate specs before applying");

  // strip-rotation
  std::string strip_policy, strip_output;
  auto* strip = app.add_subcommand("strip-rotation", "Write the rotation-free variant of a policy file");
  strip->add_option("--policy", strip_policy, "Policy file")->required();
  strip->add_option("-o,--output", strip_output, "Write here instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "rdd: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run 'rdd " << sub->get_name() << " --help' for usage\n";
    } else {
      err << "run 'rdd --help' for usage\n";
    }
    return kUsageError;
  }

  try {
    if (stats->parsed()) {
      const auto report = load(stats_dir, g, err);
      const auto table = dataset_stats(report.split);
      out << (stats_format == "csv" ? format_stats_csv(table) : format_stats_table(table, report.split.name));
    } else if (evaluate_cmd->parsed()) {
      const auto report = load(eval_dir, g, err);
      auto dets = parse_predictions(read_text_file(require_file(eval_preds, "prediction file")));
      if (!eval_thresholds.empty()) {
        const auto table = parse_threshold_table(read_text_file(require_file(eval_thresholds, "threshold file")));
        dets = apply_thresholds(dets, table);
      }
      EvalOptions options;
      options.iou_threshold = eval_iou;
      options.errors = eval_errors;
      const auto result = evaluate(report.split, dets, options);
      emit(eval_output, eval_format == "csv" ? format_report_csv(result) : format_report_table(result), out);
      if (!eval_curves.empty()) {
        std::vector<ClassCurve> curves;
        for (double t : coco_iou_thresholds()) {
          auto part = pr_curves(report.split, dets, t);
          curves.insert(curves.end(), part.begin(), part.end());
        }
        write_file(eval_curves, format_pr_curves_csv(curves));
      }
    } else if (sweep->parsed()) {
      const auto report = load(sweep_dir, g, err);
      const auto dets = parse_predictions(read_text_file(require_file(sweep_preds, "prediction file")));
      const auto grid = make_grid(grid_min, grid_max, grid_step);
      emit(sweep_output, threshold_file(sweep_thresholds(report.split, dets, grid, sweep_iou)), out);
    } else if (nms_cmd->parsed()) {
      if (!(nms_iou > 0.0)) throw UsageError("--iou must be in (0, 1]");
      const auto dets = parse_predictions(read_text_file(require_file(nms_preds, "prediction file")));
      emit(nms_output, write_submission(nms(dets, nms_iou), true), out);
    } else if (anchors->parsed()) {
      const auto report = load(anchors_dir, g, err);
      const auto boxes = ratio_features(report.split, anchors_resolution);
      const auto result = kmeans_ratios(boxes, anchors_k, anchors_seed);
      out << format_ratios(result.ratios) << "\n";
      if (g.verbose) {
        err << "boxes " << boxes.size() << ", iterations " << result.iterations << ", mean best IoU "
            << result.mean_best_iou << "\n";
      }
    } else if (scale->parsed()) {
      out << format_compound_config(compound_config(scale_phi));
    } else if (augment->parsed()) {
      if (!aug_dry_run && aug_output.empty()) throw UsageError("--output is required unless --dry-run is given");
      if (!aug_dry_run && aug_image.empty()) throw UsageError("--image is required unless --dry-run is given");
      const auto record =
          parse_voc_annotation(read_text_file(require_file(aug_annotation, "annotation")), g.mode());
      auto policy = load_policy(require_file(aug_policy, "policy file"));
      if (aug_strip) policy = strip_rotation(std::move(policy));
      ImageBuffer image = aug_image.empty() ? ImageBuffer(record.width, record.height, 128)
                                            : read_png(require_file(aug_image, "image"));
      if (image.width != record.width || image.height != record.height) {
        throw Error("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                    " but the annotation declares " + std::to_string(record.width) + "x" +
                    std::to_string(record.height));
      }
      const auto result = apply_policy(image, record.boxes, policy, aug_seed);
      if (!aug_dry_run) write_png(aug_output, result.image);
      emit(aug_boxes, format_boxes_csv(result.boxes), out);
      if (g.verbose && result.dropped_boxes) err << "dropped boxes " << result.dropped_boxes << "\n";
    } else if (strip->parsed()) {
      emit(strip_output, format_policy(strip_rotation(load_policy(require_file(strip_policy, "policy file")))), out);
    }
  } catch (const UsageError& e) {
    err << "rdd: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "rdd: " << e.what() << "\n";
    return kValidationFailure;
  }
  return kSuccess;
}

}  // namespace rdd::cli
