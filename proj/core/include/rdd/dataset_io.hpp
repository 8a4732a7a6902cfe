#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rdd/types.hpp"

namespace rdd {

/// Strict aborts on the first violation. Lenient skips unknown classes and
/// degenerate boxes, clips out-of-image boxes, and tallies what it did.
enum class ParseMode { Strict, Lenient };

struct ParseTally {
  std::size_t unknown_class = 0;
  std::size_t clipped_boxes = 0;
  std::size_t dropped_boxes = 0;

  ParseTally& operator+=(const ParseTally& other) noexcept;
  friend bool operator==(const ParseTally&, const ParseTally&) = default;
};

/// Parses one PASCAL-VOC annotation document. Unknown elements are ignored.
/// Coordinates are taken verbatim; no "+1" pixel adjustment is applied.
ImageRecord parse_voc_annotation(std::string_view xml_text, ParseMode mode = ParseMode::Strict,
                                 ParseTally* tally = nullptr);

struct FileFailure {
  std::filesystem::path path;
  std::string message;
};

struct LoadReport {
  DatasetSplit split;
  std::vector<FileFailure> failures;
  std::vector<std::string> warnings;
  ParseTally tally;
};

/// Loads every *.xml below `directory` (recursively). Records are sorted by
/// image id. Strict mode rethrows the first per-file error; lenient mode
/// records it in `failures`. Throws Error for an unreadable directory and
/// DuplicateImage when two files share an image id.
LoadReport load_split(const std::filesystem::path& directory, std::string split_name,
                      ParseMode mode = ParseMode::Strict);

struct StatsTable {
  std::size_t image_count = 0;
  std::array<std::size_t, kNumClasses> class_counts{};
  std::array<std::size_t, 3> bucket_counts{};  // indexed by SizeBucket

  std::size_t total_boxes() const noexcept;
  StatsTable& operator+=(const StatsTable& other) noexcept;
  friend bool operator==(const StatsTable&, const StatsTable&) = default;
};

StatsTable dataset_stats(const DatasetSplit& split) noexcept;

/// Aligned human-readable table.
std::string format_stats_table(const StatsTable& stats, std::string_view split_name);

/// `class,count` header, one row per class, then `__images__,<n>`.
std::string format_stats_csv(const StatsTable& stats);

/// Inverse of format_stats_csv for the fields it carries (bucket counts are
/// not part of the CSV and come back as zero).
StatsTable parse_stats_csv(std::string_view text);

/// Reads the submission/prediction grammar:
///   <image_name>,<code> <xmin> <ymin> <xmax> <ymax> [<conf>] ...
/// The image id is the name without its last extension. Missing confidence
/// defaults to 1.0. Throws ParseError (with line number) on bad input.
DetectionMap parse_predictions(std::string_view text);

/// Writes the grammar read by parse_predictions. Coordinates are rounded half
/// up to integers, image names get a ".jpg" suffix, and confidences use the
/// shortest representation that reads back to the same double.
std::string write_submission(const DetectionMap& detections, bool include_confidence = true);

/// Convenience file reader; throws Error when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace rdd
