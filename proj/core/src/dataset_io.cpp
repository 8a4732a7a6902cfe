#include "rdd/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "rdd/errors.hpp"
#include "rdd/geometry.hpp"
#include "text_util.hpp"

namespace rdd {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

ParseTally& ParseTally::operator+=(const ParseTally& other) noexcept {
  unknown_class += other.unknown_class;
  clipped_boxes += other.clipped_boxes;
  dropped_boxes += other.dropped_boxes;
  return *this;
}

namespace {

std::string strip_extension(std::string_view name) {
  const auto slash = name.find_last_of("/\\");
  const auto dot = name.rfind('.');
  const bool has_ext = dot != std::string_view::npos && dot > 0 &&
                       (slash == std::string_view::npos || dot > slash + 1);
  return std::string(has_ext ? name.substr(0, dot) : name);
}

double required_number(const pt::ptree& node, const char* path) {
  const auto text = node.get_optional<std::string>(path);
  if (!text) throw ParseError(std::string("missing <") + path + ">");
  const auto value = detail::parse_double(*text);
  if (!value || !std::isfinite(*value)) {
    throw ParseError(std::string("non-numeric <") + path + ">: \"" + *text + "\"");
  }
  return *value;
}

int required_dimension(const pt::ptree& node, const char* path) {
  const double value = required_number(node, path);
  if (value <= 0.0 || value != std::floor(value) || value > 1e9) {
    throw ParseError(std::string("<") + path + "> must be a positive integer");
  }
  return static_cast<int>(value);
}

std::string describe(const BoundingBox& b) {
  std::ostringstream s;
  s << "(" << b.xmin << ", " << b.ymin << ", " << b.xmax << ", " << b.ymax << ")";
  return s.str();
}

}  // namespace

ImageRecord parse_voc_annotation(std::string_view xml_text, ParseMode mode, ParseTally* tally) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed XML: " + e.message());
  }

  const auto root = tree.get_child_optional("annotation");
  if (!root) throw ParseError("missing <annotation> root element");

  const auto filename = root->get_optional<std::string>("filename");
  if (!filename || detail::trim(*filename).empty()) throw ParseError("missing <filename>");

  if (!root->get_child_optional("size")) throw ParseError("missing <size>");

  ImageRecord record;
  record.image_id = strip_extension(detail::trim(*filename));
  record.width = required_dimension(*root, "size.width");
  record.height = required_dimension(*root, "size.height");

  ParseTally local;
  const bool strict = mode == ParseMode::Strict;
  const double w = record.width;
  const double h = record.height;

  for (const auto& [key, object] : *root) {
    if (key != "object") continue;

    const std::string name{detail::trim(object.get<std::string>("name", ""))};
    const auto label = class_from_name(name);
    if (!label) {
      if (strict) throw UnknownClass(name);
      ++local.unknown_class;
      continue;
    }

    if (!object.get_child_optional("bndbox")) {
      if (strict) throw ParseError("object without <bndbox>");
      ++local.dropped_boxes;
      continue;
    }

    BoundingBox box;
    try {
      box = {required_number(object, "bndbox.xmin"), required_number(object, "bndbox.ymin"),
             required_number(object, "bndbox.xmax"), required_number(object, "bndbox.ymax")};
    } catch (const ParseError&) {
      if (strict) throw;
      ++local.dropped_boxes;
      continue;
    }

    if (!(box.xmin < box.xmax && box.ymin < box.ymax)) {
      if (strict) throw InvalidBox("inverted or empty box " + describe(box));
      ++local.dropped_boxes;
      continue;
    }

    const bool inside = box.xmin >= 0.0 && box.ymin >= 0.0 && box.xmax <= w && box.ymax <= h;
    if (!inside) {
      if (strict) throw InvalidBox("box " + describe(box) + " outside image " + std::to_string(record.width) + "x" +
                                   std::to_string(record.height));
      const auto clipped = clip_box(box, w, h, 0.0);
      if (!clipped) {
        ++local.dropped_boxes;
        continue;
      }
      box = *clipped;
      ++local.clipped_boxes;
    }

    record.boxes.push_back({box, *label});
  }

  if (tally) *tally += local;
  return record;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadReport load_split(const fs::path& directory, std::string split_name, ParseMode mode) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    throw Error("not a readable directory: " + directory.string());
  }

  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(directory, ec);
  if (ec) throw Error("cannot read directory " + directory.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  LoadReport report;
  report.split.name = std::move(split_name);
  if (files.empty()) report.warnings.push_back("no annotation files found in " + directory.string());

  for (const auto& file : files) {
    try {
      ParseTally tally;
      auto record = parse_voc_annotation(read_text_file(file), mode, &tally);
      report.tally += tally;
      report.split.records.push_back(std::move(record));
    } catch (const Error& e) {
      if (mode == ParseMode::Strict) throw ParseError(file.string() + ": " + e.what());
      report.failures.push_back({file, e.what()});
    }
  }

  auto& records = report.split.records;
  std::stable_sort(records.begin(), records.end(),
                   [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
  const auto dup = std::adjacent_find(records.begin(), records.end(),
                                      [](const ImageRecord& a, const ImageRecord& b) { return a.image_id == b.image_id; });
  if (dup != records.end()) throw DuplicateImage(dup->image_id);

  return report;
}

std::size_t StatsTable::total_boxes() const noexcept {
  std::size_t total = 0;
  for (auto c : class_counts) total += c;
  return total;
}

StatsTable& StatsTable::operator+=(const StatsTable& other) noexcept {
  image_count += other.image_count;
  for (std::size_t i = 0; i < class_counts.size(); ++i) class_counts[i] += other.class_counts[i];
  for (std::size_t i = 0; i < bucket_counts.size(); ++i) bucket_counts[i] += other.bucket_counts[i];
  return *this;
}

StatsTable dataset_stats(const DatasetSplit& split) noexcept {
  StatsTable stats;
  stats.image_count = split.records.size();
  for (const auto& record : split.records) {
    for (const auto& gt : record.boxes) {
      ++stats.class_counts[class_index(gt.label)];
      ++stats.bucket_counts[static_cast<std::size_t>(size_bucket(gt.box))];
    }
  }
  return stats;
}

std::string format_stats_table(const StatsTable& stats, std::string_view split_name) {
  std::ostringstream out;
  out << "split: " << (split_name.empty() ? "-" : split_name) << "\n";
  out << std::left << std::setw(10) << "class" << std::setw(22) << "description" << std::right << std::setw(10)
      << "boxes" << "\n";
  for (ClassLabel label : kAllClasses) {
    out << std::left << std::setw(10) << class_name(label) << std::setw(22) << class_description(label)
        << std::right << std::setw(10) << stats.class_counts[class_index(label)] << "\n";
  }
  out << std::left << std::setw(32) << "total" << std::right << std::setw(10) << stats.total_boxes() << "\n";
  out << std::left << std::setw(32) << "images" << std::right << std::setw(10) << stats.image_count << "\n";
  for (auto bucket : {SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large}) {
    out << std::left << std::setw(32) << (std::string("size ") + bucket_name(bucket)) << std::right
        << std::setw(10) << stats.bucket_counts[static_cast<std::size_t>(bucket)] << "\n";
  }
  return out.str();
}

std::string format_stats_csv(const StatsTable& stats) {
  std::ostringstream out;
  out << "class,count\n";
  for (ClassLabel label : kAllClasses) {
    out << class_name(label) << "," << stats.class_counts[class_index(label)] << "\n";
  }
  out << "__images__," << stats.image_count << "\n";
  return out.str();
}

StatsTable parse_stats_csv(std::string_view text) {
  StatsTable stats;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line == "class,count") continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected <key>,<count>", line_no);
    const auto key = line.substr(0, comma);
    const auto count = detail::parse_int(line.substr(comma + 1));
    if (!count || *count < 0) throw ParseError("bad count", line_no);
    if (key == "__images__") {
      stats.image_count = static_cast<std::size_t>(*count);
    } else if (auto label = class_from_name(key)) {
      stats.class_counts[class_index(*label)] = static_cast<std::size_t>(*count);
    } else {
      throw UnknownClass(std::string(key), line_no);
    }
  }
  return stats;
}

namespace {

std::vector<Detection> parse_groups(const std::vector<std::string_view>& tokens, std::size_t arity,
                                    std::size_t line_no) {
  std::vector<Detection> dets;
  dets.reserve(tokens.size() / arity);
  for (std::size_t i = 0; i < tokens.size(); i += arity) {
    const auto code = detail::parse_int(tokens[i]);
    if (!code) throw ParseError("non-integer class code \"" + std::string(tokens[i]) + "\"", line_no);
    const auto label = class_from_ordinal(static_cast<int>(std::clamp<long long>(*code, -1, 1000)));
    if (!label) throw UnknownOrdinal(static_cast<int>(std::clamp<long long>(*code, -1, 1000)), line_no);

    double v[5] = {0, 0, 0, 0, 1.0};
    for (std::size_t j = 1; j < arity; ++j) {
      const auto x = detail::parse_double(tokens[i + j]);
      if (!x) throw ParseError("non-numeric field \"" + std::string(tokens[i + j]) + "\"", line_no);
      v[j - 1] = *x;
    }
    BoundingBox box{v[0], v[1], v[2], v[3]};
    if (!box.valid()) throw InvalidBox("invalid box " + describe(box), line_no);
    if (!(v[4] >= 0.0 && v[4] <= 1.0)) throw ParseError("confidence outside [0,1]", line_no);
    dets.push_back({box, *label, v[4]});
  }
  return dets;
}

}  // namespace

DetectionMap parse_predictions(std::string_view text) {
  DetectionMap out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError("missing ',' after image name", line_no);
    const auto name = detail::trim(line.substr(0, comma));
    if (name.empty()) throw ParseError("empty image name", line_no);

    const auto tokens = detail::split_whitespace(line.substr(comma + 1));
    auto& dets = out[strip_extension(name)];
    if (tokens.empty()) continue;

    const bool by5 = tokens.size() % 5 == 0;
    const bool by6 = tokens.size() % 6 == 0;
    std::vector<Detection> parsed;
    if (by6 && by5) {
      // Both groupings fit (a multiple of 30 fields): prefer sextuples when
      // every group is well formed.
      try {
        parsed = parse_groups(tokens, 6, line_no);
      } catch (const ParseError&) {
        parsed = parse_groups(tokens, 5, line_no);
      }
    } else if (by6) {
      parsed = parse_groups(tokens, 6, line_no);
    } else if (by5) {
      parsed = parse_groups(tokens, 5, line_no);
    } else {
      throw ParseError("expected groups of 5 or 6 fields, got " + std::to_string(tokens.size()), line_no);
    }
    dets.insert(dets.end(), parsed.begin(), parsed.end());
  }
  return out;
}

namespace {

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

std::string format_confidence(double c) {
  auto s = detail::format_double(c);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string write_submission(const DetectionMap& detections, bool include_confidence) {
  std::string out;
  for (const auto& [image_id, dets] : detections) {
    out += image_id;
    out += ".jpg,";
    bool first = true;
    for (const auto& d : dets) {
      const long long x0 = round_half_up(d.box.xmin), y0 = round_half_up(d.box.ymin);
      const long long x1 = round_half_up(d.box.xmax), y1 = round_half_up(d.box.ymax);
      if (!(x0 < x1 && y0 < y1 && x0 >= 0 && y0 >= 0)) {
        throw InvalidBox("box " + describe(d.box) + " of " + image_id + " is degenerate after rounding");
      }
      if (!first) out += ' ';
      first = false;
      out += std::to_string(class_ordinal(d.label));
      for (long long v : {x0, y0, x1, y1}) {
        out += ' ';
        out += std::to_string(v);
      }
      if (include_confidence) {
        out += ' ';
        out += format_confidence(d.confidence);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace rdd
