#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewrank/box.hpp"
#include "viewrank/toy/train.hpp"
#include "viewrank/views.hpp"

namespace viewrank::io {

using nlohmann::json;

// Boxes are [x0, y0, x1, y1] in normalized image coordinates.
Box box_from_json(const json& j, const std::string& path);
json box_to_json(const Box& b);

/// Candidate file: [[x0,y0,x1,y1], ...].
std::vector<Box> candidates_from_json(const json& j);
std::vector<Box> read_candidates(const std::string& path);
void write_candidates(const std::string& path, const std::vector<Box>& boxes);

/// Annotation file: [{"image_id": "...", "boxes": [[x0,y0,x1,y1], ...]}, ...].
/// Prediction files use the same schema; the first box of an entry is the
/// prediction.
std::vector<Annotation> annotations_from_json(const json& j);
std::vector<Annotation> read_annotations(const std::string& path);

/// Window config file:
///   {"scales": [...], "aspect_ratios": ["16:9", ...], "stride": s,
///    "nms_iou_threshold": t, "min_coverage": c, "expected_count": n}
/// expected_count is optional and informational.
struct WindowConfigFile {
  SlidingWindowConfig config;
  std::optional<std::size_t> expected_count;
};
WindowConfigFile window_config_from_json(const json& j);
WindowConfigFile read_window_config(const std::string& path);
json window_config_to_json(const SlidingWindowConfig& cfg, std::optional<std::size_t> expected_count);

/// "w:h" with positive reals on both sides.
AspectRatio parse_aspect_ratio(const std::string& text);
std::string format_aspect_ratio(const AspectRatio& r);

/// Toy training config: {"train": {...}, "data": {...}, "output_dir": "..."}.
/// Every field is optional and defaults to the library defaults; unknown
/// fields are rejected.
struct ToyRunConfig {
  toy::TrainConfig train;
  toy::DataConfig data;
  std::string output_dir = "toy_run";
};
ToyRunConfig toy_config_from_json(const json& j);
ToyRunConfig read_toy_config(const std::string& path);
json train_config_to_json(const toy::TrainConfig& cfg);
json data_config_to_json(const toy::DataConfig& cfg);

/// Ablation matrix: {"data": {...}, "base": {train fields}, "output": "x.csv",
///   "grid": {"loss_kinds": [...], "roi_kinds": [...], "seeds": [...]}}
/// and/or "runs": [{train fields}, ...] (each applied on top of "base").
/// Grid rows come first, in loss-major, then roi, then seed order.
struct AblationMatrix {
  toy::DataConfig data;
  std::vector<toy::TrainConfig> runs;
  std::string output = "ablation.csv";
};
AblationMatrix ablation_matrix_from_json(const json& j);
AblationMatrix read_ablation_matrix(const std::string& path);

/// Parses a file as JSON; syntax errors become ConfigError naming the file.
json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

}  // namespace viewrank::io
