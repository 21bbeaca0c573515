#include "viewrank/io/json_io.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "viewrank/errors.hpp"
#include "viewrank/io/errors.hpp"

namespace viewrank::io {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) {
    throw ConfigError(path, "expected a non-negative integer, got " + j.dump());
  }
  return j.get<std::size_t>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string, got " + std::string(j.type_name()));
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array, got " + std::string(j.type_name()));
  return j;
}

// Walks the fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object, got " + std::string(j_.type_name()));
    }
  }

  const json* get(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const { return join(path_, key); }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) out = as_number(*v, path(key));
  }
  void count(const std::string& key, std::size_t& out) {
    if (const json* v = get(key)) out = as_count(*v, path(key));
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = get(key)) out = as_count(*v, path(key));
  }
  void flag(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void text(const std::string& key, std::string& out) {
    if (const json* v = get(key)) out = as_string(*v, path(key));
  }
  void counts(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = get(key)) {
      out.clear();
      const json& a = as_array(*v, path(key));
      for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_count(a[i], index(path(key), i)));
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) throw ConfigError(path(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Library validation throws std::invalid_argument (InvalidField when it can
// name the member); rewrap it with the path.
template <typename F>
void validated(const std::string& path, F&& check) {
  try {
    check();
  } catch (const InvalidField& e) {
    throw ConfigError(join(path, e.field()), e.reason());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.empty() ? "<root>" : path, e.what());
  }
}

toy::LossKind loss_kind_at(const json& j, const std::string& path) {
  const std::string s = as_string(j, path);
  auto k = toy::parse_loss_kind(s);
  if (!k) throw ConfigError(path, "unknown loss kind '" + s + "'");
  return *k;
}

toy::SamplerKind sampler_at(const json& j, const std::string& path) {
  const std::string s = as_string(j, path);
  auto k = toy::parse_sampler_kind(s);
  if (!k) throw ConfigError(path, "unknown roi kind '" + s + "'");
  return *k;
}

void read_model(const json& j, const std::string& path, toy::ModelConfig& m) {
  Fields f(j, path);
  f.count("input_channels", m.input_channels);
  f.counts("conv_channels", m.conv_channels);
  f.counts("conv_strides", m.conv_strides);
  f.counts("fc_hidden", m.fc_hidden);
  f.count("roi_output_size", m.roi_output_size);
  f.number("fc_init_std", m.fc_init_std);
  f.number("input_shift", m.input_shift);
  f.finish();
}

void read_train(const json& j, const std::string& path, toy::TrainConfig& c) {
  Fields f(j, path);
  f.count("epochs", c.epochs);
  f.number("learning_rate", c.learning_rate);
  f.count("lr_decay_epoch", c.lr_decay_epoch);
  f.number("lr_decay", c.lr_decay);
  f.number("momentum", c.momentum);
  f.count("batch_lists", c.batch_lists);
  f.seed("rng_seed", c.rng_seed);
  if (const json* v = f.get("loss_kind")) c.loss_kind = loss_kind_at(*v, f.path("loss_kind"));
  f.number("pair_threshold", c.pair_threshold);
  if (const json* v = f.get("roi_kind")) c.roi_kind = sampler_at(*v, f.path("roi_kind"));
  f.number("rank_temperature", c.rank_temperature);
  f.flag("keep_best", c.keep_best);
  if (const json* v = f.get("model")) read_model(*v, f.path("model"), c.model);
  f.finish();
}

void read_data(const json& j, const std::string& path, toy::DataConfig& d) {
  Fields f(j, path);
  f.seed("seed", d.seed);
  f.count("n_train", d.n_train);
  f.count("n_val", d.n_val);
  f.count("n_test", d.n_test);
  f.count("n_views", d.n_views);
  if (const json* v = f.get("synth")) {
    Fields s(*v, f.path("synth"));
    s.count("height", d.synth.height);
    s.count("width", d.synth.width);
    s.number("guided_fraction", d.synth.guided_fraction);
    s.number("thirds_weight", d.synth.thirds_weight);
    s.number("truncation_weight", d.synth.truncation_weight);
    s.finish();
  }
  f.finish();
}

void check_data(const toy::DataConfig& d, const std::string& path) {
  if (d.n_train == 0) throw ConfigError(join(path, "n_train"), "must be >= 1");
  if (d.n_views < 2) throw ConfigError(join(path, "n_views"), "must be >= 2");
  if (d.synth.height < 2 || d.synth.width < 2) throw ConfigError(join(path, "synth"), "image must be at least 2x2");
  if (!(d.synth.guided_fraction >= 0.0 && d.synth.guided_fraction <= 1.0)) {
    throw ConfigError(join(path, "synth.guided_fraction"), "must be in [0, 1]");
  }
}

}  // namespace

Box box_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(path, "expected [x0, y0, x1, y1]");
  Box b{as_number(j[0], index(path, 0)), as_number(j[1], index(path, 1)), as_number(j[2], index(path, 2)),
        as_number(j[3], index(path, 3))};
  if (!b.valid()) throw ConfigError(path, "invalid box " + to_string(b));
  return b;
}

json box_to_json(const Box& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

std::vector<Box> candidates_from_json(const json& j) {
  const json& a = as_array(j, "<root>");
  std::vector<Box> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(box_from_json(a[i], index("", i)));
  return out;
}

std::vector<Box> read_candidates(const std::string& path) { return candidates_from_json(read_json_file(path)); }

void write_candidates(const std::string& path, const std::vector<Box>& boxes) {
  json a = json::array();
  for (const Box& b : boxes) a.push_back(box_to_json(b));
  write_json_file(path, a);
}

std::vector<Annotation> annotations_from_json(const json& j) {
  const json& a = as_array(j, "<root>");
  std::vector<Annotation> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = index("", i);
    Fields f(a[i], p);
    Annotation ann;
    const json* id = f.get("image_id");
    if (id == nullptr) throw ConfigError(f.path("image_id"), "missing");
    ann.image_id = as_string(*id, f.path("image_id"));
    if (!ids.insert(ann.image_id).second) throw ConfigError(f.path("image_id"), "duplicate id '" + ann.image_id + "'");
    const json* boxes = f.get("boxes");
    if (boxes == nullptr) throw ConfigError(f.path("boxes"), "missing");
    const json& ba = as_array(*boxes, f.path("boxes"));
    for (std::size_t k = 0; k < ba.size(); ++k) ann.gt_boxes.push_back(box_from_json(ba[k], index(f.path("boxes"), k)));
    if (ann.gt_boxes.empty()) throw ConfigError(f.path("boxes"), "needs at least one box");
    f.finish();
    out.push_back(std::move(ann));
  }
  return out;
}

std::vector<Annotation> read_annotations(const std::string& path) {
  return annotations_from_json(read_json_file(path));
}

AspectRatio parse_aspect_ratio(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("aspect ratio '" + text + "' is not of the form w:h");
  AspectRatio r;
  try {
    std::size_t used = 0;
    r.w = std::stod(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("");
    const std::string rest = text.substr(colon + 1);
    r.h = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("aspect ratio '" + text + "' is not of the form w:h");
  }
  if (!(r.w > 0.0 && r.h > 0.0 && std::isfinite(r.w) && std::isfinite(r.h))) {
    throw std::invalid_argument("aspect ratio '" + text + "' must have positive sides");
  }
  return r;
}

std::string format_aspect_ratio(const AspectRatio& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.w << ':' << r.h;
  return os.str();
}

WindowConfigFile window_config_from_json(const json& j) {
  WindowConfigFile out;
  Fields f(j, "");
  if (const json* v = f.get("scales")) {
    out.config.scales.clear();
    const json& a = as_array(*v, "scales");
    for (std::size_t i = 0; i < a.size(); ++i) out.config.scales.push_back(as_number(a[i], index("scales", i)));
  }
  if (const json* v = f.get("aspect_ratios")) {
    out.config.aspect_ratios.clear();
    const json& a = as_array(*v, "aspect_ratios");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = index("aspect_ratios", i);
      try {
        out.config.aspect_ratios.push_back(parse_aspect_ratio(as_string(a[i], p)));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(p, e.what());
      }
    }
  }
  f.number("stride", out.config.stride);
  f.number("nms_iou_threshold", out.config.nms_iou_threshold);
  f.number("min_coverage", out.config.min_coverage);
  if (const json* v = f.get("expected_count")) out.expected_count = as_count(*v, "expected_count");
  f.finish();
  validated("", [&] { out.config.validate(); });
  return out;
}

WindowConfigFile read_window_config(const std::string& path) {
  return window_config_from_json(read_json_file(path));
}

json window_config_to_json(const SlidingWindowConfig& cfg, std::optional<std::size_t> expected_count) {
  json j;
  j["scales"] = cfg.scales;
  json ratios = json::array();
  for (const auto& r : cfg.aspect_ratios) ratios.push_back(format_aspect_ratio(r));
  j["aspect_ratios"] = ratios;
  j["stride"] = cfg.stride;
  j["nms_iou_threshold"] = cfg.nms_iou_threshold;
  j["min_coverage"] = cfg.min_coverage;
  if (expected_count) j["expected_count"] = *expected_count;
  return j;
}

ToyRunConfig toy_config_from_json(const json& j) {
  ToyRunConfig out;
  Fields f(j, "");
  if (const json* v = f.get("train")) read_train(*v, "train", out.train);
  if (const json* v = f.get("data")) read_data(*v, "data", out.data);
  f.text("output_dir", out.output_dir);
  f.finish();
  validated("train", [&] { out.train.validate(); });
  check_data(out.data, "data");
  return out;
}

ToyRunConfig read_toy_config(const std::string& path) { return toy_config_from_json(read_json_file(path)); }

json train_config_to_json(const toy::TrainConfig& c) {
  json m;
  m["input_channels"] = c.model.input_channels;
  m["conv_channels"] = c.model.conv_channels;
  m["conv_strides"] = c.model.conv_strides;
  m["fc_hidden"] = c.model.fc_hidden;
  m["roi_output_size"] = c.model.roi_output_size;
  m["fc_init_std"] = c.model.fc_init_std;
  m["input_shift"] = c.model.input_shift;
  json j;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["lr_decay_epoch"] = c.lr_decay_epoch;
  j["lr_decay"] = c.lr_decay;
  j["momentum"] = c.momentum;
  j["batch_lists"] = c.batch_lists;
  j["rng_seed"] = c.rng_seed;
  j["loss_kind"] = std::string(toy::to_string(c.loss_kind));
  j["pair_threshold"] = c.pair_threshold;
  j["roi_kind"] = std::string(toy::to_string(c.roi_kind));
  j["rank_temperature"] = c.rank_temperature;
  j["keep_best"] = c.keep_best;
  j["model"] = m;
  return j;
}

json data_config_to_json(const toy::DataConfig& d) {
  json s;
  s["height"] = d.synth.height;
  s["width"] = d.synth.width;
  s["guided_fraction"] = d.synth.guided_fraction;
  s["thirds_weight"] = d.synth.thirds_weight;
  s["truncation_weight"] = d.synth.truncation_weight;
  json j;
  j["seed"] = d.seed;
  j["n_train"] = d.n_train;
  j["n_val"] = d.n_val;
  j["n_test"] = d.n_test;
  j["n_views"] = d.n_views;
  j["synth"] = s;
  return j;
}

AblationMatrix ablation_matrix_from_json(const json& j) {
  AblationMatrix out;
  Fields f(j, "");
  if (const json* v = f.get("data")) read_data(*v, "data", out.data);
  check_data(out.data, "data");
  toy::TrainConfig base;
  if (const json* v = f.get("base")) read_train(*v, "base", base);
  f.text("output", out.output);

  if (const json* g = f.get("grid")) {
    Fields gf(*g, "grid");
    std::vector<toy::LossKind> losses{base.loss_kind};
    std::vector<toy::SamplerKind> rois{base.roi_kind};
    std::vector<std::uint64_t> seeds{base.rng_seed};
    if (const json* v = gf.get("loss_kinds")) {
      losses.clear();
      const json& a = as_array(*v, gf.path("loss_kinds"));
      for (std::size_t i = 0; i < a.size(); ++i) losses.push_back(loss_kind_at(a[i], index(gf.path("loss_kinds"), i)));
    }
    if (const json* v = gf.get("roi_kinds")) {
      rois.clear();
      const json& a = as_array(*v, gf.path("roi_kinds"));
      for (std::size_t i = 0; i < a.size(); ++i) rois.push_back(sampler_at(a[i], index(gf.path("roi_kinds"), i)));
    }
    if (const json* v = gf.get("seeds")) {
      seeds.clear();
      const json& a = as_array(*v, gf.path("seeds"));
      for (std::size_t i = 0; i < a.size(); ++i) seeds.push_back(as_count(a[i], index(gf.path("seeds"), i)));
    }
    gf.finish();
    for (auto l : losses) {
      for (auto r : rois) {
        for (auto s : seeds) {
          toy::TrainConfig c = base;
          c.loss_kind = l;
          c.roi_kind = r;
          c.rng_seed = s;
          out.runs.push_back(c);
        }
      }
    }
  }
  if (const json* v = f.get("runs")) {
    const json& a = as_array(*v, "runs");
    for (std::size_t i = 0; i < a.size(); ++i) {
      toy::TrainConfig c = base;
      read_train(a[i], index("runs", i), c);
      out.runs.push_back(c);
    }
  }
  f.finish();
  if (out.runs.empty()) throw ConfigError("<root>", "matrix has no runs; give \"grid\" and/or \"runs\"");
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    validated(index("runs", i), [&] { out.runs[i].validate(); });
  }
  return out;
}

AblationMatrix read_ablation_matrix(const std::string& path) {
  return ablation_matrix_from_json(read_json_file(path));
}

json read_json_file(const std::string& path) {
  const std::string text = read_file_bytes(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) { write_file_bytes(path, j.dump(2) + "\n"); }

}  // namespace viewrank::io
