#include "viewrank/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "viewrank/cli/checks.hpp"
#include "viewrank/io/checkpoint.hpp"
#include "viewrank/io/errors.hpp"
#include "viewrank/io/json_io.hpp"
#include "viewrank/io/ppm.hpp"
#include "viewrank/roi.hpp"
#include "viewrank/toy/rng.hpp"
#include "viewrank/toy/synth.hpp"
#include "viewrank/toy/train.hpp"
#include "viewrank/views.hpp"

namespace viewrank::cli {

namespace {

// Raised for bad flag values discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string box_text(const Box& b) {
  std::ostringstream os;
  os << std::setprecision(17) << '[' << b.x0 << ", " << b.y0 << ", " << b.x1 << ", " << b.y1 << ']';
  return os.str();
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

// ---- gradcheck -----------------------------------------------------------

struct GradcheckArgs {
  std::string target;
  std::uint64_t seed = 0;
  std::size_t instances = 1;
  double tol = 0.0;  // 0: per-target default
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const auto target = parse_check_target(a.target);
  if (!target) throw UsageError("unknown gradcheck target '" + a.target + "'");
  const double tol = a.tol > 0.0 ? a.tol : default_tolerance(*target);
  bool all = true;
  for (std::size_t i = 0; i < a.instances; ++i) {
    const std::uint64_t seed = a.seed + i;
    const GradCheckReport r = run_gradcheck(*target, seed, tol);
    all = all && r.passed;
    out << to_string(*target) << " seed=" << seed << " checked=" << r.checked
        << " max_abs_err=" << std::scientific << std::setprecision(3) << r.max_abs_error
        << " max_rel_err=" << r.max_rel_error << " tol=" << tol << std::defaultfloat << ' '
        << (r.passed ? "PASS" : "FAIL");
    if (!r.passed && !r.diagnostic.empty()) out << " (" << r.diagnostic << ')';
    out << '\n';
  }
  return all ? kExitOk : kExitFailure;
}

// ---- gen-views / calibrate-views ------------------------------------------

struct GenViewsArgs {
  std::string config;
  std::vector<double> scales;
  std::vector<std::string> ratios;
  std::optional<double> stride;
  std::optional<double> nms;
  std::optional<double> min_coverage;
  std::string out_path;
};

int cmd_gen_views(const GenViewsArgs& a, std::ostream& out, std::ostream& err) {
  io::WindowConfigFile file;
  if (!a.config.empty()) file = io::read_window_config(a.config);
  SlidingWindowConfig& cfg = file.config;
  if (!a.scales.empty()) cfg.scales = a.scales;
  if (!a.ratios.empty()) {
    cfg.aspect_ratios.clear();
    for (const auto& r : a.ratios) {
      try {
        cfg.aspect_ratios.push_back(io::parse_aspect_ratio(r));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (a.stride) cfg.stride = *a.stride;
  if (a.nms) cfg.nms_iou_threshold = *a.nms;
  if (a.min_coverage) cfg.min_coverage = *a.min_coverage;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::vector<Box> boxes = generate_candidates(cfg);
  if (!a.out_path.empty()) {
    ensure_parent_dir(a.out_path);
    io::write_candidates(a.out_path, boxes);
  }
  out << boxes.size() << '\n';
  const bool overridden = !a.scales.empty() || !a.ratios.empty() || a.stride || a.nms || a.min_coverage;
  if (file.expected_count && !overridden && *file.expected_count != boxes.size()) {
    err << "error: config expects " << *file.expected_count << " candidates, generated " << boxes.size() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

struct CalibrateArgs {
  std::size_t target = 1745;
  std::string base;
  double stride_max = 0.06;
  double stride_min = 0.015;
  double stride_step = 1e-4;
  std::string out_path;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  SlidingWindowConfig base;
  if (!a.base.empty()) base = io::read_window_config(a.base).config;
  CalibrationSearch search;
  search.stride_max = a.stride_max;
  search.stride_min = a.stride_min;
  search.stride_step = a.stride_step;
  if (!(search.stride_step > 0.0 && search.stride_min > 0.0 && search.stride_min <= search.stride_max)) {
    throw UsageError("need 0 < stride-min <= stride-max and stride-step > 0");
  }
  const auto cal = calibrate_window_config(base, a.target, search);
  if (!cal) {
    err << "error: no stride in [" << search.stride_min << ", " << search.stride_max << "] yields exactly "
        << a.target << " candidates\n";
    return kExitFailure;
  }
  out << "count " << cal->count << "\nstride " << std::setprecision(10) << cal->config.stride
      << "\nnms_iou_threshold " << cal->config.nms_iou_threshold << " (interval [" << cal->threshold_lo << ", "
      << cal->threshold_hi << "])\n";
  if (!a.out_path.empty()) {
    ensure_parent_dir(a.out_path);
    io::write_json_file(a.out_path, io::window_config_to_json(cal->config, cal->count));
  }
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string metric = "iou";
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto preds = io::read_annotations(a.pred);
  const auto gts = io::read_annotations(a.gt);
  std::map<std::string, const Annotation*> gt_by_id;
  for (const auto& g : gts) gt_by_id[g.image_id] = &g;
  std::set<std::string> pred_ids;
  std::vector<std::string> missing_gt, missing_pred;
  for (const auto& p : preds) {
    pred_ids.insert(p.image_id);
    if (!gt_by_id.contains(p.image_id)) missing_gt.push_back(p.image_id);
  }
  for (const auto& g : gts) {
    if (!pred_ids.contains(g.image_id)) missing_pred.push_back(g.image_id);
  }
  if (!missing_gt.empty() || !missing_pred.empty()) {
    std::string msg = "image ids do not match;";
    auto list = [&](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" ") + what + ":";
      for (const auto& id : ids) msg += " " + id;
      msg += ";";
    };
    list("no ground truth for", missing_gt);
    list("no prediction for", missing_pred);
    msg.pop_back();
    throw io::DataError(msg);
  }

  double sum = 0.0;
  for (const auto& p : preds) {
    const Annotation& g = *gt_by_id.at(p.image_id);
    if (p.gt_boxes.empty()) throw io::DataError("prediction for '" + p.image_id + "' has no box");
    const Box& pb = p.gt_boxes.front();
    double v = 0.0;
    if (a.metric == "top1maxiou") {
      v = top1_max_iou(pb, g);
    } else {
      if (g.gt_boxes.size() != 1) {
        throw io::DataError("metric " + a.metric + " needs exactly one ground-truth box for '" + p.image_id +
                            "', found " + std::to_string(g.gt_boxes.size()));
      }
      v = a.metric == "iou" ? iou(pb, g.gt_boxes.front()) : boundary_displacement(pb, g.gt_boxes.front());
    }
    sum += v;
    out << p.image_id << ' ' << fmt(v) << '\n';
  }
  const double mean = preds.empty() ? 0.0 : sum / static_cast<double>(preds.size());
  out << "mean " << a.metric << ' ' << fmt(mean) << " over " << preds.size() << " images\n";
  return kExitOk;
}

// ---- bench-roi -------------------------------------------------------------

struct BenchArgs {
  std::string kind = "refine";
  std::size_t channels = 64;
  std::size_t size = 28;
  std::size_t boxes = 1745;
  std::size_t iters = 1;
  std::size_t output_size = 14;
  std::uint64_t seed = 0;
};

int cmd_bench_roi(const BenchArgs& a, std::ostream& out) {
  const auto kind = parse_roi_kind(a.kind);
  if (!kind) throw UsageError("unknown RoI kind '" + a.kind + "'");
  if (a.channels == 0 || a.size == 0 || a.iters == 0 || a.output_size == 0) {
    throw UsageError("channels, size, iters and output-size must be >= 1");
  }
  toy::Rng rng(a.seed);
  FeatureMap map({a.channels, a.size, a.size});
  for (double& v : map.values()) v = rng.uniform(-1.0, 1.0);
  std::vector<Box> boxes;
  boxes.reserve(a.boxes);
  for (std::size_t i = 0; i < a.boxes; ++i) {
    const double w = rng.uniform(0.2, 1.0), h = rng.uniform(0.2, 1.0);
    const double x0 = rng.uniform(0.0, 1.0 - w), y0 = rng.uniform(0.0, 1.0 - h);
    boxes.push_back({x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h)});
  }
  RoIConfig cfg = RoIConfig::defaults(*kind);
  cfg.output_size = a.output_size;

  double checksum = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t it = 0; it < a.iters; ++it) {
    const auto feats = roi_forward(map, boxes, cfg);
    if (it + 1 == a.iters) {
      for (const auto& f : feats) checksum = std::accumulate(f.data.values().begin(), f.data.values().end(), checksum);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double total = static_cast<double>(a.boxes * a.iters);
  out << "kind " << to_string(*kind) << " channels " << a.channels << " size " << a.size << " boxes " << a.boxes
      << " iters " << a.iters << '\n';
  out << "wall_seconds " << fmt(secs) << '\n';
  out << "boxes_per_second " << fmt(secs > 0.0 ? total / secs : 0.0, 1) << '\n';
  out << "checksum " << std::setprecision(17) << checksum << '\n';
  return kExitOk;
}

// ---- train-toy / ablation ---------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out_dir;
};

void print_report(std::ostream& out, const char* split, const toy::EvalReport& r) {
  out << split << " spearman " << fmt(r.spearman, 4) << " top1_accuracy " << fmt(r.top1_accuracy, 4)
      << " mean_iou " << fmt(r.mean_iou_vs_oracle_best, 4) << '\n';
}

int cmd_train_toy(const TrainArgs& a, std::ostream& out) {
  io::ToyRunConfig cfg;
  if (!a.config.empty()) cfg = io::read_toy_config(a.config);
  const std::string dir = a.out_dir.empty() ? cfg.output_dir : a.out_dir;
  std::filesystem::create_directories(dir);

  const toy::DataSplits data = toy::make_splits(cfg.data);
  const toy::TrainResult result = toy::train(cfg.train, data.train, data.val);

  {
    std::ofstream log(std::filesystem::path(dir) / "training_log.csv");
    if (!log) throw std::runtime_error("cannot write training log in '" + dir + "'");
    toy::write_training_log_csv(log, result.log);
  }
  io::save_checkpoint((std::filesystem::path(dir) / "checkpoint.crtn").string(),
                      {result.params, cfg.train.roi_kind});
  io::json resolved;
  resolved["train"] = io::train_config_to_json(cfg.train);
  resolved["data"] = io::data_config_to_json(cfg.data);
  resolved["output_dir"] = dir;
  io::write_json_file((std::filesystem::path(dir) / "config.json").string(), resolved);

  for (const auto& e : result.log) {
    out << "epoch " << e.epoch << " loss " << fmt(e.loss) << " val_spearman " << fmt(e.val_spearman, 4) << '\n';
  }
  out << "best_epoch " << result.best_epoch << '\n';
  if (!data.val.empty()) print_report(out, "val", toy::eval_rank_quality(result.params, cfg.train.roi_kind, data.val));
  if (!data.test.empty()) print_report(out, "test", toy::eval_rank_quality(result.params, cfg.train.roi_kind, data.test));
  out << "wrote " << dir << "/{training_log.csv,checkpoint.crtn,checkpoint.json,config.json}\n";
  return kExitOk;
}

struct AblationArgs {
  std::string matrix;
  std::string out_path;
};

int cmd_ablation(const AblationArgs& a, std::ostream& out) {
  const io::AblationMatrix m = io::read_ablation_matrix(a.matrix);
  const std::string path = a.out_path.empty() ? m.output : a.out_path;
  const auto rows = toy::run_ablation(m.runs, m.data);
  ensure_parent_dir(path);
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("cannot open '" + path + "' for writing");
  toy::write_ablation_csv(csv, rows);
  toy::write_ablation_csv(out, rows);
  return kExitOk;
}

// ---- rank / synth-image -------------------------------------------------------

struct RankArgs {
  std::string image;
  std::string candidates;
  std::string checkpoint;
  std::string out_path;
};

int cmd_rank(const RankArgs& a, std::ostream& out) {
  const FeatureMap image = io::read_ppm(a.image);
  const std::vector<Box> boxes = io::read_candidates(a.candidates);
  if (boxes.empty()) throw io::DataError("candidate file '" + a.candidates + "' is empty");
  const io::Checkpoint ckpt = io::load_checkpoint(a.checkpoint);
  const ScoreList scores = toy::forward_score(ckpt.params, image, boxes, ckpt.sampler);

  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  const std::size_t best = best_view_index(scores);
  out << "best " << box_text(boxes[best]) << " score " << std::setprecision(17) << scores[best] << '\n';
  if (!a.out_path.empty()) {
    io::json ranked = io::json::array();
    for (std::size_t i : order) {
      ranked.push_back({{"box", io::box_to_json(boxes[i])}, {"score", scores[i]}, {"index", i}});
    }
    ensure_parent_dir(a.out_path);
    io::write_json_file(a.out_path, ranked);
  }
  return kExitOk;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t views = 24;
  std::size_t size = 64;
  std::string out_path;
  std::string views_path;
};

int cmd_synth_image(const SynthArgs& a, std::ostream& out) {
  toy::SynthConfig sc;
  sc.height = sc.width = a.size;
  if (a.size < 2 || a.views < 2) throw UsageError("size and views must be >= 2");
  const auto samples = toy::synth_generate(a.seed, 1, a.views, sc);
  const toy::SynthSample& s = samples.front();
  ensure_parent_dir(a.out_path);
  io::write_ppm(a.out_path, s.image.image);
  if (!a.views_path.empty()) {
    ensure_parent_dir(a.views_path);
    io::write_candidates(a.views_path, s.list.views);
  }
  out << "subject " << box_text(s.image.subject_box) << '\n';
  out << "oracle_best " << box_text(s.list.views[best_view_index(s.list.gt_scores)]) << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Listwise view ranking toolkit: RoI kernels, candidate views, toy training."};
  app.name("viewrank");
  app.require_subcommand(1);

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
  gradcheck->add_option("target", gc.target,
                        "bilinear | roi:<pool|align|warp|refine> | loss:<listwise|hinge> | model | "
                        "model:<sampler>:<loss>")
      ->required();
  gradcheck->add_option("--seed", gc.seed, "Seed of the first random instance");
  gradcheck->add_option("--instances", gc.instances, "Number of instances (seeds seed, seed+1, ...)")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--tol", gc.tol, "Relative tolerance (default 1e-6 for losses, 1e-3 otherwise)")
      ->check(CLI::PositiveNumber);

  GenViewsArgs gv;
  auto* gen = app.add_subcommand("gen-views", "Generate sliding-window candidate views");
  gen->add_option("--config", gv.config, "Window config JSON (flags override its fields)")->check(CLI::ExistingFile);
  gen->add_option("--scales", gv.scales, "Comma-separated scales (area fraction = scale^2)")->delimiter(',');
  gen->add_option("--ratios", gv.ratios, "Comma-separated aspect ratios w:h")->delimiter(',');
  gen->add_option("--stride", gv.stride, "Anchor stride (fraction of the image side)");
  gen->add_option("--nms", gv.nms, "NMS IoU threshold (1 keeps everything but exact duplicates)");
  gen->add_option("--min-coverage", gv.min_coverage, "Drop windows covering less of the image area");
  gen->add_option("--out", gv.out_path, "Write candidates JSON here");

  CalibrateArgs ca;
  auto* cal = app.add_subcommand("calibrate-views", "Search stride and NMS threshold for a candidate count");
  cal->add_option("--target", ca.target, "Required number of candidates");
  cal->add_option("--base", ca.base, "Window config providing scales and ratios")->check(CLI::ExistingFile);
  cal->add_option("--stride-max", ca.stride_max, "Largest stride tried");
  cal->add_option("--stride-min", ca.stride_min, "Smallest stride tried");
  cal->add_option("--stride-step", ca.stride_step, "Stride search step");
  cal->add_option("--out", ca.out_path, "Write the calibrated config JSON here");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted boxes against annotations");
  evaluate->add_option("--pred", ev.pred, "Predictions JSON [{image_id, boxes}]")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gt", ev.gt, "Annotations JSON [{image_id, boxes}]")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--metric", ev.metric)->check(CLI::IsMember({"iou", "disp", "top1maxiou"}));

  BenchArgs bb;
  auto* bench = app.add_subcommand("bench-roi", "Time RoI forward passes on a random map");
  bench->add_option("--kind", bb.kind, "pool | align | warp | refine");
  bench->add_option("--channels", bb.channels, "Feature map channels");
  bench->add_option("--size", bb.size, "Feature map height and width");
  bench->add_option("--boxes", bb.boxes, "Number of random boxes");
  bench->add_option("--iters", bb.iters, "Timed repetitions");
  bench->add_option("--output-size", bb.output_size, "RoI output side");
  bench->add_option("--seed", bb.seed, "Seed for the map and boxes");

  TrainArgs tr;
  auto* train = app.add_subcommand("train-toy", "Train the toy ranking model on synthetic data");
  train->add_option("--config", tr.config, "Training config JSON (defaults when omitted)")->check(CLI::ExistingFile);
  train->add_option("--out", tr.out_dir, "Output directory (overrides the config)");

  AblationArgs ab;
  auto* ablation = app.add_subcommand("ablation", "Train and evaluate every config of a matrix");
  ablation->add_option("--matrix", ab.matrix, "Ablation matrix JSON")->required()->check(CLI::ExistingFile);
  ablation->add_option("--out", ab.out_path, "CSV output (overrides the matrix)");

  RankArgs rk;
  auto* rank = app.add_subcommand("rank", "Score candidate views of an image with a trained checkpoint");
  rank->add_option("--image", rk.image, "Binary PPM (P6) image")->required()->check(CLI::ExistingFile);
  rank->add_option("--candidates", rk.candidates, "Candidates JSON [[x0,y0,x1,y1], ...]")
      ->required()
      ->check(CLI::ExistingFile);
  rank->add_option("--checkpoint", rk.checkpoint, "Checkpoint tensor file (manifest alongside)")
      ->required()
      ->check(CLI::ExistingFile);
  rank->add_option("--out", rk.out_path, "Write the scored list, best first");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth-image", "Render one synthetic image and its candidate views");
  synth->add_option("--seed", sy.seed, "Scene seed");
  synth->add_option("--views", sy.views, "Number of candidate views");
  synth->add_option("--size", sy.size, "Image height and width in pixels");
  synth->add_option("--out", sy.out_path, "PPM output")->required();
  synth->add_option("--views-out", sy.views_path, "Candidates JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gradcheck) return cmd_gradcheck(gc, out);
    if (*gen) return cmd_gen_views(gv, out, err);
    if (*cal) return cmd_calibrate(ca, out, err);
    if (*evaluate) return cmd_evaluate(ev, out);
    if (*bench) return cmd_bench_roi(bb, out);
    if (*train) return cmd_train_toy(tr, out);
    if (*ablation) return cmd_ablation(ab, out);
    if (*rank) return cmd_rank(rk, out);
    if (*synth) return cmd_synth_image(sy, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace viewrank::cli
