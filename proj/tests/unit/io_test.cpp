#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "oracles.hpp"
#include "test_env.hpp"
#include "viewrank/io/checkpoint.hpp"
#include "viewrank/io/container.hpp"
#include "viewrank/io/errors.hpp"
#include "viewrank/io/json_io.hpp"
#include "viewrank/io/ppm.hpp"

using namespace viewrank;
using namespace viewrank::io;

namespace {

std::vector<TensorEntry> sample_entries() {
  return {
      {"weights", {2, 3}, {1.5, -0.0, std::numeric_limits<double>::denorm_min(), 1e300, -7.25, 0.1}},
      {"scalar", {}, {42.0}},
      {"empty", {0, 4}, {}},
  };
}

std::size_t offset_of(const std::string& bytes, auto&& fn) {
  try {
    fn(bytes);
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no FormatError";
  return 0;
}

std::string ppm(const std::string& header, std::size_t payload) { return header + std::string(payload, '\x80'); }

}  // namespace

TEST(Container, KnownLayout) {
  const std::vector<TensorEntry> e{{"ab", {1}, {1.0}}};
  const std::string b = encode_container(e);
  ASSERT_EQ(b.size(), 4u + 2 + 4 + 4 + 2 + 1 + 4 + 8 + 8);
  EXPECT_EQ(b.substr(0, 4), "CRTN");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(b[5]), 0);
  EXPECT_EQ(static_cast<unsigned char>(b[6]), 1);
  EXPECT_EQ(b.substr(14, 2), "ab");
  EXPECT_EQ(static_cast<unsigned char>(b[16]), kDtypeF64);
  // 1.0 = 0x3FF0000000000000, little-endian.
  EXPECT_EQ(static_cast<unsigned char>(b[b.size() - 1]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(b[b.size() - 2]), 0xF0);
}

TEST(Container, RoundTripIsBitwise) {
  const auto entries = sample_entries();
  const auto back = decode_container(encode_container(entries));
  ASSERT_EQ(back.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    EXPECT_EQ(back[i].name, entries[i].name);
    EXPECT_EQ(back[i].dims, entries[i].dims);
    ASSERT_EQ(back[i].values.size(), entries[i].values.size());
    for (std::size_t k = 0; k < entries[i].values.size(); ++k)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i].values[k]), std::bit_cast<std::uint64_t>(entries[i].values[k]));
  }
  const std::vector<TensorEntry> nan{{"n", {1}, {std::numeric_limits<double>::quiet_NaN()}}};
  EXPECT_EQ(std::bit_cast<std::uint64_t>(decode_container(encode_container(nan))[0].values[0]),
            std::bit_cast<std::uint64_t>(nan[0].values[0]));
  EXPECT_EQ(encode_container(back), encode_container(entries));
}

TEST(Container, RejectsValueCountMismatch) {
  const std::vector<TensorEntry> e{{"x", {2, 2}, {1.0}}};
  EXPECT_THROW(encode_container(e), std::invalid_argument);
}

TEST(Container, ErrorsNameByteOffsets) {
  const std::string good = encode_container(sample_entries());
  auto decode = [](const std::string& b) { decode_container(b); };
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(offset_of(bad, decode), 0u);
  bad = good;
  bad[4] = 9;
  EXPECT_EQ(offset_of(bad, decode), 4u);
  bad = good;
  bad[4 + 2 + 4 + 4 + 7] = 2;  // dtype of the first entry, after its 7-byte name
  EXPECT_EQ(offset_of(bad, decode), 21u);
  EXPECT_EQ(offset_of(good.substr(0, 3), decode), 0u);
  const std::size_t cut = good.size() - 5;
  EXPECT_LE(offset_of(good.substr(0, cut), decode), cut);
  EXPECT_EQ(offset_of(good + "z", decode), good.size());
  try {
    decode_container("NOPE");
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 0"), std::string::npos);
  }
}

TEST(Container, FileRoundTrip) {
  testenv::TempDir dir;
  save_container(dir.file("x.crtn"), sample_entries());
  EXPECT_EQ(load_container(dir.file("x.crtn")), sample_entries());
  EXPECT_THROW(load_container(dir.file("missing.crtn")), std::runtime_error);
}

TEST(Ppm, DecodesWithComments) {
  const std::string bytes = std::string("P6\n# made by hand\n2 1\n255\n") + std::string("\xff\x00\x80\x00\x33\xff", 6);
  const FeatureMap m = decode_ppm(bytes);
  ASSERT_EQ(m.shape(), (Shape{3, 1, 2}));
  EXPECT_EQ(m(0, 0, 0), 1.0);
  EXPECT_EQ(m(1, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(2, 0, 0), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(m(1, 0, 1), 0x33 / 255.0);
}

TEST(Ppm, EncodeDecodeRoundTrip) {
  FeatureMap m({3, 4, 5});
  toy::Rng rng(1);
  for (double& v : m.values()) v = static_cast<double>(rng.below(256)) / 255.0;
  EXPECT_EQ(decode_ppm(encode_ppm(m)), m);
  EXPECT_THROW(encode_ppm(FeatureMap({1, 2, 2})), std::invalid_argument);
  FeatureMap wild({3, 1, 1}, 0.0);
  wild(0, 0, 0) = 2.0;
  wild(1, 0, 0) = -1.0;
  const FeatureMap clamped = decode_ppm(encode_ppm(wild));
  EXPECT_EQ(clamped(0, 0, 0), 1.0);
  EXPECT_EQ(clamped(1, 0, 0), 0.0);
}

TEST(Ppm, ErrorsNameByteOffsets) {
  auto decode = [](const std::string& b) { decode_ppm(b); };
  EXPECT_EQ(offset_of(ppm("P3\n2 2\n255\n", 12), decode), 0u);
  EXPECT_EQ(offset_of(ppm("P6\n2 2\n65535\n", 24), decode), 7u);
  EXPECT_EQ(offset_of(ppm("P6\nx 2\n255\n", 12), decode), 3u);
  const std::string truncated = ppm("P6\n2 2\n255\n", 7);
  EXPECT_EQ(offset_of(truncated, decode), truncated.size());
  EXPECT_EQ(offset_of(ppm("P6\n0 2\n255\n", 0), decode), 3u);
  EXPECT_EQ(offset_of(std::string(""), decode), 0u);
}

TEST(Json, BoxesAndCandidates) {
  testenv::TempDir dir;
  const std::vector<Box> boxes{{0, 0, 1, 1}, {0.125, 0.25, 0.5, 0.75}};
  write_candidates(dir.file("c.json"), boxes);
  EXPECT_EQ(read_candidates(dir.file("c.json")), boxes);
  EXPECT_THROW(box_from_json(json::parse("[0.5, 0, 0.5, 1]"), "b"), ConfigError);
  EXPECT_THROW(box_from_json(json::parse("[0, 0, 1]"), "b"), ConfigError);
  try {
    candidates_from_json(json::parse("[[0,0,1,1],[0,0,\"x\",1]]"));
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(e.path().find("[1]"), std::string::npos) << e.what();
  }
}

TEST(Json, Annotations) {
  const auto a = annotations_from_json(json::parse(R"([{"image_id": "a", "boxes": [[0,0,1,1],[0,0,0.5,0.5]]}])"));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].image_id, "a");
  EXPECT_EQ(a[0].gt_boxes.size(), 2u);
  EXPECT_THROW(annotations_from_json(json::parse(R"([{"image_id": "a", "boxes": []}])")), ConfigError);
  EXPECT_THROW(annotations_from_json(json::parse(R"([{"image_id": "a", "boxes": [[0,0,1,1]]},
                                                      {"image_id": "a", "boxes": [[0,0,1,1]]}])")),
               ConfigError);
  EXPECT_THROW(annotations_from_json(json::parse(R"([{"image_id": "a", "boxes": [[0,0,1,1]], "x": 1}])")), ConfigError);
}

TEST(Json, WindowConfigRoundTrip) {
  SlidingWindowConfig c;
  c.stride = 0.0259;
  c.nms_iou_threshold = 0.81;
  const auto back = window_config_from_json(window_config_to_json(c, 99));
  EXPECT_EQ(back.config.scales, c.scales);
  EXPECT_EQ(back.config.aspect_ratios, c.aspect_ratios);
  EXPECT_EQ(back.config.stride, c.stride);
  EXPECT_EQ(back.config.nms_iou_threshold, c.nms_iou_threshold);
  EXPECT_EQ(back.expected_count, 99u);
  EXPECT_EQ(parse_aspect_ratio("16:9"), (AspectRatio{16, 9}));
  EXPECT_EQ(format_aspect_ratio({3, 4}), "3:4");
  EXPECT_THROW(parse_aspect_ratio("16x9"), std::invalid_argument);
  EXPECT_THROW(parse_aspect_ratio("0:1"), std::invalid_argument);
}

TEST(Json, ToyConfigFieldPaths) {
  auto path_of = [](const char* text) -> std::string {
    try {
      toy_config_from_json(json::parse(text));
    } catch (const ConfigError& e) {
      return e.path();
    }
    return "<no error>";
  };
  EXPECT_EQ(path_of(R"({"train": {"learning_rate": -1}})"), "train.learning_rate");
  EXPECT_EQ(path_of(R"({"train": {"loss_kind": "bogus"}})"), "train.loss_kind");
  EXPECT_EQ(path_of(R"({"train": {"lr": 0.1}})"), "train.lr");
  EXPECT_EQ(path_of(R"({"data": {"synth": {"height": "tall"}}})"), "data.synth.height");
  EXPECT_EQ(path_of(R"({"train": {"model": {"fc_hidden": [4, -2]}}})").rfind("train.model.fc_hidden", 0), 0u);
  EXPECT_EQ(path_of(R"({"train": {"epochs": 3}})"), "<no error>");
  const auto cfg = toy_config_from_json(json::parse(R"({"train": {"epochs": 3, "roi_kind": "pool"}, "output_dir": "d"})"));
  EXPECT_EQ(cfg.train.epochs, 3u);
  EXPECT_EQ(cfg.train.roi_kind, toy::SamplerKind::Pool);
  EXPECT_EQ(cfg.output_dir, "d");
}

TEST(Json, AblationMatrix) {
  const auto m = ablation_matrix_from_json(json::parse(R"({
    "base": {"epochs": 1},
    "grid": {"loss_kinds": ["listwise", "pairwise_all"], "roi_kinds": ["pool", "refine"], "seeds": [0, 1]},
    "runs": [{"loss_kind": "pairwise_adjacent"}]})"));
  ASSERT_EQ(m.runs.size(), 9u);
  EXPECT_EQ(m.runs[0].loss_kind, toy::LossKind::Listwise);
  EXPECT_EQ(m.runs[0].roi_kind, toy::SamplerKind::Pool);
  EXPECT_EQ(m.runs[1].rng_seed, 1u);
  EXPECT_EQ(m.runs[2].roi_kind, toy::SamplerKind::Refine);
  EXPECT_EQ(m.runs[4].loss_kind, toy::LossKind::PairwiseAll);
  EXPECT_EQ(m.runs[8].loss_kind, toy::LossKind::PairwiseAdjacent);
  for (const auto& r : m.runs) EXPECT_EQ(r.epochs, 1u);
  try {
    ablation_matrix_from_json(json::parse(R"({"runs": [{}, {}, {"roi_kind": "nope"}]})"));
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "runs[2].roi_kind");
  }
  EXPECT_THROW(ablation_matrix_from_json(json::parse("{}")), ConfigError);
}

TEST(Json, ParseErrorsNameTheFile) {
  testenv::TempDir dir;
  write_file_bytes(dir.file("bad.json"), "{ not json");
  try {
    read_json_file(dir.file("bad.json"));
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), dir.file("bad.json"));
  }
}

TEST(Checkpoint, RoundTrip) {
  testenv::TempDir dir;
  toy::ModelConfig mc;
  mc.conv_channels = {4, 4, 4};
  mc.fc_hidden = {5, 3};
  mc.roi_output_size = 3;
  const Checkpoint c{toy::init_model(mc, 9), toy::SamplerKind::Align};
  const std::string path = dir.file("m.crtn");
  save_checkpoint(path, c);
  EXPECT_EQ(manifest_path(path), dir.file("m.json"));
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.sampler, toy::SamplerKind::Align);
  const auto manifest = read_json_file(manifest_path(path));
  EXPECT_EQ(manifest.at("tensors").size(), c.params.tensors.size());
}

TEST(Checkpoint, DetectsMismatch) {
  testenv::TempDir dir;
  toy::ModelConfig mc;
  mc.conv_channels = {4, 4, 4};
  mc.fc_hidden = {5, 3};
  mc.roi_output_size = 3;
  const std::string path = dir.file("m.crtn");
  save_checkpoint(path, {toy::init_model(mc, 9), toy::SamplerKind::Refine});
  auto entries = load_container(path);
  entries.pop_back();
  save_container(path, entries);
  EXPECT_THROW(load_checkpoint(path), DataError);
}
