#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "salseg/dataset/folds.hpp"
#include "salseg/dataset/sample.hpp"
#include "salseg/dataset/synthetic.hpp"

using namespace salseg;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("salseg_ds_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_triple(const std::filesystem::path& root, const std::string& id, std::uint8_t image_v,
                  std::uint8_t mask_v, std::uint8_t sal_v) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "masks");
  std::filesystem::create_directories(root / "saliency");
  write_png_gray8(root / "images" / (id + ".png"), MaskU8(8, 8, image_v));
  write_png_gray8(root / "masks" / (id + ".png"), MaskU8(8, 8, mask_v));
  write_png_gray8(root / "saliency" / (id + ".png"), MaskU8(8, 8, sal_v));
}

}  // namespace

TEST_CASE("load_dataset: counts, sorting, normalization, binarization") {
  const auto root = temp_dir("load");
  write_triple(root, "charlie", 128, 255, 10);
  write_triple(root, "alpha", 0, 0, 255);
  write_triple(root, "bravo", 255, 200, 0);

  const auto samples = load_dataset(root);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].id == "alpha");
  CHECK(samples[1].id == "bravo");
  CHECK(samples[2].id == "charlie");

  // Raw 128 -> 128/255 at storage precision; masks binarize at >= 128.
  CHECK(samples[2].image(0, 0) == 128.0f / 255.0f);
  CHECK(samples[2].image(0, 0) == doctest::Approx(0.50196).epsilon(1e-4));
  CHECK(samples[2].mask(0, 0) == 1);
  CHECK(samples[0].mask(0, 0) == 0);
  CHECK(samples[1].mask(3, 3) == 1);  // raw 200 >= 128
  CHECK(samples[0].saliency(0, 0) == doctest::Approx(1.0f));
  std::filesystem::remove_all(root);
}

TEST_CASE("load_dataset: missing counterpart and empty dataset are hard errors") {
  const auto root = temp_dir("err");
  write_triple(root, "x1", 10, 0, 10);
  std::filesystem::remove(root / "masks" / "x1.png");
  write_png_gray8(root / "masks" / "x2.png", MaskU8(8, 8, 0));
  CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(root)),
                       doctest::Contains("x1"), ValidationError);

  const auto empty = temp_dir("empty");
  std::filesystem::create_directories(empty / "images");
  std::filesystem::create_directories(empty / "masks");
  std::filesystem::create_directories(empty / "saliency");
  CHECK_THROWS_AS(static_cast<void>(load_dataset(empty)), ValidationError);
  std::filesystem::remove_all(root);
  std::filesystem::remove_all(empty);
}

TEST_CASE("dataset round trip: save then load reproduces arrays") {
  SyntheticConfig cfg;
  cfg.count = 4;
  cfg.size = 32;
  cfg.quality_mix = {0.5, 0.25, 0.25, 0.0};
  cfg.seed = 77;
  const auto samples = generate_synthetic(cfg);

  const auto root = temp_dir("roundtrip");
  save_dataset(root, samples);
  const auto back = load_dataset(root);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].id == samples[i].id);
    CHECK(back[i].image == samples[i].image);
    CHECK(back[i].mask == samples[i].mask);
    CHECK(back[i].saliency == samples[i].saliency);
  }
  std::filesystem::remove_all(root);
}

TEST_CASE("resize_sample: contract and errors") {
  SyntheticConfig cfg;
  cfg.count = 1;
  cfg.size = 64;
  cfg.seed = 5;
  auto sample = generate_synthetic(cfg).front();

  const auto same = resize_sample(sample, 64);
  CHECK(same.image == sample.image);
  CHECK(same.mask == sample.mask);

  const auto smaller = resize_sample(sample, 32);
  CHECK(smaller.image.rows() == 32);
  CHECK(smaller.mask.cols() == 32);
  validate_sample(smaller);

  Sample constant;
  constant.id = "c";
  constant.image = ImageF(20, 20, 0.5f);
  constant.mask = MaskU8(20, 20, 0);
  constant.mask(10, 10) = 1;
  constant.saliency = ImageF(20, 20, 0.25f);
  const auto resized = resize_sample(constant, 48);
  for (const auto v : resized.image) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));

  CHECK_THROWS_AS(static_cast<void>(resize_sample(sample, 40)), ValidationError);
  CHECK_THROWS_AS(static_cast<void>(resize_sample(sample, 0)), ValidationError);
}

TEST_CASE("fold plan: sizes, disjointness, determinism") {
  std::vector<std::string> ids;
  for (int i = 0; i < 510; ++i) ids.push_back("img" + std::to_string(1000 + i));

  const auto plan = make_fold_plan(ids, 31);
  REQUIRE(plan.fold_count() == 5);
  std::set<std::string> seen;
  for (const auto& fold : plan.folds) {
    CHECK(fold.size() == 102);
    for (const auto& id : fold) CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == 510);

  const auto again = make_fold_plan(ids, 31);
  CHECK(again.folds == plan.folds);
  const auto other = make_fold_plan(ids, 32);
  CHECK(other.folds != plan.folds);

  // Minimal partition: five ids, one per fold.
  const auto tiny = make_fold_plan({"a", "b", "c", "d", "e"}, 1);
  for (const auto& fold : tiny.folds) CHECK(fold.size() == 1);

  CHECK_THROWS_AS(static_cast<void>(make_fold_plan({"a", "b"}, 1)), ValidationError);
}

TEST_CASE("fold plan: sizes differ by at most one for any count") {
  for (int n : {7, 23, 101, 512}) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
    const auto plan = make_fold_plan(ids, 99);
    std::size_t lo = ids.size(), hi = 0;
    for (const auto& fold : plan.folds) {
      lo = std::min(lo, fold.size());
      hi = std::max(hi, fold.size());
    }
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("fold plan serialization round trip") {
  const auto plan = make_fold_plan({"a", "b", "c", "d", "e", "f", "g"}, 17);
  const auto dir = temp_dir("plan");
  save_fold_plan(dir / "plan.json", plan);
  const auto back = load_fold_plan(dir / "plan.json");
  CHECK(back.seed == plan.seed);
  CHECK(back.val_fraction == plan.val_fraction);
  CHECK(back.folds == plan.folds);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic: determinism and counts") {
  SyntheticConfig cfg;
  cfg.count = 10;
  cfg.size = 48;
  cfg.quality_mix = {0.4, 0.3, 0.2, 0.1};
  cfg.seed = 2024;
  const auto a = generate_synthetic(cfg);
  const auto b = generate_synthetic(cfg);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].mask == b[i].mask);
    CHECK(a[i].saliency == b[i].saliency);
  }

  const auto counts = quality_counts(cfg);
  CHECK(counts[0] == 4);
  CHECK(counts[1] == 3);
  CHECK(counts[2] == 2);
  CHECK(counts[3] == 1);
}

TEST_CASE("synthetic: satisfactory maps peak inside the mask") {
  SyntheticConfig cfg;
  cfg.count = 10;
  cfg.size = 64;
  cfg.quality_mix = {1.0, 0.0, 0.0, 0.0};
  cfg.seed = 31337;
  for (const auto& s : generate_synthetic(cfg)) {
    float max_in = 0.0f, max_out = 0.0f;
    for (int r = 0; r < s.rows(); ++r) {
      for (int c = 0; c < s.cols(); ++c) {
        (s.mask(r, c) ? max_in : max_out) = std::max(s.mask(r, c) ? max_in : max_out, s.saliency(r, c));
      }
    }
    CHECK(max_in >= 0.8f);
    CHECK(max_in > max_out);
  }
}

TEST_CASE("synthetic: poor maps live in the mask complement") {
  SyntheticConfig cfg;
  cfg.count = 10;
  cfg.size = 64;
  cfg.quality_mix = {0.0, 0.0, 0.0, 1.0};
  cfg.seed = 99;
  for (const auto& s : generate_synthetic(cfg)) {
    bool any = false;
    for (int r = 0; r < s.rows(); ++r) {
      for (int c = 0; c < s.cols(); ++c) {
        if (s.mask(r, c)) CHECK(s.saliency(r, c) == 0.0f);
        any = any || s.saliency(r, c) > 0.0f;
      }
    }
    CHECK(any);
  }
}

TEST_CASE("synthetic: invariants hold across a hundred-seed fuzz sweep") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SyntheticConfig cfg;
    cfg.count = 4;
    cfg.size = 48;
    cfg.quality_mix = {0.25, 0.25, 0.25, 0.25};
    cfg.seed = seed;
    const auto samples = generate_synthetic(cfg);
    REQUIRE(samples.size() == 4);
    for (const auto& s : samples) {
      CHECK_NOTHROW(validate_sample(s));
      long long tumor = 0;
      for (const auto v : s.mask) tumor += v;
      CHECK(tumor > 0);
    }
  }
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.count = 1;
  cfg.size = 48;
  cfg.quality_mix = {0.5, 0.5, 0.1, 0.0};
  CHECK_THROWS_AS(static_cast<void>(generate_synthetic(cfg)), ValidationError);
  cfg.quality_mix = {-0.5, 1.5, 0.0, 0.0};
  CHECK_THROWS_AS(static_cast<void>(generate_synthetic(cfg)), ValidationError);
  cfg.quality_mix = {1.0, 0.0, 0.0, 0.0};
  cfg.size = 8;
  CHECK_THROWS_AS(static_cast<void>(generate_synthetic(cfg)), ValidationError);
}
