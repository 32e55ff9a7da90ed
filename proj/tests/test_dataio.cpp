#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>

#include "mvc/dataio.hpp"
#include "mvc/errors.hpp"
#include "support.hpp"

using namespace mvc;
using namespace mvc::data;
using testing::grid_manifest;
using testing::grid_records;
using testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("video kind spellings") {
  for (int k = 0; k <= 6; ++k) {
    const auto kind = static_cast<VideoKind>(k);
    CHECK(parse_video_kind(to_string(kind)) == kind);
  }
  CHECK(to_string(VideoKind::rot_x_pos) == "rotation_x+");
  CHECK(to_string(VideoKind::hodgepodge) == "hodgepodge");
  CHECK_THROWS_AS(parse_video_kind("rotation_w+"), ParseError);
  CHECK_FALSE(is_rotation(VideoKind::hodgepodge));
}

TEST_CASE("json line round trip") {
  const FrameRecord r{3, 7, 41, VideoKind::rot_y_neg, 2.5, "images/a b.ppm", {1.25, 2, 30.5, 40}};
  CHECK(parse_json_line(to_json_line(r)) == r);
  CHECK_THROWS_AS(parse_json_line("{not json"), ParseError);
  CHECK_THROWS_AS(parse_json_line("[1,2]"), ParseError);
  auto j = to_json_line(r);
  j.insert(1, "\"extra\": 1, ");
  CHECK_THROWS_AS(parse_json_line(j), ParseError);
}

TEST_CASE("manifest indices") {
  const Manifest m = grid_manifest(2, 3, 2, 4, 2.0);
  CHECK(m.size() == 2 * 3 * 3 * 4);
  CHECK(m.fps() == 2.0);
  CHECK(m.duration() == doctest::Approx(2.0));
  CHECK(m.class_ids() == std::vector<int>{0, 1});
  CHECK(m.video_ids().size() == 18);
  CHECK(m.objects().size() == 6);
  CHECK(m.objects_of_class(1) == std::vector<int>{0, 1, 2});
  CHECK(m.object_frames({1, 2}).size() == 12);
  const auto& v = m.video_frames(5);
  REQUIRE(v.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(m.frame_index(v[k]) == static_cast<long>(k));
  CHECK_THROWS_AS(m.video_frames(99), IndexError);
  CHECK(m.rotation_only().size() == 2 * 3 * 2 * 4);
}

TEST_CASE("video frames are indexed in time order") {
  auto recs = grid_records(1, 1, 1, 5, 1.0);
  std::reverse(recs.begin(), recs.end());
  const Manifest m(recs, 1.0);
  const auto& v = m.video_frames(0);
  for (std::size_t k = 1; k < v.size(); ++k) CHECK(m[v[k - 1]].t < m[v[k]].t);
}

TEST_CASE("fps is inferred from timestamp spacing") {
  const Manifest m(grid_records(1, 1, 1, 6, 3.0));
  CHECK(m.fps() == doctest::Approx(3.0));
}

TEST_CASE("manifest invariants") {
  auto dup = grid_records(1, 1, 0, 3, 1.0);
  dup.push_back(dup[1]);
  CHECK_THROWS_AS(Manifest(dup, 1.0), ConfigError);
  auto bad = grid_records(1, 1, 0, 3, 1.0);
  bad[0].bbox.w = 0;
  CHECK_THROWS_AS(Manifest(bad, 1.0), ConfigError);
  auto shared = grid_records(1, 2, 0, 2, 1.0);
  shared.back().video_id = 0;
  shared.back().t = 5;
  CHECK_THROWS_AS(Manifest(shared, 1.0), ConfigError);
}

TEST_CASE("load_manifest errors") {
  TempDir dir("manifest");
  write_text(dir.path() / "empty.jsonl", "");
  CHECK(what_of([&] { load_manifest(dir.path() / "empty.jsonl"); }).find("empty") != std::string::npos);

  const auto recs = grid_records(1, 1, 0, 2, 1.0);
  write_text(dir.path() / "bad.jsonl", to_json_line(recs[0]) + "\n{\"class_id\": }\n");
  CHECK(what_of([&] { load_manifest(dir.path() / "bad.jsonl", false); }).find(":2:") != std::string::npos);

  write_text(dir.path() / "dup.jsonl", to_json_line(recs[0]) + "\n" + to_json_line(recs[0]) + "\n");
  CHECK_THROWS_AS(load_manifest(dir.path() / "dup.jsonl", false), ParseError);
  CHECK(what_of([&] { load_manifest(dir.path() / "dup.jsonl", false); }).find("duplicate") != std::string::npos);

  write_text(dir.path() / "ok.jsonl", to_json_line(recs[0]) + "\n");
  CHECK_THROWS_AS(load_manifest(dir.path() / "ok.jsonl"), ParseError);
  CHECK(what_of([&] { load_manifest(dir.path() / "ok.jsonl"); }).find("missing image") != std::string::npos);
  CHECK_NOTHROW(load_manifest(dir.path() / "ok.jsonl", false));
  CHECK_THROWS_AS(load_manifest(dir.path() / "absent.jsonl"), ParseError);
}

TEST_CASE("write and load round trip resolves relative images") {
  TempDir dir("roundtrip");
  std::vector<FrameRecord> recs = grid_records(1, 1, 1, 2, 1.0);
  std::filesystem::create_directories(dir.path() / "c0");
  for (auto& r : recs) write_ppm(Image(2, 2, 0.5f), dir.path() / r.image);
  write_manifest(Manifest(recs, 1.0), dir.path() / "m.jsonl");
  const Manifest back = load_manifest(dir.path() / "m.jsonl");
  CHECK(back.records() == recs);
  CHECK(back.image_path(0) == dir.path() / recs[0].image);
}

TEST_CASE("paper-shaped manifest has 2520 videos") {
  const Manifest m = grid_manifest(12, 30, 6, 2, 1.0);
  CHECK(m.video_ids().size() == 2520);
  CHECK(m.objects().size() == 360);
}

TEST_CASE("square_crop examples") {
  auto a = square_crop({10, 20, 30, 50}, 200, 200);
  CHECK(a.box == BBox{0, 20, 50, 50});
  CHECK_FALSE(a.degraded);
  CHECK(square_crop({15, 25, 40, 40}, 200, 200).box == BBox{15, 25, 40, 40});
  auto b = square_crop({0, 0, 10, 50}, 100, 100);
  CHECK(b.box == BBox{0, 0, 50, 50});
  auto c = square_crop({0, 10, 120, 20}, 100, 100);
  CHECK(c.degraded);
  CHECK(c.box.w == 100);
  CHECK(c.box.h == 100);
  CHECK_THROWS_AS(square_crop({300, 300, 5, 5}, 100, 100), ConfigError);
  CHECK_THROWS_AS(square_crop({1, 1, 0, 5}, 100, 100), ConfigError);
}

TEST_CASE("square_crop properties on random boxes") {
  Rng rng(17);
  std::size_t violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double iw = rng.uniform(20, 300), ih = rng.uniform(20, 300);
    const double w = rng.uniform(1, iw), h = rng.uniform(1, ih);
    const double x = rng.uniform(0, iw - w), y = rng.uniform(0, ih - h);
    const auto out = square_crop({x, y, w, h}, iw, ih);
    const BBox& s = out.box;
    const double side = std::max(w, h);
    if (s.w != s.h) ++violations;
    if (s.x < 0 || s.y < 0 || s.x + s.w > iw + 1e-9 || s.y + s.h > ih + 1e-9) ++violations;
    if (side <= std::min(iw, ih)) {
      if (out.degraded || s.w != side) ++violations;
      if (s.x > x + 1e-9 || s.y > y + 1e-9 || s.x + s.w < x + w - 1e-9 || s.y + s.h < y + h - 1e-9) ++violations;
    } else if (!out.degraded) {
      ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("interpolate_bbox examples") {
  const BBox b1{10, 0, 4, 6}, b2{40, 8, 10, 2};
  CHECK(interpolate_bbox(b1, 1, b2, 2, 2) == b2);
  CHECK(interpolate_bbox(b1, 1, b2, 2, 4.0 / 3.0).x == doctest::Approx(20).epsilon(1e-15));
  CHECK(interpolate_bbox(b1, 1, b2, 2, 1.5) == BBox{25, 4, 7, 4});
  CHECK_THROWS_AS(interpolate_bbox(b1, 1, b2, 2, 1), IndexError);
  CHECK_THROWS_AS(interpolate_bbox(b1, 1, b2, 2, 2.5), IndexError);
}

TEST_CASE("interpolate_bbox endpoint and midpoint identities") {
  Rng rng(3);
  std::size_t bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const BBox a{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(1, 50), rng.uniform(1, 50)};
    const BBox b{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(1, 50), rng.uniform(1, 50)};
    const double t1 = rng.uniform(0, 10), t2 = t1 + rng.uniform(0.5, 5);
    if (!(interpolate_bbox(a, t1, b, t2, t2) == b)) ++bad;
    const BBox m = interpolate_bbox(a, t1, b, t2, t1 + (t2 - t1) / 2);
    if (std::abs(m.x - (a.x + b.x) / 2) > 1e-12 || std::abs(m.y - (a.y + b.y) / 2) > 1e-12 ||
        std::abs(m.w - (a.w + b.w) / 2) > 1e-12 || std::abs(m.h - (a.h + b.h) / 2) > 1e-12)
      ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("interpolate_track fills between annotations and drops outside") {
  const std::vector<TimedBox> ann = {{1.0, {0, 0, 10, 10}}, {2.0, {10, 0, 10, 10}}, {3.0, {10, 10, 20, 10}}};
  const std::vector<double> times = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  const auto out = interpolate_track(ann, times);
  REQUIRE(out.size() == 7);
  CHECK_FALSE(out[0]);
  CHECK(*out[1] == ann[0].box);
  CHECK(*out[2] == BBox{5, 0, 10, 10});
  CHECK(*out[3] == ann[1].box);
  CHECK(*out[4] == BBox{10, 5, 15, 10});
  CHECK(*out[5] == ann[2].box);
  CHECK_FALSE(out[6]);
  const std::vector<TimedBox> unsorted = {ann[1], ann[0]};
  CHECK_THROWS_AS(interpolate_track(unsorted, times), ConfigError);
}

TEST_CASE("split_objects examples") {
  const Manifest paper = grid_manifest(12, 30, 0, 1, 1.0);
  const auto [train, test] = split_objects(paper, {3, 0});
  CHECK(train.objects().size() == 324);
  CHECK(test.objects().size() == 36);

  const Manifest small = grid_manifest(3, 4, 1, 2, 1.0);
  const auto [tr1, te1] = split_objects(small, {3, 5});
  for (int c = 0; c < 3; ++c) CHECK(tr1.objects_of_class(c).size() == 1);
  CHECK_THROWS_AS(split_objects(small, {4, 5}), ConfigError);
  CHECK_THROWS_AS(split_objects(small, {0, 5}), ConfigError);

  const auto again = split_objects(small, {3, 5});
  CHECK(again.first == tr1);
  CHECK(again.second == te1);
}

TEST_CASE("split sides never share an object") {
  const Manifest m = grid_manifest(5, 8, 1, 2, 1.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [train, test] = split_objects(m, {3, seed});
    std::set<ObjectKey> a;
    for (const auto& k : train.objects()) a.insert(k);
    for (const auto& k : test.objects()) CHECK(a.count(k) == 0);
    CHECK(train.size() + test.size() == m.size());
    for (int c = 0; c < 5; ++c) CHECK(test.objects_of_class(c).size() == 3);
  }
}

TEST_CASE("sample_eval_subset examples") {
  const Manifest m = grid_manifest(4, 3, 5, 70, 1.0);
  REQUIRE(m.size() == 5040);
  CHECK(sample_eval_subset(m, 1.0, 3) == m);
  const Manifest s = sample_eval_subset(m, 0.1, 3);
  CHECK(s.size() == 504);
  CHECK(sample_eval_subset(m, 0.1, 3) == s);
  std::set<std::string> seen;
  for (const auto& r : s.records()) CHECK(seen.insert(r.image).second);
  CHECK_THROWS_AS(sample_eval_subset(m, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(sample_eval_subset(m, 1.5, 1), ConfigError);
}

TEST_CASE("image formats round trip") {
  TempDir dir("images");
  Image img(3, 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 256) / 255.0f;
  write_ppm(img, dir.path() / "a.ppm");
  CHECK(read_ppm(dir.path() / "a.ppm") == img);
  CHECK(read_image(dir.path() / "a.ppm") == img);

  Image odd(2, 2, 0.3f);
  write_tensor_image(odd, dir.path() / "b.mvim");
  CHECK(read_image(dir.path() / "b.mvim") == odd);
  write_tensor_image(odd, dir.path() / "c.mvim", TensorDtype::f64);
  CHECK(read_tensor_image(dir.path() / "c.mvim") == odd);

  std::ifstream f(dir.path() / "b.mvim", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), {});
  CHECK(bytes.size() == 16 + 12 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MVIM");

  write_text(dir.path() / "junk.bin", "hello world");
  CHECK_THROWS_AS(read_image(dir.path() / "junk.bin"), ParseError);
  write_text(dir.path() / "short.ppm", "P6\n4 4\n255\nabc");
  CHECK_THROWS_AS(read_ppm(dir.path() / "short.ppm"), ParseError);
}

TEST_CASE("ppm quantization rounds half up") {
  TempDir dir("quant");
  Image img(1, 2);
  img.at(0, 0, 0) = 0.5f / 255.0f;
  img.at(0, 0, 1) = 0.49f / 255.0f;
  write_ppm(img, dir.path() / "q.ppm");
  const Image back = read_ppm(dir.path() / "q.ppm");
  CHECK(back.at(0, 0, 0) == 1.0f / 255.0f);
  CHECK(back.at(0, 0, 1) == 0.0f);
}

TEST_CASE("extract_region clips to the image") {
  Image img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(0, y, x) = static_cast<float>(y * 4 + x);
  const Image r = extract_region(img, {1, 2, 2, 2});
  REQUIRE(r.height == 2);
  REQUIRE(r.width == 2);
  CHECK(r.at(0, 0, 0) == 9.0f);
  CHECK(r.at(0, 1, 1) == 14.0f);
  const Image c = extract_region(img, {3, 3, 5, 5});
  CHECK(c.height == 1);
  CHECK(c.width == 1);
}
