#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>

#include "mvc/errors.hpp"
#include "mvc/synthdata.hpp"
#include "support.hpp"

using namespace mvc;
using namespace mvc::synth;
using data::VideoKind;
using testing::TempDir;

namespace {

SynthConfig tiny_config() {
  SynthConfig c;
  c.num_classes = 3;
  c.objects_per_class = 2;
  c.rotation_videos = 2;
  c.fps = 1.0;
  c.duration = 4.0;
  c.image_size = 16;
  return c;
}

bool bbox_is_tight(const RenderedFrame& f, int n) {
  const auto& b = f.bbox;
  const int x0 = static_cast<int>(b.x), y0 = static_cast<int>(b.y);
  const int x1 = x0 + static_cast<int>(b.w) - 1, y1 = y0 + static_cast<int>(b.h) - 1;
  auto on = [&](int x, int y) { return f.mask[static_cast<std::size_t>(y * n + x)] != 0; };
  bool top = false, bottom = false, left = false, right = false;
  for (int x = x0; x <= x1; ++x) top |= on(x, y0), bottom |= on(x, y1);
  for (int y = y0; y <= y1; ++y) left |= on(x0, y), right |= on(x1, y);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (on(x, y) && (x < x0 || x > x1 || y < y0 || y > y1)) return false;
  return top && bottom && left && right;
}

}  // namespace

TEST_CASE("config arithmetic and validation") {
  const SynthConfig desk = SynthConfig::desk();
  CHECK(desk.num_classes == 8);
  CHECK(desk.objects_per_class == 8);
  CHECK(desk.rotation_videos == 2);
  CHECK(desk.total_videos() == 192);
  CHECK(desk.frames_per_video() == 30);
  const SynthConfig paper = SynthConfig::paper_shaped();
  CHECK(paper.total_videos() == 2520);
  CHECK(paper.angular_velocity() == doctest::Approx(36.0));

  SynthConfig bad = desk;
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = desk;
  bad.rotation_videos = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = desk;
  bad.num_classes = kMaxClasses + 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config json round trip") {
  SynthConfig c = tiny_config();
  c.seed = 99;
  c.occluder = false;
  const SynthConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.seed == 99);
  CHECK_FALSE(back.occluder);
  CHECK_THROWS_AS(config_from_json("{\"num_classes\": 4, \"colour\": 1}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{\"num_classes\": \"four\"}"), ConfigError);
  CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
}

TEST_CASE("recipes share the archetype and vary per instance") {
  const ObjectRecipe a = make_recipe(2, 0, 5), b = make_recipe(2, 1, 5), c = make_recipe(3, 0, 5);
  CHECK(a.parts.size() == b.parts.size());
  for (std::size_t i = 0; i < a.parts.size(); ++i) {
    CHECK(a.parts[i].shape == b.parts[i].shape);
    CHECK(a.parts[i].slot == b.parts[i].slot);
  }
  CHECK((a.parts[0].sx != b.parts[0].sx || a.scale != b.scale));
  CHECK(a.palette[0].r != b.palette[0].r);
  bool differs = a.parts.size() != c.parts.size();
  for (std::size_t i = 0; !differs && i < a.parts.size(); ++i) differs = a.parts[i].shape != c.parts[i].shape;
  CHECK(differs);
  const ObjectRecipe again = make_recipe(2, 0, 5);
  CHECK(again.palette[1].g == a.palette[1].g);
  CHECK(again.parts[0].cx == a.parts[0].cx);
  CHECK_THROWS_AS(make_recipe(kMaxClasses, 0, 5), IndexError);
}

TEST_CASE("archetypes render to distinct silhouettes") {
  std::vector<std::vector<std::uint8_t>> masks;
  for (int c = 0; c < kMaxClasses; ++c) {
    RenderSettings s;
    s.image_size = 32;
    masks.push_back(render_frame(make_recipe(c, 0, 1), {}, s).mask);
  }
  for (int a = 0; a < kMaxClasses; ++a)
    for (int b = a + 1; b < kMaxClasses; ++b) CHECK(masks[static_cast<std::size_t>(a)] != masks[static_cast<std::size_t>(b)]);
}

TEST_CASE("render_frame examples") {
  const ObjectRecipe r = make_recipe(4, 1, 3);
  RenderSettings s;
  s.image_size = 32;
  s.occluder_phase = 0.3;
  CHECK(render_frame(r, {0, 0, 0}, s).image == render_frame(r, {360, 0, 0}, s).image);
  CHECK(render_frame(r, {45, 30, 0}, s).image == render_frame(r, {405, 390, 0}, s).image);

  RenderSettings plain;
  plain.image_size = 32;
  RenderSettings other = plain;
  other.noise_seed = 1234;
  const auto f1 = render_frame(r, {30, 0, 0}, plain), f2 = render_frame(r, {30, 0, 0}, other);
  CHECK(f1.bbox == f2.bbox);
  CHECK_FALSE(f1.image == f2.image);
}

TEST_CASE("bounding boxes are tight and the hand hides at most 30 percent") {
  Rng rng(8);
  std::size_t out_of_range = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int c = static_cast<int>(rng.below(kMaxClasses));
    RenderSettings s;
    s.image_size = 24 + static_cast<int>(rng.below(3)) * 8;
    s.center_dx = rng.uniform(-2, 2);
    s.occluder_phase = rng.uniform();
    const View v{rng.uniform(0, 360), rng.uniform(0, 360), rng.uniform(0, 360)};
    const RenderedFrame f = render_frame(make_recipe(c, trial, 2), v, s);
    CHECK(bbox_is_tight(f, s.image_size));
    CHECK(f.occluded_fraction <= 0.30);
    CHECK(f.image.height == s.image_size);
    for (float p : f.image.data) out_of_range += !(p >= 0.0f && p <= 1.0f);
  }
  CHECK(out_of_range == 0);
}

TEST_CASE("rotation schedule") {
  CHECK(rotation_kinds(2) == std::vector<VideoKind>{VideoKind::rot_z_pos, VideoKind::rot_x_pos});
  CHECK(rotation_kinds(6).size() == 6);
  CHECK_THROWS_AS(rotation_kinds(7), ConfigError);
  const double omega = 72.0;
  for (auto kind : rotation_kinds(6)) {
    const View a = rotation_view(kind, 10, omega, 0), b = rotation_view(kind, 10, omega, 1.0 / 3.0);
    const double da = a.angle_z + a.angle_x + a.angle_y, db = b.angle_z + b.angle_x + b.angle_y;
    double step = std::fmod(db - da + 360.0, 360.0);
    if (step > 180) step = 360 - step;
    CHECK(step == doctest::Approx(omega / 3.0));
  }
  CHECK_THROWS_AS(rotation_view(VideoKind::hodgepodge, 0, 1, 0), ConfigError);
}

TEST_CASE("angular distance per gap") {
  const SynthConfig desk = SynthConfig::desk();
  CHECK(desk.angular_velocity() * desk.duration == doctest::Approx(desk.revolutions * 360));
  CHECK(gap_angle(desk, 0.67) == doctest::Approx(48.0));
  CHECK(gap_angle(desk, 0) == 0.0);
  SynthConfig paper = SynthConfig::paper_shaped();
  CHECK(gap_angle(paper, 2) == doctest::Approx(72.0));
  paper.fps = 3;
  CHECK(gap_angle(paper, 0.67) == doctest::Approx(24.0));
}

TEST_CASE("generate writes the expected structure") {
  TempDir dir("gen");
  const SynthConfig c = tiny_config();
  const data::Manifest m = generate(c, dir.path());
  CHECK(m.video_ids().size() == static_cast<std::size_t>(c.total_videos()));
  CHECK(m.size() == static_cast<std::size_t>(c.total_videos() * c.frames_per_video()));
  CHECK(m.class_ids().size() == 3);
  for (int v : m.video_ids()) CHECK(m.video_frames(v).size() == 4);
  std::size_t hodge = 0;
  for (const auto& r : m.records()) hodge += r.kind == VideoKind::hodgepodge;
  CHECK(hodge == 3 * 2 * 4);

  const data::Manifest loaded = data::load_manifest(dir.path() / "manifest.jsonl");
  CHECK(loaded == m);
  std::ifstream cfg(dir.path() / "synth_config.json");
  std::string text((std::istreambuf_iterator<char>(cfg)), {});
  CHECK(config_to_json(config_from_json(text)) == config_to_json(c));
}

TEST_CASE("rotation videos start at distinct phases") {
  TempDir dir("phase");
  SynthConfig c = tiny_config();
  c.occluder = false;
  const data::Manifest m = generate(c, dir.path());
  // first frames of the two rotation videos of one object differ
  const auto& v0 = m.video_frames(0);
  const auto& v1 = m.video_frames(1);
  CHECK_FALSE(data::read_image(m.image_path(v0[0])) == data::read_image(m.image_path(v1[0])));
}

TEST_CASE("generation is deterministic in config and seed") {
  TempDir a("det_a"), b("det_b"), d("det_c");
  SynthConfig c = tiny_config();
  c.num_classes = 2;
  const auto ma = generate(c, a.path()), mb = generate(c, b.path());
  CHECK(ma == mb);
  for (std::size_t i = 0; i < ma.size(); ++i)
    CHECK(data::read_image(ma.image_path(i)) == data::read_image(mb.image_path(i)));
  c.seed = 2;
  const auto md = generate(c, d.path());
  bool any_diff = false;
  for (std::size_t i = 0; i < ma.size() && !any_diff; ++i)
    any_diff = !(data::read_image(ma.image_path(i)) == data::read_image(md.image_path(i)));
  CHECK(any_diff);
}

TEST_CASE("transfer sets keep classes and use fresh objects") {
  TempDir src("src"), dst("dst");
  const SynthConfig c = tiny_config();
  const auto ms = generate(c, src.path());
  const auto src_objects = ms.objects();
  const std::set<data::ObjectKey> seen(src_objects.begin(), src_objects.end());
  for (auto style : {TransferStyle::recolor, TransferStyle::background, TransferStyle::blur}) {
    TempDir out("style");
    const auto mt = generate_transfer(c, {style, 1.0}, out.path());
    CHECK(mt.class_ids() == ms.class_ids());
    CHECK(mt.objects().size() == src_objects.size());
    for (const auto& k : mt.objects()) CHECK(seen.count(k) == 0);
  }
  CHECK(parse_transfer_style("blur") == TransferStyle::blur);
  CHECK_THROWS_AS(parse_transfer_style("sepia"), ConfigError);
  CHECK_THROWS_AS(generate_transfer(c, {TransferStyle::recolor, 1.5}, dst.path()), ConfigError);
}

TEST_CASE("zero-strength styles change nothing but the instances") {
  for (auto style : {TransferStyle::recolor, TransferStyle::background, TransferStyle::blur}) {
    const StyleShift none{style, 0.0};
    const ObjectRecipe a = make_recipe(1, 5, 7, &none), b = make_recipe(1, 5, 7);
    for (std::size_t s = 0; s < 3; ++s) CHECK(a.palette[s].r == b.palette[s].r);
    RenderSettings plain, styled;
    plain.image_size = styled.image_size = 24;
    styled.style = none;
    CHECK(render_frame(b, {20, 0, 0}, plain).image == render_frame(b, {20, 0, 0}, styled).image);
  }
  const StyleShift full{TransferStyle::recolor, 1.0};
  CHECK(make_recipe(1, 5, 7, &full).palette[0].r != make_recipe(1, 5, 7).palette[0].r);
}
