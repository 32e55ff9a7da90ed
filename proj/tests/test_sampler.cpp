#include "doctest.h"

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "mvc/errors.hpp"
#include "mvc/sampler.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mvc;
using namespace mvc::sampler;
using data::Manifest;
using testing::grid_manifest;

namespace {

PairingPolicy transform(GapSpec g, bool rotation_only = false) { return {Setting::transform, g, rotation_only}; }

std::size_t find_frame(const Manifest& m, int video, double t) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].video_id == video && m[i].t == t) return i;
  FAIL("frame not found");
  return 0;
}

}  // namespace

TEST_CASE("gap spec basics") {
  CHECK(GapSpec::fixed(2, 1).frame_offset() == 2);
  CHECK(GapSpec::fixed(0.67, 3).frame_offset() == 2);
  CHECK(GapSpec::range(0, 3).is_zero());
  CHECK(GapSpec::any(3).unbounded());
  CHECK_FALSE(GapSpec::any(3).is_zero());
  CHECK_THROWS_AS(GapSpec::fixed(0.5, 1).validate(), ConfigError);
  CHECK_THROWS_AS(GapSpec::fixed(-1, 1).validate(), ConfigError);
  CHECK_THROWS_AS(GapSpec::fixed(std::numeric_limits<double>::infinity(), 1).validate(), ConfigError);
  CHECK_THROWS_AS((PairingPolicy{Setting::transform, std::nullopt, false}.validate()), ConfigError);
  CHECK(parse_gap_mode(to_string(GapSpec::Mode::fixed)) == GapSpec::Mode::fixed);
  for (auto s : {Setting::self, Setting::transform, Setting::object, Setting::class_level})
    CHECK(parse_setting(to_string(s)) == s);
  CHECK_THROWS_AS(parse_setting("instance"), ConfigError);
}

TEST_CASE("gap grids") {
  const auto g1 = gap_grid(1);
  CHECK(g1 == std::vector<double>{0, 2, 4, 6, 8, 10});
  const auto g3 = gap_grid(3);
  CHECK(g3 == std::vector<double>{0, 0.67, 1.33, 2, 2.67, 3.33});
  for (double fps : {1.0, 3.0})
    for (std::size_t k = 0; k < 6; ++k) {
      const double g = gap_grid(fps)[k];
      CHECK(GapSpec::fixed(g, fps).frame_offset() == static_cast<long>(2 * k));
      CHECK_NOTHROW(GapSpec::fixed(g, fps).validate());
    }
  CHECK_THROWS_AS(gap_grid(2), ConfigError);
}

TEST_CASE("self and gap zero pair the anchor with itself") {
  const Manifest m = grid_manifest(2, 2, 2, 6, 1.0);
  Rng rng(1);
  for (std::size_t a = 0; a < m.size(); a += 5) {
    CHECK(sample_partner(a, m, {Setting::self, std::nullopt, false}, rng) == a);
    CHECK(sample_partner(a, m, transform(GapSpec::fixed(0, 1)), rng) == a);
    CHECK(sample_partner(a, m, transform(GapSpec::range(0, 1)), rng) == a);
  }
}

TEST_CASE("fixed gap partner is uniform over both directions") {
  const Manifest m = grid_manifest(1, 1, 1, 20, 1.0);
  const std::size_t anchor = find_frame(m, 0, 5.0);
  const auto valid = valid_partners(anchor, m, transform(GapSpec::fixed(2, 1)));
  std::set<double> times;
  for (auto i : valid) times.insert(m[i].t);
  CHECK(times == std::set<double>{3.0, 7.0});

  Rng rng(42);
  std::map<std::size_t, std::size_t> counts;
  for (int i = 0; i < 10000; ++i) ++counts[*sample_partner(anchor, m, transform(GapSpec::fixed(2, 1)), rng)];
  REQUIRE(counts.size() == 2);
  std::vector<std::size_t> c;
  for (auto& [k, v] : counts) c.push_back(v);
  CHECK(testing::chi_square_uniform(c) < testing::chi_square_critical_01(1));
}

TEST_CASE("anchors without a partner signal a resample") {
  const Manifest m = grid_manifest(1, 1, 1, 5, 1.0);
  Rng rng(1);
  CHECK_FALSE(sample_partner(0, m, transform(GapSpec::fixed(6, 1)), rng));
  CHECK(sample_partner(0, m, transform(GapSpec::fixed(2, 1), true), rng).has_value());
  const std::size_t hodge = find_frame(m, 1, 0.0);
  CHECK_FALSE(sample_partner(hodge, m, transform(GapSpec::fixed(1, 1), true), rng));
  CHECK_THROWS_AS(sample_partner(m.size(), m, transform(GapSpec::fixed(1, 1)), rng), IndexError);
}

TEST_CASE("sampled pairs satisfy the constraint for every setting and gap") {
  const Manifest m = grid_manifest(3, 3, 2, 12, 3.0);
  std::vector<PairingPolicy> policies = {{Setting::self, std::nullopt, false},
                                         {Setting::object, std::nullopt, false},
                                         {Setting::class_level, std::nullopt, false},
                                         {Setting::object, std::nullopt, true},
                                         transform(GapSpec::any(3))};
  for (double g : gap_grid(3))
    for (auto mode : {GapSpec::Mode::fixed, GapSpec::Mode::range})
      for (bool rot : {false, true}) policies.push_back(transform({mode, g, 3.0}, rot));
  Rng rng(7);
  for (const auto& p : policies) {
    std::size_t violations = 0, drawn = 0;
    while (drawn < 10000) {
      const std::size_t a = static_cast<std::size_t>(rng.below(m.size()));
      const auto b = sample_partner(a, m, p, rng);
      if (!b) continue;
      ++drawn;
      if (!testing::pair_allowed(m[a], m[*b], p, m.fps())) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("valid partner sets match the restated constraint exactly") {
  const Manifest m = grid_manifest(2, 2, 1, 7, 1.0);
  for (auto p : {PairingPolicy{Setting::object, std::nullopt, false}, transform(GapSpec::range(3, 1)),
                 transform(GapSpec::fixed(2, 1), true), PairingPolicy{Setting::class_level, std::nullopt, true}}) {
    for (std::size_t a = 0; a < m.size(); ++a) {
      std::set<std::size_t> expect;
      for (std::size_t b = 0; b < m.size(); ++b)
        if (testing::pair_allowed(m[a], m[b], p, 1.0)) expect.insert(b);
      const auto got = valid_partners(a, m, p);
      CHECK(std::set<std::size_t>(got.begin(), got.end()) == expect);
    }
  }
}

TEST_CASE("range and class partners are uniform") {
  const Manifest m = grid_manifest(2, 3, 1, 10, 1.0);
  const std::size_t anchor = find_frame(m, 0, 4.0);
  for (auto p : {transform(GapSpec::range(3, 1)), PairingPolicy{Setting::class_level, std::nullopt, false}}) {
    const auto valid = valid_partners(anchor, m, p);
    std::map<std::size_t, std::size_t> counts;
    for (auto v : valid) counts[v] = 0;
    Rng rng(99);
    for (int i = 0; i < 10000; ++i) ++counts[*sample_partner(anchor, m, p, rng)];
    CHECK(counts.size() == valid.size());
    std::vector<std::size_t> c;
    for (auto& [k, v] : counts) c.push_back(v);
    CHECK(testing::chi_square_uniform(c) < testing::chi_square_critical_01(c.size() - 1));
  }
}

TEST_CASE("build_batch layout and provenance") {
  testing::TempDir dir("batch");
  const Manifest m = testing::write_grid_dataset(dir.path(), 3, 2, 2, 6, 1.0);
  FrameSource frames(m);
  const auto none = augment::AugmentConfig::none(8, 8);

  Rng rng(5);
  const PairBatch one = build_batch(frames, {Setting::self, std::nullopt, false}, 1, rng, none);
  CHECK(one.images.shape() == num::Shape{2, 3, 8, 8});
  CHECK(one.provenance[0] == one.provenance[1]);

  augment::AugmentConfig aug;
  aug.out_h = aug.out_w = 8;
  const PairBatch two = build_batch(frames, {Setting::self, std::nullopt, false}, 1, rng, aug);
  bool differ = false;
  for (std::size_t i = 0; i < 192; ++i) differ |= two.images[i] != two.images[192 + i];
  CHECK(differ);

  const PairBatch obj = build_batch(frames, {Setting::object, std::nullopt, false}, 8, rng, none);
  REQUIRE(obj.pairs() == 8);
  std::set<std::size_t> anchors;
  for (std::size_t k = 0; k < 8; ++k) {
    const auto& a = m[obj.provenance[2 * k]];
    const auto& b = m[obj.provenance[2 * k + 1]];
    CHECK(a.class_id == b.class_id);
    CHECK(a.object_id == b.object_id);
    CHECK(anchors.insert(obj.provenance[2 * k]).second);
    // pixel (0,0) carries the class and object ids
    CHECK(std::lround(obj.images[2 * k * 192] * 255) == a.class_id);
    CHECK(std::lround(obj.images[2 * k * 192 + 64] * 255) == a.object_id);
  }

  const PairBatch cls = build_batch(frames, {Setting::class_level, std::nullopt, false}, 6, rng, none);
  for (std::size_t k = 0; k < 6; ++k) CHECK(m[cls.provenance[2 * k]].class_id == m[cls.provenance[2 * k + 1]].class_id);

  CHECK_THROWS_AS(build_batch(frames, {Setting::self, std::nullopt, false}, m.size() + 1, rng, none), ConfigError);
}

TEST_CASE("rotation_only batches contain no hodgepodge frames") {
  testing::TempDir dir("rot");
  const Manifest m = testing::write_grid_dataset(dir.path(), 2, 2, 2, 9, 3.0);
  FrameSource frames(m);
  Rng rng(3);
  for (int b = 0; b < 20; ++b) {
    const PairBatch batch =
        build_batch(frames, transform(GapSpec::fixed(0.67, 3), true), 6, rng, augment::AugmentConfig::none(8, 8));
    for (auto i : batch.provenance) CHECK(data::is_rotation(m[i].kind));
  }
}

TEST_CASE("build_batch_from_anchors skips partnerless anchors") {
  testing::TempDir dir("anchors");
  const Manifest m = testing::write_grid_dataset(dir.path(), 1, 1, 1, 4, 1.0);
  FrameSource frames(m);
  Rng rng(2);
  std::vector<std::size_t> anchors(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) anchors[i] = i;
  const PairBatch b =
      build_batch_from_anchors(frames, anchors, transform(GapSpec::fixed(3, 1)), 10, rng, augment::AugmentConfig::none(8, 8));
  // only t=0 and t=3 of each video have a partner 3 s away
  CHECK(b.pairs() == 4);
  for (std::size_t k = 0; k < b.pairs(); ++k)
    CHECK(std::abs(m[b.provenance[2 * k]].t - m[b.provenance[2 * k + 1]].t) == 3.0);
}

TEST_CASE("batches are deterministic in the generator seed") {
  testing::TempDir dir("det");
  const Manifest m = testing::write_grid_dataset(dir.path(), 2, 2, 1, 6, 1.0);
  FrameSource frames(m);
  augment::AugmentConfig aug;
  aug.out_h = aug.out_w = 8;
  Rng r1(11), r2(11);
  const PairBatch a = build_batch(frames, transform(GapSpec::range(2, 1)), 5, r1, aug);
  const PairBatch b = build_batch(frames, transform(GapSpec::range(2, 1)), 5, r2, aug);
  CHECK(a.provenance == b.provenance);
  CHECK(a.images == b.images);
}
