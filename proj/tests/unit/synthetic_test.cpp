#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stormflow;
using namespace testing_support;
using namespace std::chrono_literals;

namespace {

synthetic::AnalyticField single(synthetic::Component c, std::size_t w = 64, std::size_t h = 48) {
  return {{c}, synthetic::conus_domain(w, h)};
}

}  // namespace

TEST(SampleField, Translation) {
  const auto f = synthetic::sample_field(single(synthetic::Translation{3.0, 1.0}));
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    ASSERT_EQ(f.u[i], 3.0);
    ASSERT_EQ(f.v[i], 1.0);
    ASSERT_EQ(f.mask[i], 1);
  }
}

TEST(SampleField, RankineProfile) {
  const synthetic::Rankine r{{32.0, 24.0}, 10.0, 0.1};
  const auto a = single(r);
  const auto f = synthetic::sample_field(a);
  EXPECT_EQ(f.u(32, 24), 0.0);
  EXPECT_EQ(f.v(32, 24), 0.0);
  EXPECT_NEAR(std::hypot(f.u(42, 24), f.v(42, 24)), 1.0, 1e-12);
  EXPECT_NEAR(std::hypot(f.u(32, 14), f.v(32, 14)), 1.0, 1e-12);
  // Solid body inside, 1/r outside.
  const auto [u5, v5] = a.velocity(37.0, 24.0);
  EXPECT_NEAR(std::hypot(u5, v5), 0.5, 1e-12);
  const auto [u20, v20] = a.velocity(52.0, 24.0);
  EXPECT_NEAR(std::hypot(u20, v20), 0.5, 1e-12);
  // Positive omega turns clockwise as displayed, with y pointing down.
  EXPECT_GT(v5, 0.0);
}

TEST(SampleField, CompositeIsSum) {
  const auto dom = synthetic::conus_domain(40, 30);
  const synthetic::AnalyticField sum{{synthetic::Translation{1.0, -2.0}, synthetic::Shear{0.1, 5.0},
                                      synthetic::Radial{{20.0, 15.0}, 0.05}},
                                     dom};
  const auto f = synthetic::sample_field(sum);
  for (std::size_t y = 0; y < 30; ++y) {
    for (std::size_t x = 0; x < 40; ++x) {
      EXPECT_NEAR(f.u(x, y), 1.0 + 0.1 * (y - 5.0) + 0.05 * (x - 20.0), 1e-12);
      EXPECT_NEAR(f.v(x, y), -2.0 + 0.05 * (y - 15.0), 1e-12);
    }
  }
}

TEST(SampleField, TimestampsAndDomain) {
  const auto dom = synthetic::conus_domain(16, 8);
  EXPECT_EQ(dom.lon_origin, -124.0);
  EXPECT_EQ(dom.lat_origin, 52.0);
  EXPECT_EQ(dom.dlon, 0.04);
  EXPECT_EQ(dom.dlat, -0.04);
  const auto f = synthetic::sample_field(single(synthetic::Translation{0, 0}, 16, 8), at("2008-06-01T12:00:00Z"),
                                         at("2008-06-01T12:30:00Z"));
  EXPECT_EQ(f.transform, dom);
  EXPECT_EQ(f.t_next - f.t_prev, 30min);
}

TEST(RenderPair, ZeroCarrierGivesIdenticalFrames) {
  const auto p = synthetic::render_pair(3, single(synthetic::Translation{0.0, 0.0}));
  EXPECT_EQ(p.prev.pixels, p.next.pixels);
  EXPECT_EQ(p.next.timestamp - p.prev.timestamp, 30min);
}

TEST(RenderPair, IntegerTranslationIsExactShift) {
  const auto p = synthetic::render_pair(4, single(synthetic::Translation{3.0, 1.0}));
  const std::size_t w = p.prev.pixels.width(), h = p.prev.pixels.height();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      ASSERT_EQ(p.next.pixels(x, y), p.prev.pixels((x + w - 3) % w, (y + h - 1) % h)) << x << "," << y;
    }
  }
  EXPECT_EQ(p.truth.u(5, 5), 3.0);
  EXPECT_EQ(p.truth.v(5, 5), 1.0);
}

TEST(RenderPair, DeterministicBySeed) {
  const auto carrier = single(synthetic::Rankine{{32.0, 24.0}, 8.0, 0.2});
  const auto a = synthetic::render_pair(5, carrier);
  const auto b = synthetic::render_pair(5, carrier);
  EXPECT_EQ(a.prev.pixels, b.prev.pixels);
  EXPECT_EQ(a.next.pixels, b.next.pixels);
  EXPECT_NE(a.prev.pixels, synthetic::render_pair(6, carrier).prev.pixels);
}

TEST(Texture, RangeAndDeterminism) {
  const auto t = synthetic::band_limited_texture(7, 64, 32);
  EXPECT_EQ(t, synthetic::band_limited_texture(7, 64, 32));
  double lo = 1.0, hi = 0.0;
  for (double v : t.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
  EXPECT_GT(hi - lo, 0.3);
}

TEST(RandomSmoothField, DeterministicAndBounded) {
  const auto dom = synthetic::conus_domain(48, 40);
  const auto a = synthetic::random_smooth_field(9, dom);
  EXPECT_EQ(a.u, synthetic::random_smooth_field(9, dom).u);
  EXPECT_NE(a.u, synthetic::random_smooth_field(10, dom).u);
  EXPECT_GT(max_abs_flow(a), 0.0);
  EXPECT_TRUE(std::isfinite(max_abs_flow(a)));
}

TEST(RenderSequence, ChannelsAndTimestamps) {
  const auto carrier = single(synthetic::Translation{1.0, 0.0});
  const TimePoint t0 = at("2008-06-01T12:00:00Z");
  const auto seq = synthetic::render_sequence(11, carrier, 4, t0);
  ASSERT_EQ(seq.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(seq[k].ch3.channel, Channel::Ch3);
    EXPECT_EQ(seq[k].ch4.channel, Channel::Ch4);
    EXPECT_EQ(seq[k].timestamp(), t0 + 30min * static_cast<int>(k));
    EXPECT_EQ(seq[k].ch3.timestamp, seq[k].ch4.timestamp);
  }
  EXPECT_NE(seq[0].ch3.pixels, seq[0].ch4.pixels);
  const std::size_t w = seq[0].ch4.pixels.width();
  EXPECT_EQ(seq[1].ch4.pixels(10, 10), seq[0].ch4.pixels((10 + w - 1) % w, 10));
  EXPECT_NO_THROW(FrameSequence(seq, 30min));
}
