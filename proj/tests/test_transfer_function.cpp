#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "peakray/transfer_function.hpp"
#include "support.hpp"

using namespace peakray;

namespace {

Peak peak(double c, double w, double h, ColorRGB col = palette::kGreen, bool enabled = true) {
  return {c, w, h, col, enabled};
}

}  // namespace

TEST(PeakValue, SpotValues) {
  const Peak p = peak(0.5, 0.2, 1.0);
  EXPECT_NEAR(peak_value(p, 0.5), 1.0, 1e-12);
  EXPECT_EQ(peak_value(p, 0.71), 0.0);
  EXPECT_NEAR(peak_value(p, 0.4), 0.70710678, 1e-8);
  EXPECT_NEAR(peak_value(p, 0.4), std::sin(std::numbers::pi / 4), 1e-12);
  EXPECT_LE(std::abs(peak_value(p, 0.3)), 1e-9);
  EXPECT_LE(std::abs(peak_value(p, 0.7)), 1e-9);
}

TEST(PeakValue, DisabledFlagIgnored) {
  Peak p = peak(0.5, 0.2, 0.6);
  p.enabled = false;
  EXPECT_NEAR(peak_value(p, 0.5), 0.6, 1e-12);
}

TEST(PeakValue, MaxSlope) {
  EXPECT_NEAR(peak_max_slope(peak(0.5, 0.25, 0.5)), 0.5 * std::numbers::pi / 0.5, 1e-12);
}

TEST(PeakValidate, Ranges) {
  EXPECT_NO_THROW(validate(peak(0, 0.5, 1)));
  EXPECT_THROW(validate(peak(0.5, 0.0, 1)), TfError);
  EXPECT_THROW(validate(peak(0.5, 0.51, 1)), TfError);
  EXPECT_THROW(validate(peak(1.1, 0.1, 1)), TfError);
  EXPECT_THROW(validate(peak(0.5, 0.1, 1.2)), TfError);
  EXPECT_THROW(validate(peak(0.5, 0.1, 1, {1.5, 0, 0})), TfError);
}

TEST(TfEvaluate, EmptyAndSingle) {
  const TransferFunction empty;
  EXPECT_EQ(tf_evaluate(empty, 0.3), (Rgba{0, 0, 0, 0}));
  // Peak height 0.8 at its center.
  const TransferFunction one({peak(0.4, 0.1, 0.8)}, 0);
  const Rgba r = tf_evaluate(one, 0.4);
  EXPECT_NEAR(r.a, 0.8, 1e-12);
  EXPECT_NEAR(r.g, 1.0, 1e-12);
  EXPECT_NEAR(r.r, 0.0, 1e-12);
}

TEST(TfEvaluate, RedThenBlue) {
  const TransferFunction tf({peak(0.5, 0.2, 0.5, palette::kRed), peak(0.5, 0.2, 0.5, palette::kBlue)}, std::nullopt);
  const Rgba r = tf_evaluate(tf, 0.5);
  // Over operator by hand: C = 0.5 blue + 0.5 * 0.5 red, A = 0.75.
  EXPECT_NEAR(r.a, 0.75, 1e-12);
  EXPECT_NEAR(r.r, 0.25 / 0.75, 1e-12);
  EXPECT_NEAR(r.g, 0.0, 1e-12);
  EXPECT_NEAR(r.b, 0.5 / 0.75, 1e-12);
}

TEST(TfEvaluate, AllDisabledIsTransparent) {
  const TransferFunction tf({peak(0.5, 0.2, 1, palette::kRed, false), peak(0.4, 0.3, 1, palette::kBlue, false)}, 0);
  for (double x = 0; x <= 1.0; x += 0.01) EXPECT_EQ(tf_evaluate(tf, x), (Rgba{0, 0, 0, 0}));
}

TEST(TfEvaluate, ProductLawAndRange) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 500; ++n) {
    const TransferFunction tf = test::random_tf(rng);
    const double x = u(rng);
    double keep = 1;
    for (const auto& p : tf.peaks())
      if (p.enabled) keep *= 1 - peak_value(p, x);
    const Rgba r = tf_evaluate(tf, x);
    EXPECT_NEAR(r.a, 1 - keep, 1e-9);
    EXPECT_GE(r.a, 0.0);
    EXPECT_LE(r.a, 1.0);
  }
}

TEST(Lut, EmptyAndBinCenters) {
  const LookupTable empty = build_lut({});
  for (const auto& e : empty.entries) EXPECT_EQ(e, (Rgba{0, 0, 0, 0}));

  const TransferFunction tf({peak(0.5, 0.2, 1.0)}, 0);
  const LookupTable lut = build_lut(tf);
  EXPECT_EQ(LookupTable::bin_center(128), 0.501953125);
  const double oracle = std::sin(std::numbers::pi / (2 * 0.2) * (0.501953125 - 0.5 + 0.2));
  EXPECT_NEAR(lut.entries[128].a, oracle, 1e-12);
  for (int k = 0; k < 256; ++k) EXPECT_EQ(lut.entries[k], tf_evaluate(tf, LookupTable::bin_center(k)));
}

TEST(Lut, NearestBin) {
  EXPECT_EQ(LookupTable::bin_of(0.0), 0);
  EXPECT_EQ(LookupTable::bin_of(1.0), 255);
  EXPECT_EQ(LookupTable::bin_of(0.5), 128);
  EXPECT_EQ(LookupTable::bin_of(0.4999), 127);
}

TEST(Editing, AddDeleteSelect) {
  TransferFunction tf;
  tf.add_peak(palette::kGreen);
  EXPECT_EQ(tf.size(), 1u);
  EXPECT_EQ(tf.selected(), 0u);
  EXPECT_EQ(tf.peaks()[0], (Peak{0.5, 0.1, 0.8, palette::kGreen, true}));
  tf.add_peak(palette::kBlue);
  tf.add_peak(palette::kRed);
  EXPECT_EQ(tf.selected(), 2u);
  EXPECT_EQ(tf.peaks()[2].color, palette::kRed);

  tf.select_next();
  EXPECT_EQ(tf.selected(), 0u);
  tf.select_next();
  EXPECT_EQ(tf.selected(), 1u);
  tf.delete_selected();
  EXPECT_EQ(tf.size(), 2u);
  EXPECT_EQ(tf.selected(), 0u);
  tf.delete_selected();
  EXPECT_EQ(tf.selected(), 0u);
  tf.delete_selected();
  EXPECT_TRUE(tf.empty());
  EXPECT_FALSE(tf.selected());
  EXPECT_THROW(tf.delete_selected(), TfError);
  EXPECT_THROW(tf.select_next(), TfError);
}

TEST(Editing, SingletonSelectNext) {
  TransferFunction tf({peak(0.5, 0.1, 0.5)}, 0);
  tf.select_next();
  EXPECT_EQ(tf.selected(), 0u);
}

TEST(Editing, Capacity) {
  TransferFunction tf;
  for (int i = 0; i < 8; ++i) tf.add_peak(palette::kColors[i]);
  try {
    tf.add_peak(palette::kGreen);
    FAIL();
  } catch (const TfError& e) {
    EXPECT_EQ(e.kind(), TfError::Kind::Capacity);
  }
  EXPECT_EQ(tf.size(), 8u);
}

TEST(Editing, ToggleAndCycleColor) {
  TransferFunction tf({peak(0.5, 0.1, 0.5, palette::kGreen)}, 0);
  tf.toggle_selected_enabled();
  EXPECT_FALSE(tf.peaks()[0].enabled);
  tf.toggle_selected_enabled();
  EXPECT_TRUE(tf.peaks()[0].enabled);
  for (std::size_t i = 1; i <= 8; ++i) {
    tf.cycle_selected_color();
    EXPECT_EQ(tf.peaks()[0].color, palette::kColors[i % 8]);
  }
  TransferFunction none({peak(0.5, 0.1, 0.5)}, std::nullopt);
  EXPECT_THROW(none.toggle_selected_enabled(), TfError);
  EXPECT_THROW(none.cycle_selected_color(), TfError);
}

TEST(Editing, ClampKeepsInvariants) {
  const Peak p = clamp_peak(peak(1.3, -0.2, 1.7));
  EXPECT_EQ(p.center, 1.0);
  EXPECT_EQ(p.width, Peak::kMinEditWidth);
  EXPECT_EQ(p.height, 1.0);
  EXPECT_NO_THROW(validate(p));
}

TEST(Serialization, RoundTrip) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 200; ++n) {
    const TransferFunction tf = test::random_tf(rng);
    EXPECT_EQ(deserialize_tf(serialize_tf(tf)), tf);
  }
  const TransferFunction empty;
  EXPECT_EQ(deserialize_tf(serialize_tf(empty)), empty);
}

TEST(Serialization, Errors) {
  const auto kind_of = [](const std::string& text) {
    try {
      deserialize_tf(text);
    } catch (const TfError& e) {
      return std::optional(e.kind());
    }
    return std::optional<TfError::Kind>();
  };
  const std::string ok = R"({"center":0.5,"width":0.1,"height":0.5,"color":[0,1,0],"enabled":true})";
  EXPECT_EQ(kind_of(R"({"peaks":[{"center":0.5,"width":0,"height":0.5,"color":[0,1,0],"enabled":true}],"selected":null})"),
            TfError::Kind::Invariant);
  std::string nine = R"({"peaks":[)";
  for (int i = 0; i < 9; ++i) nine += (i ? "," : "") + ok;
  nine += R"(],"selected":0})";
  EXPECT_EQ(kind_of(nine), TfError::Kind::Capacity);
  EXPECT_EQ(kind_of("{not json"), TfError::Kind::Parse);
  EXPECT_EQ(kind_of(R"({"peaks":[{"center":0.5}],"selected":null})"), TfError::Kind::Parse);
  EXPECT_EQ(kind_of(R"({"peaks":[)" + ok + R"(],"selected":3})"), TfError::Kind::Invariant);

  try {
    deserialize_tf(R"({"peaks":[{"center":"x","width":0.1,"height":0.5,"color":[0,1,0],"enabled":true}],"selected":null})");
    FAIL();
  } catch (const TfError& e) {
    EXPECT_NE(std::string(e.what()).find("peaks[0].center"), std::string::npos) << e.what();
  }
}
