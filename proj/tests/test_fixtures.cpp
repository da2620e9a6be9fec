#include <gtest/gtest.h>

#include <string>

#include "gaugereader/fixtures.hpp"
#include "gaugereader/random.hpp"
#include "gaugereader/report.hpp"

namespace gauge {
namespace {

constexpr const char* kMinimal = R"({
  "schema": 1,
  "keypoints": [
    {"x": 100, "y": 300, "class": "start"},
    {"x": 90, "y": 200, "class": "intermediate"},
    {"x": 224, "y": 100, "class": "intermediate"},
    {"x": 350, "y": 200, "class": "intermediate"},
    {"x": 340, "y": 300, "class": "end"}
  ],
  "needle_points": [[224, 224], [260, 180]]
})";

Errc error_code_of(std::string_view doc, std::string* path = nullptr) {
  try {
    parse_fixture(doc);
  } catch (const Error& e) {
    if (path) *path = e.path();
    return e.code();
  }
  ADD_FAILURE() << "document was accepted";
  return Errc::Io;
}

TEST(ParseFixture, MinimalDocumentUsesDefaults) {
  const GaugeFixture f = parse_fixture(kMinimal);
  EXPECT_EQ(f.keypoints.size(), 5u);
  EXPECT_EQ(f.needle_points.size(), 2u);
  EXPECT_TRUE(f.ocr_items.empty());
  EXPECT_EQ(f.crop_size, (CropSize{448, 448}));
  EXPECT_FALSE(f.ground_truth.has_value());
  EXPECT_EQ(f.keypoints.front().cls, KeypointClass::Start);
  EXPECT_EQ(f.keypoints.back().cls, KeypointClass::End);
}

TEST(ParseFixture, OcrConfidenceDefaultsToOneAndUnknownFieldsAreIgnored) {
  const GaugeFixture f = parse_fixture(R"({"schema": 1, "keypoints": [], "needle_points": [], "extra": {"x": 1},
    "ocr": [{"box": [10, 20, 30, 12], "text": "40", "angle": 7}],
    "ground_truth": {"reading": 1.5, "range_min": 0, "range_max": 4, "unit": "bar"}})");
  ASSERT_EQ(f.ocr_items.size(), 1u);
  EXPECT_EQ(f.ocr_items[0].confidence, 1.0);
  EXPECT_EQ(f.ocr_items[0].text, "40");
  EXPECT_EQ(f.ocr_items[0].box.center(), (Point2{25, 26}));
  ASSERT_TRUE(f.ground_truth);
  EXPECT_EQ(f.ground_truth->unit, "bar");
}

TEST(ParseFixture, DuplicateStartIsSchemaErrorAtKeypoints) {
  std::string path;
  const Errc code = error_code_of(R"({"schema": 1, "needle_points": [], "keypoints": [
      {"x": 1, "y": 1, "class": "start"}, {"x": 2, "y": 2, "class": "start"}]})",
                                  &path);
  EXPECT_EQ(code, Errc::Schema);
  EXPECT_EQ(path, "keypoints");
}

TEST(ParseFixture, TypedErrors) {
  EXPECT_EQ(error_code_of("{\"schema\": 1,"), Errc::Syntax);
  EXPECT_EQ(error_code_of("not json"), Errc::Syntax);

  std::string path;
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": []})", &path), Errc::Schema);
  EXPECT_EQ(path, "needle_points");
  EXPECT_EQ(error_code_of(R"({"keypoints": [], "needle_points": []})", &path), Errc::Schema);
  EXPECT_EQ(path, "schema");
  EXPECT_EQ(error_code_of(R"({"schema": 2, "keypoints": [], "needle_points": []})"), Errc::Schema);
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [], "needle_points": [[448, 3]]})", &path), Errc::Schema);
  EXPECT_EQ(path, "needle_points[0]");
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [{"x": -1, "y": 3, "class": "end"}], "needle_points": []})",
                          &path),
            Errc::Schema);
  EXPECT_EQ(path, "keypoints[0]");
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [{"x": 1, "y": 3, "class": "middle"}], "needle_points": []})",
                          &path),
            Errc::Schema);
  EXPECT_EQ(path, "keypoints[0].class");
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [], "needle_points": [],
      "ocr": [{"box": [1, 1, 0, 5], "text": "3"}]})"),
            Errc::Schema);
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [], "needle_points": [],
      "ocr": [{"box": [1, 1, 4, 5], "text": "3", "confidence": 1.5}]})"),
            Errc::Schema);
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [], "needle_points": [],
      "ground_truth": {"reading": 1, "range_min": 2, "range_max": 2}})"),
            Errc::Schema);
  EXPECT_EQ(error_code_of(R"({"schema": 1, "keypoints": [], "needle_points": [], "crop_size": [0, 10]})"),
            Errc::Schema);
  EXPECT_EQ(error_code_of(R"([1, 2, 3])"), Errc::Schema);
}

TEST(ParseFixture, CropSizeBoundsCoordinates) {
  const GaugeFixture f =
      parse_fixture(R"({"schema": 1, "crop_size": [100, 50], "keypoints": [], "needle_points": [[99.5, 49.9]]})");
  EXPECT_EQ(f.crop_size, (CropSize{100, 50}));
  EXPECT_EQ(error_code_of(R"({"schema": 1, "crop_size": [100, 50], "keypoints": [], "needle_points": [[20, 50]]})"),
            Errc::Schema);
}

GaugeFixture random_fixture(Rng& rng) {
  GaugeFixture f;
  f.crop_size = {static_cast<int>(1 + rng.index(1000)), static_cast<int>(1 + rng.index(1000))};
  auto point = [&] {
    return Point2{rng.uniform() * f.crop_size.width, rng.uniform() * f.crop_size.height};
  };
  const std::size_t nk = rng.index(15);
  for (std::size_t i = 0; i < nk; ++i) {
    KeypointClass c = KeypointClass::Intermediate;
    if (i == 0 && rng.bernoulli(0.8)) c = KeypointClass::Start;
    if (i == 1 && rng.bernoulli(0.8)) c = KeypointClass::End;
    f.keypoints.push_back({point(), c});
  }
  const std::size_t nn = rng.index(80);
  for (std::size_t i = 0; i < nn; ++i) f.needle_points.push_back(point());
  const std::size_t no = rng.index(10);
  for (std::size_t i = 0; i < no; ++i) {
    OcrItem o;
    o.box = {point(), rng.uniform(1e-3, 50.0), rng.uniform(1e-3, 50.0)};
    static const char* texts[] = {"0", "-0.4", "160", "psi", "bar", "°C", "12 3", "\"q\"", "", "\xce\xbc"};
    o.text = texts[rng.index(10)];
    o.confidence = rng.index(4) == 0 ? 1.0 : rng.uniform();
    f.ocr_items.push_back(o);
  }
  if (rng.bernoulli(0.5)) {
    GroundTruth g;
    g.range_min = rng.uniform(-1e4, 1e4);
    g.range_max = g.range_min + rng.uniform(1e-6, 1e5);
    g.reading = rng.uniform(g.range_min, g.range_max);
    g.unit = rng.bernoulli(0.5) ? "bar" : "";
    if (rng.bernoulli(0.3)) g.scale = rng.bernoulli(0.5) ? ScaleSide::Outer : ScaleSide::Inner;
    f.ground_truth = g;
  }
  return f;
}

TEST(SerializeFixture, PropertyRoundTripIsExact) {
  Rng rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const GaugeFixture f = random_fixture(rng);
    const std::string bytes = serialize_fixture(f);
    const GaugeFixture back = parse_fixture(bytes);
    ASSERT_EQ(back, f) << bytes;
    ASSERT_EQ(serialize_fixture(back), bytes);
  }
}

GaugeReadingReport all_ok_report() {
  GaugeReadingReport r;
  r.mark_ok(Stage::Ellipse);
  r.mark_ok(Stage::Needle);
  r.mark_ok(Stage::Ocr);
  r.mark_ok(Stage::Reading);
  r.fitted_ellipse = Ellipse{{224, 224}, 120.123456789123, 100, 0.25};
  r.needle_line = Line{{224, 224}, {0, 1}};
  r.wrap_angle = kPi / 2;
  r.needle_angle = 1.0 / 3.0;
  r.needle_relative_angle = 2.0;
  r.orientation_correction = AffineTransform::identity();
  r.markers_used.push_back({ScaleSide::Outer, 1.0, 2.0, 10.0, 1.2, true, "10"});
  r.scale_fits.push_back({ScaleSide::Outer, 10.0, -10.0, 0.2, 2, 2});
  r.readings.push_back({ScaleSide::Outer, 5.0});
  r.unit = "bar";
  return r;
}

TEST(SerializeReport, AllStagesOkGivesFourOkEntries) {
  const std::string s = serialize_report(all_ok_report());
  const auto doc = json_io::parse_document(s);
  const auto& st = doc.at("stage_statuses");
  ASSERT_EQ(st.size(), 4u);
  for (const auto& [name, v] : st.items()) EXPECT_EQ(v.at("status"), "Ok") << name;
  EXPECT_EQ(doc.at("unit"), "bar");
  // 9 significant digits.
  EXPECT_NE(s.find("120.123457"), std::string::npos);
  EXPECT_EQ(s.find("120.1234568"), std::string::npos);
  EXPECT_NE(s.find("0.333333333"), std::string::npos);
}

TEST(SerializeReport, EllipseFailureHasEmptyReadings) {
  GaugeReadingReport r;
  r.mark_failed(Stage::Ellipse, FailureReason::InsufficientNotches);
  const auto doc = json_io::parse_document(serialize_report(r));
  EXPECT_EQ(doc.at("stage_statuses").at("ellipse").at("status"), "Failed");
  EXPECT_EQ(doc.at("stage_statuses").at("ellipse").at("reason"), "insufficient_notches");
  ASSERT_TRUE(doc.at("readings").is_array());
  EXPECT_TRUE(doc.at("readings").empty());
  EXPECT_TRUE(doc.at("fitted_ellipse").is_null());
}

TEST(SerializeReport, ByteIdenticalAcrossCalls) {
  const auto r = all_ok_report();
  EXPECT_EQ(serialize_report(r), serialize_report(r));
  const std::string s = serialize_report(r);
  EXPECT_LT(s.find("\"schema\""), s.find("\"stage_statuses\""));
  EXPECT_LT(s.find("\"stage_statuses\""), s.find("\"readings\""));
}

TEST(ParseFixture, PropertyMalformedInputsNeverEscapeAsUntypedErrors) {
  Rng rng(99);
  const std::string base = kMinimal;
  for (int trial = 0; trial < 3000; ++trial) {
    std::string doc = base;
    const std::size_t edits = 1 + rng.index(4);
    for (std::size_t e = 0; e < edits; ++e) {
      const std::size_t pos = rng.index(doc.size());
      switch (rng.index(3)) {
        case 0: doc.erase(pos, 1); break;
        case 1: doc.insert(pos, 1, "{}[],:\"0-e.xa"[rng.index(13)]); break;
        default: doc[pos] = static_cast<char>(32 + rng.index(95)); break;
      }
    }
    try {
      parse_fixture(doc);
    } catch (const Error& e) {
      ASSERT_TRUE(e.code() == Errc::Syntax || e.code() == Errc::Schema) << doc;
    } catch (...) {
      FAIL() << "untyped exception for: " << doc;
    }
  }
}

}  // namespace
}  // namespace gauge
