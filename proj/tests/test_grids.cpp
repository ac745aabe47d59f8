#include "firemu/grids.hpp"

#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace firemu;
using namespace firemu::testing;
using ::testing::HasSubstr;

namespace {

const char* kTwoByTwo =
    "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value -9999\n1 2\n3 4\n";

}  // namespace

TEST(AsciiGrid, ReadsTwoByTwo) {
  const auto dir = scratch_dir();
  const Grid2D g = read_ascii_grid(write_file(dir, "g.asc", kTwoByTwo));
  ASSERT_EQ(g.rows(), 2);
  ASSERT_EQ(g.cols(), 2);
  EXPECT_FLOAT_EQ(g.cell_size_m, 30.0f);
  EXPECT_EQ(g.values(0, 0), 1.0f);
  EXPECT_EQ(g.values(0, 1), 2.0f);
  EXPECT_EQ(g.values(1, 0), 3.0f);
  EXPECT_EQ(g.values(1, 1), 4.0f);
}

TEST(AsciiGrid, HeaderKeysAreCaseInsensitive) {
  const auto dir = scratch_dir();
  const Grid2D g = read_ascii_grid(
      write_file(dir, "g.asc", "NCOLS 1\nNRows 1\nCELLSIZE 10\nnodata_value -1\n-1\n"));
  EXPECT_FLOAT_EQ(g.cell_size_m, 10.0f);
  EXPECT_FLOAT_EQ(g.nodata, -1.0f);
  EXPECT_TRUE(g.is_nodata(0, 0));
}

TEST(AsciiGrid, TokenCountMismatchReportsLine) {
  const auto dir = scratch_dir();
  const auto p = write_file(dir, "g.asc", "ncols 2\nnrows 2\ncellsize 30\nNODATA_value -9999\n1 2\n3\n");
  const auto msg = error_of([&] { read_ascii_grid(p); });
  EXPECT_THAT(msg, HasSubstr("token count mismatch"));
  EXPECT_THAT(msg, HasSubstr(":6:"));
}

TEST(AsciiGrid, NonNumericTokenReportsLine) {
  const auto dir = scratch_dir();
  const auto p = write_file(dir, "g.asc", "ncols 2\nnrows 1\ncellsize 30\nNODATA_value -9999\n1 x\n");
  const auto msg = error_of([&] { read_ascii_grid(p); });
  EXPECT_THAT(msg, HasSubstr("non-numeric token"));
  EXPECT_THAT(msg, HasSubstr(":5:"));
}

TEST(AsciiGrid, MissingHeaderKeyIsMalformed) {
  const auto dir = scratch_dir();
  const auto p = write_file(dir, "g.asc", "ncols 2\ncellsize 30\nNODATA_value -9999\n1 2\n");
  EXPECT_THAT(error_of([&] { read_ascii_grid(p); }), HasSubstr("malformed header"));
}

TEST(AsciiGrid, ZeroCellWritesSingleToken) {
  const auto dir = scratch_dir();
  write_ascii_grid(Grid2D(1, 1, 0.0f), dir / "z.asc");
  const auto text = read_text_file(dir / "z.asc");
  const auto last = text.substr(text.rfind('\n', text.size() - 2) + 1);
  EXPECT_EQ(last, "0\n");
}

TEST(AsciiGrid, NodataTokenIsDeclaredValue) {
  const auto dir = scratch_dir();
  Grid2D g(1, 2, 5.0f);
  g.values(0, 1) = g.nodata;
  write_ascii_grid(g, dir / "n.asc");
  const auto text = read_text_file(dir / "n.asc");
  EXPECT_THAT(text, HasSubstr("5 -9999\n"));
  const auto back = read_ascii_grid(dir / "n.asc");
  EXPECT_TRUE(back.is_nodata(0, 1));
  EXPECT_FALSE(back.is_nodata(0, 0));
}

TEST(AsciiGrid, RandomRoundTrip) {
  const auto dir = scratch_dir();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(-1e4f, 1e4f);
  Grid2D g(16, 16, 0.0f, 12.5f);
  for (Eigen::Index i = 0; i < g.values.size(); ++i) g.values.data()[i] = u(rng);
  g.values(3, 4) = g.nodata;
  write_ascii_grid(g, dir / "r.asc");
  const auto back = read_ascii_grid(dir / "r.asc");
  ASSERT_EQ(back.rows(), 16);
  EXPECT_FLOAT_EQ(back.cell_size_m, 12.5f);
  for (Eigen::Index i = 0; i < g.values.size(); ++i) {
    const float a = g.values.data()[i];
    const float b = back.values.data()[i];
    EXPECT_LE(std::abs(a - b), 1e-4f * std::abs(a));
  }
  EXPECT_TRUE(back.is_nodata(3, 4));
}

TEST(ArrivalGrid, UnburnedMapsToNodataAndBack) {
  const auto dir = scratch_dir();
  ArrivalGrid a{Raster::Constant(2, 3, 45.0f), 30.0f};
  a.arrival(1, 2) = kUnburned;
  write_arrival_grid(a, dir / "a.asc");
  EXPECT_THAT(read_text_file(dir / "a.asc"), HasSubstr("-9999"));
  const auto back = read_arrival_grid(dir / "a.asc");
  EXPECT_TRUE(std::isinf(back.arrival(1, 2)));
  EXPECT_EQ(back.arrival(0, 0), 45.0f);
}

TEST(LandClassGrid, RoundTrip) {
  const auto dir = scratch_dir();
  LandClassGrid lc{ClassRaster::Zero(3, 4)};
  lc.classes(1, 1) = 3;
  lc.classes(2, 3) = 2;
  write_landclass_grid(lc, 30.0f, dir / "lc.asc");
  EXPECT_TRUE((read_landclass_grid(dir / "lc.asc").classes == lc.classes).all());
}

TEST(WeatherCsv, SingleRow) {
  const auto dir = scratch_dir();
  const auto s = read_weather_csv(
      write_file(dir, "w.csv", "t_index,temperature_c,wind_speed_ms,wind_dir_deg\n0,25,10,0\n"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.records[0].temperature_c, 25.0f);
  EXPECT_EQ(s.records[0].wind_speed_ms, 10.0f);
  EXPECT_EQ(s.records[0].wind_dir_deg, 0.0f);
  EXPECT_EQ(s.interval_minutes, 30.0f);
}

TEST(WeatherCsv, GapInIndexRejected) {
  const auto dir = scratch_dir();
  const auto p = write_file(dir, "w.csv", "t_index,temperature_c,wind_speed_ms,wind_dir_deg\n0,25,10,0\n2,25,10,0\n");
  EXPECT_THAT(error_of([&] { read_weather_csv(p); }), HasSubstr("gap in t_index"));
}

TEST(WeatherCsv, FortyEightRowsSpanOneDay) {
  const auto dir = scratch_dir();
  std::string text = "t_index,temperature_c,wind_speed_ms,wind_dir_deg\n";
  for (int i = 0; i < 48; ++i) text += std::to_string(i) + ",20,3,90\n";
  const auto s = read_weather_csv(write_file(dir, "w.csv", text));
  EXPECT_EQ(s.size(), 48u);
  EXPECT_FLOAT_EQ(s.horizon_minutes(), 24.0f * 60.0f);
}

TEST(WeatherCsv, ValidationErrors) {
  const auto dir = scratch_dir();
  const auto missing = write_file(dir, "a.csv", "t_index,temperature_c,wind_speed_ms\n0,25,10\n");
  EXPECT_THAT(error_of([&] { read_weather_csv(missing); }), HasSubstr("missing column"));
  const auto negative = write_file(dir, "b.csv", "t_index,temperature_c,wind_speed_ms,wind_dir_deg\n0,25,-1,0\n");
  EXPECT_THAT(error_of([&] { read_weather_csv(negative); }), HasSubstr("negative speed"));
  const auto dir360 = write_file(dir, "c.csv", "t_index,temperature_c,wind_speed_ms,wind_dir_deg\n0,25,1,360\n");
  EXPECT_THAT(error_of([&] { read_weather_csv(dir360); }), HasSubstr("direction outside [0,360)"));
}

TEST(WeatherCsv, IntervalCommentAndColumnOrder) {
  const auto dir = scratch_dir();
  const auto s = read_weather_csv(write_file(
      dir, "w.csv", "# interval_minutes=15\nwind_dir_deg,t_index,wind_speed_ms,temperature_c\n270,0,5,30\n"));
  EXPECT_EQ(s.interval_minutes, 15.0f);
  EXPECT_EQ(s.records[0].wind_dir_deg, 270.0f);
  EXPECT_EQ(s.records[0].temperature_c, 30.0f);
}

TEST(WeatherCsv, WriteReadRoundTrip) {
  const auto dir = scratch_dir();
  WeatherSeries s;
  s.interval_minutes = 20.0f;
  s.records = {{21.5f, 3.25f, 359.5f}, {18.0f, 0.0f, 0.0f}};
  write_weather_csv(s, dir / "w.csv");
  const auto back = read_weather_csv(dir / "w.csv");
  EXPECT_EQ(back.interval_minutes, 20.0f);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.records[0].wind_dir_deg, 359.5f);
  EXPECT_EQ(back.records[1].temperature_c, 18.0f);
}

TEST(Scene, DimensionMismatchRejected) {
  Scene s{Grid2D(4, 4, 0.0f), LandClassGrid{ClassRaster::Zero(4, 5)}};
  EXPECT_THROW(s.validate(), std::invalid_argument);
}
