#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "fedda/data.hpp"
#include "fedda/rng.hpp"

using namespace fedda;
namespace fs = std::filesystem;

namespace {

TrafficSeries hourly_series(std::vector<double> values, int station = 0) {
  TrafficSeries s;
  s.station_id = station;
  s.step = kSecondsPerHour;
  s.values = std::move(values);
  return s;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fedda_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

}  // namespace

TEST_CASE("ingest_csv restructures complete rows") {
  TempDir dir;
  write_file(dir.path / "geometry.csv", "station_id,lon,lat\n1,9.1,45.4\n2,9.2,45.5\n");
  write_file(dir.path / "traffic.csv",
             "station_id,timestamp,sms,call,internet\n"
             "1,1383264000000,1,2,3\n"
             "1,1383267600000,4,5,6\n"
             "2,1383264000000,7,8,9\n"
             "2,1383267600000,10,11,12\n");
  auto series = ingest_csv((dir.path / "traffic.csv").string(),
                           {.geometry_path = (dir.path / "geometry.csv").string()});
  REQUIRE(series.size() == 6);  // 2 stations x 3 services
  for (const auto& s : series) {
    CHECK(s.values.size() == 2);
    CHECK(s.step == 3600);
    CHECK(s.start_time == 1383264000);
  }
  CHECK(series[0].station_id == 1);
  CHECK(series[0].service == Service::SMS);
  CHECK(series[0].values == std::vector<double>{1, 4});
  CHECK(series[4].station_id == 2);
  CHECK(series[4].service == Service::Call);
  CHECK(series[4].values == std::vector<double>{8, 11});
  CHECK(series[0].location.lon == doctest::Approx(9.1));
}

TEST_CASE("ingest_csv sums duplicate rows and zero-fills gaps") {
  TempDir dir;
  write_file(dir.path / "geometry.csv", "station_id,lon,lat\n5,0,0\n");
  // duplicate slot at T0 (1.5 + 2.5), hole at T0+1h, ISO timestamps
  write_file(dir.path / "traffic.csv",
             "station_id,timestamp,sms,call,internet\n"
             "5,2013-11-01T00:00:00,1.5,0,0\n"
             "5,2013-11-01T00:00:00,2.5,1,0\n"
             "5,2013-11-01T02:00:00,3,0,2\n");
  auto series = ingest_csv((dir.path / "traffic.csv").string(),
                           {.geometry_path = (dir.path / "geometry.csv").string(),
                            .step = 3600});
  REQUIRE(series.size() == 3);
  CHECK(series[0].values == std::vector<double>{4.0, 0.0, 3.0});
  CHECK(series[1].values == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(series[2].values == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("ingest_csv dense index matches a brute-force oracle") {
  // random sparse rows; oracle builds the dense series by scanning all slots
  std::mt19937_64 gen(99);
  TempDir dir;
  write_file(dir.path / "geometry.csv", "station_id,lon,lat\n7,1,2\n");
  std::map<int, double> slots;
  std::string csv = "station_id,timestamp,sms,call,internet\n";
  constexpr std::int64_t t0 = 1383264000;
  for (int i = 0; i < 40; ++i) {
    int slot = static_cast<int>(gen() % 50);
    double v = static_cast<double>(gen() % 100) / 10.0;
    slots[slot] += v;
    csv += "7," + std::to_string((t0 + slot * 3600) * 1000) + "," + std::to_string(v) + ",0,0\n";
  }
  write_file(dir.path / "traffic.csv", csv);
  auto series = ingest_csv((dir.path / "traffic.csv").string(),
                           {.geometry_path = (dir.path / "geometry.csv").string(),
                            .step = 3600});
  int lo = slots.begin()->first;
  int hi = slots.rbegin()->first;
  REQUIRE(series[0].values.size() == static_cast<std::size_t>(hi - lo + 1));
  for (int slot = lo; slot <= hi; ++slot) {
    double expect = slots.count(slot) ? slots[slot] : 0.0;
    CHECK(series[0].values[slot - lo] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("ingest_csv error paths") {
  TempDir dir;
  write_file(dir.path / "geometry.csv", "station_id,lon,lat\n1,0,0\n");
  write_file(dir.path / "bad.csv",
             "station_id,timestamp,sms,call,internet\n"
             "1,1383264000000,1,2,3\n"
             "1,not-a-time,1,2\n");
  CHECK_THROWS_WITH_AS(ingest_csv((dir.path / "bad.csv").string(),
                                  {.geometry_path = (dir.path / "geometry.csv").string()}),
                       doctest::Contains(":3:"), std::runtime_error);

  write_file(dir.path / "orphan.csv",
             "station_id,timestamp,sms,call,internet\n9,1383264000000,1,2,3\n");
  CHECK_THROWS_WITH_AS(ingest_csv((dir.path / "orphan.csv").string(),
                                  {.geometry_path = (dir.path / "geometry.csv").string()}),
                       doctest::Contains("station 9"), std::runtime_error);
}

TEST_CASE("resample_hourly") {
  TrafficSeries s;
  s.step = 600;  // 10 minutes
  s.values = {1, 1, 1, 1, 1, 1};
  auto hourly = resample_hourly(s);
  CHECK(hourly.step == 3600);
  CHECK(hourly.values == std::vector<double>{6});

  auto identity = resample_hourly(hourly_series({3, 4, 5}));
  CHECK(identity.values == std::vector<double>{3, 4, 5});

  // loop oracle on 12 random 10-minute slots
  std::mt19937_64 gen(3);
  TrafficSeries r;
  r.step = 600;
  for (int i = 0; i < 12; ++i) r.values.push_back(uniform_in(gen, 0.0, 5.0));
  auto out = resample_hourly(r);
  REQUIRE(out.values.size() == 2);
  for (int h = 0; h < 2; ++h) {
    double sum = 0.0;
    for (int j = 0; j < 6; ++j) sum += r.values[h * 6 + j];
    CHECK(out.values[h] == doctest::Approx(sum).epsilon(1e-12));
  }

  TrafficSeries bad;
  bad.step = 7 * 60;
  bad.values = {1};
  CHECK_THROWS_AS(resample_hourly(bad), std::invalid_argument);
}

TEST_CASE("resample_hourly conserves total volume") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    TrafficSeries s;
    s.step = 600;
    std::size_t n = 1 + gen() % 100;
    for (std::size_t i = 0; i < n; ++i) s.values.push_back(uniform_in(gen, 0.0, 10.0));
    auto out = resample_hourly(s);
    double in_sum = 0.0, out_sum = 0.0;
    for (double v : s.values) in_sum += v;
    for (double v : out.values) out_sum += v;
    CHECK(out_sum == doctest::Approx(in_sum).epsilon(1e-9));
  }
}

TEST_CASE("standardize") {
  auto constant = standardize(std::vector<double>{2, 2, 2});
  CHECK(constant.values == std::vector<double>{0, 0, 0});
  CHECK(constant.mean == 2.0);
  CHECK(constant.std_dev == 0.0);

  auto sym = standardize(std::vector<double>{-1, 1});
  CHECK(sym.values[0] == doctest::Approx(-1.0));
  CHECK(sym.values[1] == doctest::Approx(1.0));
  CHECK(sym.mean == 0.0);
  CHECK(sym.std_dev == 1.0);

  std::mt19937_64 gen(7);
  std::vector<double> random(200);
  for (double& v : random) v = uniform_in(gen, -5.0, 20.0);
  auto z = standardize(random);
  double mean = 0.0;
  for (double v : z.values) mean += v;
  mean /= static_cast<double>(z.values.size());
  double var = 0.0;
  for (double v : z.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.values.size());
  CHECK(std::abs(mean) < 1e-9);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("make_windows matches the enumeration oracle") {
  SUBCASE("documented first sample") {
    std::vector<double> v(30);
    for (int i = 0; i < 30; ++i) v[i] = i + 1;
    auto set = make_windows(hourly_series(v), {.p = 3, .q = 2, .period = 7});
    REQUIRE(set.size() == 30 - 14);
    CHECK(set.index_map[0] == 15);
    CHECK(std::vector<double>(set.row(0).begin(), set.row(0).end()) ==
          std::vector<double>{14, 13, 12, 8, 1});
    CHECK(set.targets[0] == 15);
  }
  SUBCASE("smallest case") {
    auto set = make_windows(hourly_series({5, 7}), {.p = 1, .q = 0, .period = 1});
    REQUIRE(set.size() == 1);
    CHECK(set.row(0)[0] == 5);
    CHECK(set.targets[0] == 7);
  }
  SUBCASE("random configurations against the index-enumeration oracle") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
      WindowSpec spec;
      spec.p = 1 + static_cast<int>(gen() % 5);
      spec.q = static_cast<int>(gen() % 4);
      spec.period = 1 + static_cast<int>(gen() % 25);
      int hist = std::max(spec.p, spec.period * spec.q);
      std::size_t z = hist + 1 + gen() % 40;
      std::vector<double> values(z);
      for (double& v : values) v = uniform_in(gen, 0.0, 9.0);

      auto set = make_windows(hourly_series(values), spec);
      // counting oracle
      REQUIRE(set.size() == z - static_cast<std::size_t>(hist));
      // enumeration oracle: every valid 1-based target index in order
      std::size_t i = 0;
      for (std::size_t t = hist + 1; t <= z; ++t, ++i) {
        CHECK(set.index_map[i] == t);
        CHECK(set.targets[i] == values[t - 1]);
        auto row = set.row(i);
        std::size_t col = 0;
        for (int j = 1; j <= spec.p; ++j) CHECK(row[col++] == values[t - 1 - j]);
        for (int j = 1; j <= spec.q; ++j)
          CHECK(row[col++] == values[t - 1 - static_cast<std::size_t>(spec.period) * j]);
      }
    }
  }
  SUBCASE("too short errors with the minimum length") {
    CHECK_THROWS_WITH_AS(make_windows(hourly_series({1, 2, 3}), {.p = 3, .q = 0, .period = 1}),
                         doctest::Contains("need length > 3"), std::invalid_argument);
  }
}

TEST_CASE("augment_weekly") {
  SUBCASE("two identical weeks reduce to the standardized pattern") {
    std::vector<double> week(168);
    std::mt19937_64 gen(13);
    for (double& v : week) v = uniform_in(gen, 0.0, 10.0);
    std::vector<double> two = week;
    two.insert(two.end(), week.begin(), week.end());
    auto aug = augment_weekly(hourly_series(two));
    auto expect = standardize(week);
    REQUIRE(aug.values.size() == 168);
    for (std::size_t i = 0; i < 168; ++i)
      CHECK(aug.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
  }
  SUBCASE("constant series maps to zeros") {
    auto aug = augment_weekly(hourly_series(std::vector<double>(168 * 2, 4.2)));
    for (double v : aug.values) CHECK(v == 0.0);
  }
  SUBCASE("per-slot average oracle with a trailing partial week") {
    std::mt19937_64 gen(17);
    std::vector<double> values(168 * 2 + 31);  // partial third week is dropped
    for (double& v : values) v = uniform_in(gen, 0.0, 3.0);
    auto aug = augment_weekly(hourly_series(values));
    std::vector<double> mean(168);
    for (int j = 0; j < 168; ++j) mean[j] = (values[j] + values[168 + j]) / 2.0;
    auto expect = standardize(mean);
    for (std::size_t i = 0; i < 168; ++i)
      CHECK(aug.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
  }
  SUBCASE("one-week series is idempotent") {
    std::mt19937_64 gen(19);
    std::vector<double> week(168);
    for (double& v : week) v = uniform_in(gen, 0.0, 10.0);
    auto aug = augment_weekly(hourly_series(week));
    auto expect = standardize(week);
    for (std::size_t i = 0; i < 168; ++i)
      CHECK(aug.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
  }
  SUBCASE("less than one week errors") {
    CHECK_THROWS_AS(augment_weekly(hourly_series(std::vector<double>(167, 1.0))),
                    std::invalid_argument);
  }
}

TEST_CASE("pearson") {
  std::mt19937_64 gen(23);
  std::vector<double> a(50), b(50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = uniform_in(gen, -1.0, 1.0);
    b[i] = uniform_in(gen, -1.0, 1.0);
  }
  CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> neg(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
  CHECK(pearson(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  // textbook-formula oracle
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= 50.0;
  mb /= 50.0;
  double num = 0, da2 = 0, db2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da2 += (a[i] - ma) * (a[i] - ma);
    db2 += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(pearson(a, b) == doctest::Approx(num / std::sqrt(da2 * db2)).epsilon(1e-12));

  CHECK(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("standardize preserves pearson correlation") {
  std::mt19937_64 gen(29);
  std::vector<double> v(100);
  for (double& x : v) x = uniform_in(gen, 2.0, 9.0);
  auto z = standardize(v);
  CHECK(pearson(z.values, v) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("generate_synthetic") {
  SUBCASE("determinism and shared archetypes") {
    SyntheticSpec spec{.stations = 4, .archetypes = 2, .weeks = 2, .noise = 0.0,
                       .scale_min = 1.0, .scale_max = 1.0, .seed = 42};
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    REQUIRE(a.series.size() == 12);
    for (std::size_t i = 0; i < a.series.size(); ++i)
      CHECK(a.series[i].values == b.series[i].values);

    // stations 0 and 1 share archetype 0 and, with a fixed scale, the series
    CHECK(a.archetype_labels[0] == a.archetype_labels[1]);
    CHECK(a.series[0].values == a.series[3].values);
  }
  SUBCASE("noise-free augmentation matches the archetype pattern") {
    SyntheticSpec spec{.stations = 6, .archetypes = 3, .weeks = 3, .noise = 0.0,
                       .scale_min = 0.5, .scale_max = 1.5, .seed = 7};
    auto data = generate_synthetic(spec);
    for (int k = 0; k < spec.stations; ++k) {
      const TrafficSeries& s = data.series[3 * k];  // SMS
      auto aug = augment_weekly(s);
      double r = pearson(aug.values, data.patterns[data.archetype_labels[k]]);
      CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("stations of one archetype form a compact geographic blob") {
    SyntheticSpec spec{.stations = 8, .archetypes = 2, .weeks = 1, .noise = 0.1,
                       .scale_min = 0.5, .scale_max = 1.5, .seed = 3};
    auto data = generate_synthetic(spec);
    for (int i = 0; i < spec.stations; ++i)
      for (int j = 0; j < i; ++j) {
        const auto& a = data.series[3 * i].location;
        const auto& b = data.series[3 * j].location;
        double d = std::hypot(a.lon - b.lon, a.lat - b.lat);
        if (data.archetype_labels[i] == data.archetype_labels[j])
          CHECK(d < 0.3);
        else
          CHECK(d > 0.5);
      }
  }
  SUBCASE("invalid specs error") {
    CHECK_THROWS_AS(generate_synthetic({.stations = 2, .archetypes = 3}), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic({.stations = 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic({.noise = -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic({.scale_min = 0.0}), std::invalid_argument);
  }
}
