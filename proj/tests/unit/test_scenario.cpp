#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "gra/scenario.hpp"

using namespace gra;

namespace {

ScenarioConfig small(std::size_t n) {
  ScenarioConfig c;
  c.device_count = n;
  return c;
}

}  // namespace

TEST_CASE("build_scenario places every device inside the square") {
  Rng rng(7);
  const auto devices = build_scenario(small(4), rng);
  REQUIRE(devices.size() == 4);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    CHECK(devices[i].id == i);
    CHECK(devices[i].access_class >= 0);
    CHECK(devices[i].access_class <= 15);
    CHECK(devices[i].position.x >= 0.0);
    CHECK(devices[i].position.x <= 200.0);
    CHECK(devices[i].position.y >= 0.0);
    CHECK(devices[i].position.y <= 200.0);
  }
}

TEST_CASE("access classes are uniform over sixteen bins") {
  Rng rng(2024);
  const auto devices = build_scenario(small(20000), rng);
  std::array<double, 16> counts{};
  for (const auto& d : devices) counts[d.access_class] += 1.0;
  const double expected = 20000.0 / 16.0;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(15);
  CHECK(boost::math::cdf(boost::math::complement(dist, stat)) > 0.001);
}

TEST_CASE("scenario is a pure function of the seed") {
  Rng a(99);
  Rng b(99);
  CHECK(build_scenario(small(500), a) == build_scenario(small(500), b));
}

TEST_CASE("ULL flag follows access classes 11 to 15") {
  CHECK_FALSE(is_ull(10));
  CHECK(is_ull(11));
  CHECK(is_ull(15));
  DeviceProfile d;
  d.access_class = 13;
  CHECK(d.ull());
}

TEST_CASE("traffic mode, access class and mobility are drawn independently") {
  Rng rng(5);
  const auto devices = build_scenario(small(20000), rng);
  auto mode_index = [](const DeviceProfile& d) {
    if (d.traffic.kind == TrafficMode::Kind::aperiodic) return 0.0;
    return d.traffic.period < 5.0 ? 1.0 : 2.0;
  };
  auto corr = [&](auto fx, auto fy) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    const double n = static_cast<double>(devices.size());
    for (const auto& d : devices) {
      const double x = fx(d);
      const double y = fy(d);
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    const double cov = sxy / n - sx * sy / (n * n);
    return cov / std::sqrt((sxx / n - sx * sx / (n * n)) * (syy / n - sy * sy / (n * n)));
  };
  auto ac = [](const DeviceProfile& d) { return static_cast<double>(d.access_class); };
  auto mob = [](const DeviceProfile& d) { return d.mobile ? 1.0 : 0.0; };
  CHECK(std::abs(corr(ac, mode_index)) < 0.05);
  CHECK(std::abs(corr(ac, mob)) < 0.05);
  CHECK(std::abs(corr(mode_index, mob)) < 0.05);
}

TEST_CASE("traffic mix and mobile fraction are honoured") {
  Rng rng(11);
  const auto devices = build_scenario(small(20000), rng);
  double aperiodic = 0, p1 = 0, p10 = 0, mobile = 0;
  for (const auto& d : devices) {
    if (d.traffic.kind == TrafficMode::Kind::aperiodic) {
      aperiodic += 1;
      CHECK(d.traffic.aperiodic_rate == doctest::Approx(0.1));
    } else if (d.traffic.period == 1.0) {
      p1 += 1;
    } else {
      CHECK(d.traffic.period == 10.0);
      p10 += 1;
    }
    CHECK(d.traffic.payload == 64);
    mobile += d.mobile ? 1 : 0;
  }
  CHECK(aperiodic / 20000 == doctest::Approx(0.5).epsilon(0.03));
  CHECK(p1 / 20000 == doctest::Approx(0.25).epsilon(0.05));
  CHECK(p10 / 20000 == doctest::Approx(0.25).epsilon(0.05));
  CHECK(mobile / 20000 == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("invalid scenario configs are rejected") {
  Rng rng(1);
  auto c = small(10);
  c.traffic_mix.aperiodic = 0.6;
  CHECK_THROWS_AS(build_scenario(c, rng), ConfigError);
  c = small(0);
  CHECK_THROWS_AS(build_scenario(c, rng), ConfigError);
  c = small(10);
  c.traffic_mix = {1.2, -0.1, -0.1};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small(10);
  c.traffic_mix = {0.5, 0.5 - 1e-12, 1e-12};
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("static devices never move") {
  Rng rng(3);
  auto devices = build_scenario(small(200), rng);
  for (auto& d : devices) d.mobile = false;
  const auto before = devices;
  Rng step(4);
  for (int i = 0; i < 20; ++i) step_mobility(devices, 1.0, 200.0, 2.0, step);
  CHECK(devices == before);
}

TEST_CASE("mobile step variance matches the configured speed variance") {
  DeviceProfile d;
  d.mobile = true;
  d.position = {1e6, 1e6};
  std::vector<DeviceProfile> one{d};
  Rng rng(17);
  double sum_sq = 0.0;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) {
    const Position before = one[0].position;
    step_mobility(one, 1.0, 2e6, 2.0, rng);
    const double dx = one[0].position.x - before.x;
    const double dy = one[0].position.y - before.y;
    sum_sq += dx * dx + dy * dy;
  }
  CHECK(sum_sq / steps == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("mobility reflects at the boundary") {
  CHECK(reflect_into(-3.0, 200.0) == doctest::Approx(3.0));
  CHECK(reflect_into(205.0, 200.0) == doctest::Approx(195.0));
  CHECK(reflect_into(-405.0, 200.0) >= 0.0);
  CHECK(reflect_into(-405.0, 200.0) <= 200.0);

  DeviceProfile d;
  d.mobile = true;
  d.position = {0.0, 0.0};
  std::vector<DeviceProfile> one{d};
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    step_mobility(one, 5.0, 10.0, 50.0, rng);
    REQUIRE(one[0].position.x >= 0.0);
    REQUIRE(one[0].position.x <= 10.0);
    REQUIRE(one[0].position.y >= 0.0);
    REQUIRE(one[0].position.y <= 10.0);
  }
}

TEST_CASE("periodic arrivals follow phase plus multiples of the period") {
  DeviceProfile d;
  d.traffic.kind = TrafficMode::Kind::periodic;
  d.traffic.period = 10.0;
  Rng rng(1);
  const auto epochs = draw_arrivals(d, 30.0, rng, 0.0);
  REQUIRE(epochs.size() == 3);
  CHECK(epochs[0] == 0.0);
  CHECK(epochs[1] == doctest::Approx(10.0));
  CHECK(epochs[2] == doctest::Approx(20.0));

  d.traffic.period = 1.0;
  for (int i = 0; i < 50; ++i) CHECK(draw_arrivals(d, 30.0, rng).size() == 30);
}

TEST_CASE("aperiodic arrivals average rate times horizon") {
  DeviceProfile d;
  d.traffic.kind = TrafficMode::Kind::aperiodic;
  d.traffic.aperiodic_rate = 0.1;
  Rng rng(12);
  double total = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto epochs = draw_arrivals(d, 30.0, rng);
    REQUIRE(std::is_sorted(epochs.begin(), epochs.end()));
    for (double t : epochs) {
      REQUIRE(t >= 0.0);
      REQUIRE(t < 30.0);
    }
    total += static_cast<double>(epochs.size());
  }
  CHECK(total / 10000 == doctest::Approx(3.0).epsilon(0.05));
}
