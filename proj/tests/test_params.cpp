#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fedda/params.hpp"
#include "fedda/rng.hpp"

using namespace fedda;

namespace {

// Independent scalar-loop oracle for the squared Frobenius distance.
double distance_oracle(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return s;
}

Tensor random_tensor(std::mt19937_64& gen, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = uniform_in(gen, -2.0, 2.0);
  return t;
}

ParamMap random_map(std::mt19937_64& gen) {
  ParamMap m;
  m.emplace("dense.w", random_tensor(gen, {3, 4}));
  m.emplace("dense.b", random_tensor(gen, {4}));
  m.emplace("out.w", random_tensor(gen, {4}));
  return m;
}

ParamMap scalar_map(double v) {
  ParamMap m;
  m.emplace("w", Tensor::scalar(v));
  return m;
}

}  // namespace

TEST_CASE("layer_distance basics") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  CHECK(layer_distance(a, a) == 0.0);

  Tensor zero({2, 2}, {0, 0, 0, 0});
  CHECK(layer_distance(a, zero) == doctest::Approx(30.0).epsilon(1e-15));

  std::mt19937_64 gen(7);
  for (int i = 0; i < 20; ++i) {
    Tensor x = random_tensor(gen, {3, 3});
    Tensor y = random_tensor(gen, {3, 3});
    CHECK(layer_distance(x, y) == doctest::Approx(distance_oracle(x, y)).epsilon(1e-14));
    CHECK(layer_distance(x, y) >= 0.0);
  }

  Tensor bad({3}, {0, 0, 0});
  CHECK_THROWS_AS(layer_distance(a, bad), std::invalid_argument);
}

TEST_CASE("softmax pinned values") {
  auto u = softmax({0.0, 0.0, 0.0});
  for (double v : u) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  auto two = softmax({0.0, std::log(3.0)});
  CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(two[1] == doctest::Approx(0.75).epsilon(1e-14));

  auto three = softmax({1.0, 2.0, 3.0});
  CHECK(three[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
  CHECK(three[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
  CHECK(three[2] == doctest::Approx(0.6652409557748219).epsilon(1e-12));

  CHECK_THROWS_AS(softmax({}), std::invalid_argument);
  CHECK_THROWS_AS(softmax({1.0, std::numeric_limits<double>::infinity()}), std::invalid_argument);
  CHECK_THROWS_AS(softmax({std::nan("")}), std::invalid_argument);
}

TEST_CASE("softmax normalization under extreme magnitudes") {
  std::mt19937_64 gen(11);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + gen() % 8;
    // half the trials use extreme scores where naive exp() would overflow
    double range = trial % 2 == 0 ? 3.0 : 500.0;
    std::vector<double> scores(n);
    for (double& s : scores) s = uniform_in(gen, -range, range);
    auto p = softmax(scores);
    double sum = 0.0;
    for (double v : p) {
      // entries can underflow to exactly 0 when scores differ by ~1000
      if (!(v >= 0.0 && v <= 1.0)) ++failures;
      if (range <= 3.0 && !(v > 0.0)) ++failures;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("attention_weights") {
  SUBCASE("two identical inputs split evenly") {
    std::mt19937_64 gen(3);
    ParamMap prev = random_map(gen);
    ParamMap in = random_map(gen);
    AttentionWeights w = attention_weights({in, in}, prev, prev);
    for (const auto& [name, alpha] : w.alpha) {
      REQUIRE(alpha.size() == 2);
      CHECK(alpha[0] == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(alpha[1] == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(w.beta.at(name) == 1.0);
    }
  }
  SUBCASE("singleton softmax is 1") {
    std::mt19937_64 gen(4);
    ParamMap prev = random_map(gen);
    ParamMap in = random_map(gen);
    AttentionWeights w = attention_weights({in}, prev, prev);
    for (const auto& [name, alpha] : w.alpha) CHECK(alpha[0] == 1.0);
  }
  SUBCASE("scalar layers composing the distance and softmax oracles") {
    ParamMap prev = scalar_map(0.0);
    std::vector<ParamMap> ins = {scalar_map(1.0), scalar_map(std::sqrt(2.0)),
                                 scalar_map(std::sqrt(3.0))};
    AttentionWeights w = attention_weights(ins, prev, prev);
    const auto& alpha = w.alpha.at("w");
    CHECK(alpha[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
    CHECK(alpha[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
    CHECK(alpha[2] == doctest::Approx(0.6652409557748219).epsilon(1e-12));
  }
  SUBCASE("shape mismatch names the model") {
    ParamMap prev = scalar_map(0.0);
    ParamMap bad;
    bad.emplace("w", Tensor({2}, {0, 0}));
    CHECK_THROWS_WITH_AS(attention_weights({scalar_map(1.0), bad}, prev, prev),
                         doctest::Contains("model 1"), std::invalid_argument);
  }
}

TEST_CASE("attention weights always normalized") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    ParamMap prev = random_map(gen);
    std::size_t m = 1 + gen() % 5;
    std::vector<ParamMap> ins;
    for (std::size_t i = 0; i < m; ++i) ins.push_back(random_map(gen));
    AttentionWeights w = attention_weights(ins, prev, prev);
    for (const auto& [name, alpha] : w.alpha) {
      double sum = 0.0;
      for (double a : alpha) {
        CHECK(a >= 0.0);
        sum += a;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(w.beta.at(name) >= 0.0);
    }
  }
}

TEST_CASE("fedda_update pinned cases") {
  SUBCASE("single input, rho 0, gamma 1 collapses to the input") {
    std::mt19937_64 gen(9);
    ParamMap prev = random_map(gen);
    ParamMap in = random_map(gen);
    ParamMap out = fedda_update(prev, {in}, prev, {.rho = 0.0, .gamma = 1.0});
    for (const auto& [name, t] : out)
      for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == doctest::Approx(in.at(name)[i]).epsilon(1e-12));
  }
  SUBCASE("two equidistant inputs average") {
    ParamMap prev = scalar_map(0.0);
    ParamMap out = fedda_update(prev, {scalar_map(1.0), scalar_map(-1.0)}, prev,
                                {.rho = 0.0, .gamma = 1.0});
    CHECK(out.at("w")[0] == doctest::Approx(0.0).epsilon(1e-15));

    ParamMap out2 = fedda_update(prev, {scalar_map(1.0), scalar_map(3.0)}, scalar_map(0.0),
                                 {.rho = 0.0, .gamma = 1.0});
    // distances 1 and 9: attention favors the farther model
    CHECK(out2.at("w")[0] > 2.0);
  }
  SUBCASE("hand-evaluated scalar update") {
    // prev 1.0, inputs {2, 4}, quasi 0, rho 0.1, gamma 0.5:
    // distances (1, 9), alpha = softmax([1, 9]), update = 2.4496646498695335
    ParamMap out = fedda_update(scalar_map(1.0), {scalar_map(2.0), scalar_map(4.0)},
                                scalar_map(0.0), {.rho = 0.1, .gamma = 0.5});
    CHECK(out.at("w")[0] == doctest::Approx(2.4496646498695335).epsilon(1e-14));
  }
  SUBCASE("divergent step size is an error") {
    ParamMap prev = scalar_map(1e154);
    CHECK_THROWS_AS(fedda_update(prev, {scalar_map(0.0)}, prev, {.rho = 0.0, .gamma = 1e200}),
                    std::runtime_error);
  }
}

TEST_CASE("fedda fixed point is exact") {
  std::mt19937_64 gen(13);
  ParamMap prev = random_map(gen);
  for (double rho : {-0.3, 0.0, 0.7, 2.0}) {
    for (double gamma : {0.1, 1.0, 5.0}) {
      ParamMap out = fedda_update(prev, {prev, prev}, prev, {.rho = rho, .gamma = gamma});
      for (const auto& [name, t] : out)
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == prev.at(name)[i]);
    }
  }
}

TEST_CASE("fedavg") {
  std::mt19937_64 gen(17);
  ParamMap one = random_map(gen);
  ParamMap same = fedavg({one});
  CHECK(same == one);

  ParamMap zero = scalar_map(0.0);
  ParamMap two = scalar_map(2.0);
  CHECK(fedavg({zero, two}).at("w")[0] == 1.0);

  // elementwise oracle over five random maps
  std::vector<ParamMap> maps;
  for (int i = 0; i < 5; ++i) maps.push_back(random_map(gen));
  ParamMap avg = fedavg(maps);
  for (const auto& [name, t] : avg) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      double s = 0.0;
      for (const ParamMap& m : maps) s += m.at(name)[i];
      CHECK(t[i] == doctest::Approx(s / 5.0).epsilon(1e-14));
    }
  }

  CHECK_THROWS_AS(fedavg({}), std::invalid_argument);
}

TEST_CASE("fedatt pinned cases") {
  SUBCASE("gamma 1, single input returns the input") {
    std::mt19937_64 gen(19);
    ParamMap prev = random_map(gen);
    ParamMap in = random_map(gen);
    ParamMap out = fedatt(prev, {in}, 1.0);
    for (const auto& [name, t] : out)
      for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == doctest::Approx(in.at(name)[i]).epsilon(1e-12));
  }
  SUBCASE("gamma 1 with equidistant inputs equals fedavg") {
    std::mt19937_64 gen(23);
    ParamMap prev = random_map(gen);
    // equal per-layer distances: prev +/- the same perturbation
    ParamMap plus = prev, minus = prev;
    for (auto& [name, t] : plus)
      for (std::size_t i = 0; i < t.size(); ++i) {
        double d = uniform_in(gen, -1.0, 1.0);
        t[i] += d;
        minus.at(name)[i] -= d;
      }
    ParamMap att = fedatt(prev, {plus, minus}, 1.0);
    ParamMap avg = fedavg({plus, minus});
    for (const auto& [name, t] : att)
      for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == doctest::Approx(avg.at(name)[i]).epsilon(1e-9));
  }
  SUBCASE("hand-evaluated scalar case") {
    // prev 0, inputs {1, 3}, gamma 0.5 -> 1.4996646498695335
    ParamMap out = fedatt(scalar_map(0.0), {scalar_map(1.0), scalar_map(3.0)}, 0.5);
    CHECK(out.at("w")[0] == doctest::Approx(1.4996646498695335).epsilon(1e-14));
  }
}

TEST_CASE("rho 0 reduction to fedatt is bitwise") {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 100; ++trial) {
    ParamMap prev = random_map(gen);
    ParamMap quasi = random_map(gen);
    std::size_t m = 1 + gen() % 4;
    std::vector<ParamMap> ins;
    for (std::size_t i = 0; i < m; ++i) ins.push_back(random_map(gen));
    double gamma = uniform_in(gen, 0.1, 2.0);
    ParamMap a = fedda_update(prev, ins, quasi, {.rho = 0.0, .gamma = gamma});
    ParamMap b = fedatt(prev, ins, gamma);
    CHECK(a == b);  // exact, including bit patterns of every entry
  }
}

TEST_CASE("permutation invariance of the input list") {
  std::mt19937_64 gen(31);
  ParamMap prev = random_map(gen);
  ParamMap quasi = random_map(gen);
  std::vector<ParamMap> ins;
  for (int i = 0; i < 5; ++i) ins.push_back(random_map(gen));
  ParamMap base = fedda_update(prev, ins, quasi, {.rho = 0.2, .gamma = 0.7});
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ParamMap> shuffled = ins;
    shuffle_indices(shuffled, gen);
    ParamMap out = fedda_update(prev, shuffled, quasi, {.rho = 0.2, .gamma = 0.7});
    for (const auto& [name, t] : out)
      for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == doctest::Approx(base.at(name)[i]).epsilon(1e-12));
  }
}

TEST_CASE("translation covariance at rho 0") {
  std::mt19937_64 gen(37);
  ParamMap prev = random_map(gen);
  std::vector<ParamMap> ins = {random_map(gen), random_map(gen), random_map(gen)};
  ParamMap base = fedda_update(prev, ins, prev, {.rho = 0.0, .gamma = 0.6});

  double shift = 3.25;
  ParamMap prev_s = prev;
  for (auto& [_, t] : prev_s)
    for (double& v : t.data) v += shift;
  std::vector<ParamMap> ins_s = ins;
  for (ParamMap& m : ins_s)
    for (auto& [_, t] : m)
      for (double& v : t.data) v += shift;

  ParamMap shifted = fedda_update(prev_s, ins_s, prev_s, {.rho = 0.0, .gamma = 0.6});
  for (const auto& [name, t] : shifted)
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(t[i] - shift == doctest::Approx(base.at(name)[i]).epsilon(1e-9));
}

TEST_CASE("quasi anchor limit") {
  // gamma 1, rho 1, single input equal to prev: output lands exactly on quasi.
  std::mt19937_64 gen(41);
  ParamMap prev = random_map(gen);
  ParamMap quasi = random_map(gen);
  ParamMap out = fedda_update(prev, {prev}, quasi, {.rho = 1.0, .gamma = 1.0});
  for (const auto& [name, t] : out)
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(t[i] == doctest::Approx(quasi.at(name)[i]).epsilon(1e-12));
}
