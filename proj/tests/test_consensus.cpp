#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "sphere_cbo/consensus.hpp"
#include "sphere_cbo/errors.hpp"

using namespace sphere_cbo;

namespace {

std::vector<double> random_values(std::size_t n, double lo, double hi, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * uniform01(rng);
  return v;
}

std::vector<oracle::Vec> rows(const Ensemble& e) {
  std::vector<oracle::Vec> out;
  for (std::size_t j = 0; j < e.size(); ++j) out.push_back(test::to_std(e.agent(j).transpose()));
  return out;
}

}  // namespace

TEST_CASE("consensus of identical agents is that agent") {
  Rng rng = derive_stream(21);
  const UnitVector u = sample_uniform(4, rng);
  const Ensemble e(std::vector<UnitVector>(5, u));
  const std::vector<double> values{3.0, 1.0, 2.0, 1.0, 9.0};
  for (double alpha : {0.0, 1.0, 5e4, kAlphaInfinity}) {
    CHECK((consensus_point(e, values, alpha).point - u.coords()).norm() <= 1e-15);
  }
}

TEST_CASE("alpha = 0 averages uniformly") {
  const Ensemble e(std::vector<UnitVector>{UnitVector::basis(3, 0), UnitVector::basis(3, 1)});
  const std::vector<double> values{0.0, 7.0};
  const Vector p = consensus_point(e, values, 0.0).point;
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
  CHECK(p[2] == 0.0);
}

TEST_CASE("three-agent weights") {
  Rng rng = derive_stream(22);
  const Ensemble e = sample_uniform_ensemble(3, 4, rng);
  const std::vector<double> values{1.0, 2.0, 3.0};
  const ConsensusPoint c = consensus_point(e, values, 1.0);
  const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0);
  CHECK(c.weights[0] == doctest::Approx(1.0 / z).epsilon(1e-15));
  CHECK(c.weights[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-15));
  CHECK(c.weights[2] == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-15));
  const oracle::Vec naive = oracle::naive_consensus(rows(e), values, 1.0);
  CHECK(test::max_abs_diff(test::to_std(c.point), naive) <= 1e-14);
}

TEST_CASE("stabilized consensus matches the extended-precision softmin") {
  Rng rng = derive_stream(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Ensemble e = sample_uniform_ensemble(2 + trial % 40, 2 + trial % 9, rng);
    const auto values = random_values(e.size(), -1.0, 1.0, rng);
    const double alpha = 50.0 * uniform01(rng);
    const ConsensusPoint c = consensus_point(e, values, alpha);
    CHECK(test::max_abs_diff(test::to_std(c.point), oracle::naive_consensus(rows(e), values, alpha)) <= 1e-12);
    CHECK(std::accumulate(c.weights.begin(), c.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.point.norm() <= 1.0 + 1e-12);
  }
}

TEST_CASE("large alpha stays finite") {
  Rng rng = derive_stream(24);
  for (double alpha : {5e4, 5e7}) {
    const Ensemble e = sample_uniform_ensemble(200, 20, rng);
    const auto values = random_values(200, 0.0, 20.0, rng);
    const ConsensusPoint c = consensus_point(e, values, alpha);
    CHECK(c.point.allFinite());
    CHECK(c.weights[c.best_index] >= 1.0 / 200.0);
  }
}

TEST_CASE("alpha = infinity selects the best agent with lowest-index ties") {
  Rng rng = derive_stream(25);
  const Ensemble e = sample_uniform_ensemble(4, 3, rng);
  const std::vector<double> values{2.0, 0.5, 0.5, 1.0};
  const ConsensusPoint c = consensus_point(e, values, kAlphaInfinity);
  CHECK(c.best_index == 1);
  CHECK(c.best_value == 0.5);
  CHECK(c.point == Vector(e.agent(1).transpose()));
}

TEST_CASE("invalid inputs") {
  Rng rng = derive_stream(26);
  const Ensemble e = sample_uniform_ensemble(3, 3, rng);
  const std::vector<double> bad{0.0, std::nan(""), 1.0};
  try {
    consensus_point(e, bad, 1.0);
    FAIL("expected an error");
  } catch (const InvalidObjectiveValue& err) {
    CHECK(std::string(err.what()).find("agent 1") != std::string::npos);
  }
  const std::vector<double> inf{0.0, 1.0, HUGE_VAL};
  CHECK_THROWS_AS(consensus_point(e, inf, 1.0), InvalidObjectiveValue);
  const std::vector<double> ok{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(consensus_point(e, ok, -1.0), InvalidParameter);
}

TEST_CASE("shift and argmin invariance") {
  Rng rng = derive_stream(27);
  for (int trial = 0; trial < 100; ++trial) {
    const Ensemble e = sample_uniform_ensemble(10, 5, rng);
    auto values = random_values(10, 0.0, 3.0, rng);
    const double alpha = 10.0 * uniform01(rng);
    const ConsensusPoint base = consensus_point(e, values, alpha);
    auto shifted = values;
    for (auto& v : shifted) v += 123.25;
    CHECK((consensus_point(e, shifted, alpha).point - base.point).cwiseAbs().maxCoeff() <= 1e-12);
    auto warped = values;
    for (auto& v : warped) v = std::exp(v) + v * v * v;
    CHECK(consensus_point(e, warped, alpha).best_index == base.best_index);
  }
}

TEST_CASE("consensus concentrates on the best agent as alpha grows") {
  Rng rng = derive_stream(28);
  for (int trial = 0; trial < 50; ++trial) {
    const Ensemble e = sample_uniform_ensemble(8, 4, rng);
    std::vector<double> values(8);
    for (std::size_t j = 0; j < 8; ++j) values[j] = 0.1 * static_cast<double>((j * 5 + trial) % 8);
    double prev = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (double alpha : {1e2, 1e4, 1e6}) {
      const ConsensusPoint c = consensus_point(e, values, alpha);
      best = c.best_index;
      const double dist = (c.point - Vector(e.agent(best).transpose())).norm();
      CHECK(dist <= prev);
      prev = dist;
    }
    CHECK(prev < 1e-6);
  }
}

TEST_CASE("laplace functional is monotone toward the minimum") {
  Rng rng = derive_stream(29);
  for (int trial = 0; trial < 100; ++trial) {
    const auto values = random_values(20, -2.0, 5.0, rng);
    const double lo = *std::min_element(values.begin(), values.end());
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
      const double l = laplace_functional(values, alpha);
      CHECK(l <= prev + 1e-10);
      CHECK(l >= lo - 1e-12);
      prev = l;
    }
    CHECK(prev - lo <= std::log(20.0) / 1000.0 + 1e-12);
  }
}

TEST_CASE("batch over all agents equals full consensus bit for bit") {
  Rng rng = derive_stream(30);
  const Ensemble e = sample_uniform_ensemble(12, 6, rng);
  const auto values = random_values(12, 0.0, 1.0, rng);
  const std::vector<std::size_t> all = select_batch(12, 12, rng);
  const ConsensusPoint a = consensus_point(e, values, 7.0);
  const ConsensusPoint b = consensus_point(e, all, values, 7.0);
  CHECK(a.point == b.point);
  CHECK(a.best_index == b.best_index);
}

TEST_CASE("select_batch") {
  Rng rng = derive_stream(31);
  auto all = select_batch(5, 5, rng);
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(select_batch(5, 9, rng).size() == 5);
  const auto three = select_batch(5, 3, rng);
  CHECK(std::set<std::size_t>(three.begin(), three.end()).size() == 3);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 10000; ++i) ++counts[select_batch(5, 1, rng).front()];
  for (int c : counts) CHECK(c / 10000.0 == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("partition_batches") {
  Rng rng = derive_stream(32);
  const auto pairs = partition_batches(4, 2, rng);
  REQUIRE(pairs.size() == 2);
  std::set<std::size_t> seen;
  for (const auto& b : pairs) {
    CHECK(b.size() == 2);
    seen.insert(b.begin(), b.end());
  }
  CHECK(seen == std::set<std::size_t>{0, 1, 2, 3});
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r = derive_stream(s);
    std::vector<int> hits(6, 0);
    for (const auto& b : partition_batches(6, 3, r))
      for (auto i : b) ++hits[i];
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  CHECK_THROWS_AS(partition_batches(5, 2, rng), InvalidParameter);
}

TEST_CASE("plan_batches falls back to full consensus when the batch exceeds the ensemble") {
  Rng rng = derive_stream(33);
  const BatchPlan p = plan_batches(BatchMode::random_subset, 8, 10, rng);
  REQUIRE(p.indices.size() == 1);
  CHECK(p.indices.front().size() == 8);
  const BatchPlan q = plan_batches(BatchMode::disjoint_partition, 7, 2, rng);
  std::size_t total = 0;
  for (const auto& b : q.indices) total += b.size();
  CHECK(total == 7);
}
