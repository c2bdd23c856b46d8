#include <doctest.h>

#include <cmath>
#include <exception>
#include <sstream>
#include <string>

#include "csocnn/data/scaler.hpp"
#include "csocnn/data/split.hpp"
#include "csocnn/data/synthetic.hpp"
#include "csocnn/error.hpp"
#include "csocnn/hyperopt/hyperopt.hpp"
#include "csocnn/random.hpp"

using namespace csocnn;
using namespace csocnn::hyperopt;
using nn::Activation;
using nn::LayerSpec;

namespace {

Datasets blob_datasets(std::size_t n, std::size_t features, double separation, std::uint64_t seed) {
  const auto ds = data::make_synthetic_blobs(n, 5, features, separation, seed);
  data::SplitSpec spec;
  spec.seed = seed;
  const auto parts = data::split(ds.records, spec);
  auto train = data::clean_and_scale(parts.train);
  auto val = parts.val;
  data::apply_scaler(val, train.stats);
  return {data::to_network_input(train.records, features), data::to_network_input(val, features)};
}

std::vector<LayerSpec> small_arch() {
  return {LayerSpec::input(),      LayerSpec::conv2d(4, 3, 1),
          LayerSpec::batch_norm(Activation::relu), LayerSpec::max_pool2d(2, 1),
          LayerSpec::flatten(),    LayerSpec::dense(8, Activation::relu),
          LayerSpec::dense(5, Activation::softmax)};
}

SearchSpace small_space() {
  SearchSpace s;
  s.batch_size = {8, 64};
  s.epochs = {1, 3};
  return s;
}

cso::SwarmConfig toy_swarm(std::size_t cats, std::size_t iters, std::uint64_t seed) {
  cso::SwarmConfig c;
  c.n_cats = cats;
  c.max_iters = iters;
  c.smp = 3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("decode corners and log midpoint") {
  const SearchSpace space;
  const std::vector<double> lo{0, 0, 0}, hi{1, 1, 1}, mid{0.5, 0, 0};
  CHECK(decode(lo, space) == HyperParams{1e-4, 32, 1});
  const auto top = decode(hi, space);
  CHECK(top.learning_rate == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(top.batch_size == 1024);
  CHECK(top.epochs == 5);
  CHECK(decode(mid, space).learning_rate == doctest::Approx(1e-3).epsilon(1e-12));

  const std::vector<double> outside{-0.5, 1.5, 2.0};
  const auto clamped = decode(outside, space);
  CHECK(clamped.learning_rate == 1e-4);
  CHECK(clamped.batch_size == 1024);
  CHECK(clamped.epochs == 5);

  const std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(decode(two, space), ShapeError);
}

TEST_CASE("decode is monotone and stays in range") {
  const SearchSpace space;
  HyperParams prev = decode(std::vector<double>{0, 0, 0}, space);
  for (int i = 1; i <= 1000; ++i) {
    const double p = i / 1000.0;
    const auto hp = decode(std::vector<double>{p, p, p}, space);
    CHECK(hp.learning_rate >= prev.learning_rate);
    CHECK(hp.batch_size >= prev.batch_size);
    CHECK(hp.epochs >= prev.epochs);
    CHECK(hp.learning_rate >= space.learning_rate.lo);
    CHECK(hp.learning_rate <= space.learning_rate.hi);
    CHECK(hp.batch_size <= space.batch_size.hi);
    CHECK(hp.epochs <= space.epochs.hi);
    prev = hp;
  }
}

TEST_CASE("search space validation") {
  SearchSpace s;
  CHECK_NOTHROW(s.validate());
  s.learning_rate = {1e-2, 1e-4};
  CHECK_THROWS_AS(s.validate(), PreconditionError);
  s = {};
  s.epochs = {0, 3};
  CHECK_THROWS_AS(s.validate(), PreconditionError);
  s = {};
  s.batch_size = {64, 64};
  CHECK_THROWS_AS(s.validate(), PreconditionError);
}

TEST_CASE("fitness ordering") {
  CHECK(better({0.9, 0.5}, {0.8, 0.1}));
  CHECK(better({0.9, 0.1}, {0.9, 0.2}));
  CHECK_FALSE(better({0.9, 0.2}, {0.9, 0.2}));

  Rng rng(4);
  const std::size_t n = 40;
  std::vector<Fitness> pool;
  for (int i = 0; i < 60; ++i) {
    pool.push_back({static_cast<double>(uniform_index(rng, n + 1)) / static_cast<double>(n),
                    static_cast<double>(uniform_index(rng, 6)) * 0.25, false});
  }
  pool.push_back(Fitness::worst());
  for (const auto& a : pool) {
    CHECK_FALSE(better(a, a));
    for (const auto& b : pool) {
      if (better(a, b)) CHECK_FALSE(better(b, a));
      // The scalar key used by the swarm orders pairs the same way.
      if (better(a, b)) CHECK(fitness_key(a, n) > fitness_key(b, n));
      if (!better(a, b) && !better(b, a)) CHECK(fitness_key(a, n) == fitness_key(b, n));
      for (const auto& c : pool) {
        if (better(a, b) && better(b, c)) CHECK(better(a, c));
      }
    }
  }
  for (const auto& f : pool) {
    if (!f.diverged) CHECK_FALSE(better(Fitness::worst(), f));
  }
}

TEST_CASE("candidate evaluation") {
  const auto d = blob_datasets(400, 12, 4.0, 1);
  const HyperParams hp{3e-3, 16, 2};
  const auto a = evaluate_candidate(hp, d, small_arch(), 77);
  const auto b = evaluate_candidate(hp, d, small_arch(), 77);
  CHECK(a == b);
  CHECK_FALSE(a.diverged);
  CHECK(a.val_accuracy >= 0.0);
  CHECK(a.val_accuracy <= 1.0);
  CHECK(a.val_loss >= 0.0);

  CHECK_THROWS_AS(evaluate_candidate({1e-3, 16, 0}, d, small_arch(), 1), PreconditionError);
  CHECK_THROWS_AS(evaluate_candidate({1e-3, 0, 1}, d, small_arch(), 1), PreconditionError);
}

TEST_CASE("mid-range candidate learns the blobs") {
  const auto d = blob_datasets(10000, data::kFlowFeatureCount, 6.0, 7);
  const auto hp = decode(std::vector<double>{0.5, 0.5, 0.5}, SearchSpace{});
  const auto f = evaluate_candidate(hp, d, nn::baseline_architecture(5), 7);
  INFO("lr ", hp.learning_rate, " batch ", hp.batch_size, " epochs ", hp.epochs);
  CHECK(f.val_accuracy > 0.9);
}

TEST_CASE("single cat, single iteration") {
  const auto d = blob_datasets(300, 12, 4.0, 2);
  const auto r = optimize_hyperparams(small_space(), d, small_arch(), toy_swarm(1, 1, 3));
  REQUIRE(r.evaluations.size() == 1);
  const auto& e = r.evaluations.front();
  CHECK(r.best == e.hyperparams);
  CHECK(r.fitness == e.fitness);
  CHECK(r.best == decode(e.position, small_space()));
  CHECK(r.fitness == evaluate_candidate(e.hyperparams, d, small_arch(), e.seed));
  REQUIRE(r.history.size() == 1);
}

TEST_CASE("swarm search is monotone and reproducible") {
  const auto d = blob_datasets(300, 12, 2.0, 3);
  auto swarm = toy_swarm(4, 3, 11);
  const auto a = optimize_hyperparams(small_space(), d, small_arch(), swarm);
  REQUIRE(a.history.size() == 3);
  for (std::size_t i = 1; i < a.history.size(); ++i) {
    CHECK(a.history[i].best_key >= a.history[i - 1].best_key);
    CHECK_FALSE(better(a.history[i - 1].best, a.history[i].best));
  }
  for (const auto& e : a.evaluations) CHECK_FALSE(better(e.fitness, a.fitness));
  CHECK(a.fitness == a.history.back().best);

  std::ostringstream csv;
  a.write_history_csv(csv);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  CHECK(lines == 4);
  const auto rec = a.best_record();
  for (const char* key : {"learning_rate", "batch_size", "epochs", "val_accuracy", "val_loss"}) {
    CHECK(rec.contains(key));
  }

  const auto b = optimize_hyperparams(small_space(), d, small_arch(), swarm);
  CHECK(a.best == b.best);
  CHECK(a.fitness == b.fitness);
  CHECK(a.evaluations.size() == b.evaluations.size());

  swarm.workers = 3;
  const auto c = optimize_hyperparams(small_space(), d, small_arch(), swarm);
  CHECK(c.best == a.best);
  CHECK(c.fitness == a.fitness);
  REQUIRE(c.evaluations.size() == a.evaluations.size());
  for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
    CHECK(c.evaluations[i].fitness == a.evaluations[i].fitness);
  }
}

TEST_CASE("cancellation") {
  const auto d = blob_datasets(200, 12, 4.0, 4);
  int calls = 0;
  try {
    optimize_hyperparams(small_space(), d, small_arch(), toy_swarm(3, 2, 1), {},
                         [&] { return ++calls > 2; });
    FAIL("search was not cancelled");
  } catch (const cso::EvaluationError& e) {
    bool cancelled = false;
    try {
      std::rethrow_if_nested(e);
    } catch (const Cancelled&) {
      cancelled = true;
    } catch (...) {
    }
    CHECK(cancelled);
  }
}

TEST_CASE("random search baseline") {
  const auto d = blob_datasets(200, 12, 3.0, 5);
  const auto a = random_search(small_space(), d, small_arch(), 4, 9);
  const auto b = random_search(small_space(), d, small_arch(), 4, 9);
  REQUIRE(a.evaluations.size() == 4);
  CHECK(a.best == b.best);
  CHECK(a.fitness == b.fitness);
  for (const auto& e : a.evaluations) CHECK_FALSE(better(e.fitness, a.fitness));
  CHECK_THROWS_AS(random_search(small_space(), d, small_arch(), 0, 9), PreconditionError);
}
