#include "csocnn/cso/swarm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace csocnn::cso {

namespace {

struct Job {
  std::vector<double> position;
  EvalContext context;
};

std::string describe(std::span<const double> position) {
  return fmt::format("({:.6g})", fmt::join(position, ", "));
}

[[noreturn]] void rethrow_wrapped(std::exception_ptr error, const Job& job) {
  std::string inner = "unknown error";
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    inner = e.what();
  } catch (...) {
  }
  try {
    std::rethrow_exception(error);
  } catch (...) {
    std::throw_with_nested(EvaluationError(
        "fitness evaluation failed at " + describe(job.position) + ": " + inner,
        job.position));
  }
}

// Evaluates every job; results are indexed like `jobs` whatever the worker
// count, and the lowest-index failure is the one reported.
std::vector<double> evaluate_all(const FitnessFn& fitness, const std::vector<Job>& jobs,
                                 std::size_t workers) {
  std::vector<double> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto run_one = [&](std::size_t i) {
    try {
      results[i] = fitness(jobs[i].position, jobs[i].context);
      if (std::isnan(results[i])) {
        throw NumericError("fitness function returned NaN");
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t threads = std::min(workers, jobs.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      run_one(i);
      if (errors[i]) rethrow_wrapped(errors[i], jobs[i]);
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) rethrow_wrapped(errors[i], jobs[i]);
  }
  return results;
}

}  // namespace

void SwarmConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw PreconditionError(std::string("swarm config: ") + what);
  };
  require(n_cats >= 1, "n_cats must be >= 1");
  require(mixture_ratio > 0.0 && mixture_ratio < 1.0, "mixture ratio must lie in (0, 1)");
  require(smp >= 1, "smp must be >= 1");
  require(!spc || smp >= 2, "smp must be >= 2 when spc is set");
  require(srd > 0.0 && srd <= 1.0, "srd must lie in (0, 1]");
  require(cdc > 0.0 && cdc <= 1.0, "cdc must lie in (0, 1]");
  require(c1 > 0.0, "c1 must be positive");
  require(vmax_fraction > 0.0, "vmax fraction must be positive");
  require(max_iters >= 1, "max_iters must be >= 1");
}

std::size_t SwarmConfig::tracing_count() const {
  return static_cast<std::size_t>(std::lround(mixture_ratio * static_cast<double>(n_cats)));
}

void validate_bounds(const Bounds& bounds) {
  if (bounds.empty()) throw BoundsError("bounds must have at least one dimension");
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    if (!(bounds[d].lo < bounds[d].hi) || !std::isfinite(bounds[d].lo) ||
        !std::isfinite(bounds[d].hi)) {
      throw BoundsError(fmt::format("dimension {}: need finite lo < hi, got [{}, {}]", d,
                                    bounds[d].lo, bounds[d].hi));
    }
  }
}

bool is_better(double a, double b, Objective objective) {
  return objective == Objective::minimize ? a < b : a > b;
}

std::vector<double> velocity_limits(const Bounds& bounds, const SwarmConfig& config) {
  std::vector<double> vmax(bounds.size());
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    vmax[d] = config.vmax_fraction * bounds[d].span();
  }
  return vmax;
}

std::vector<Cat> init_swarm(const SwarmConfig& config, const Bounds& bounds, Rng& rng) {
  validate_bounds(bounds);
  config.validate();
  std::vector<Cat> cats(config.n_cats);
  for (auto& cat : cats) {
    cat.position.resize(bounds.size());
    cat.velocity.assign(bounds.size(), 0.0);
    for (std::size_t d = 0; d < bounds.size(); ++d) {
      cat.position[d] = uniform(rng, bounds[d].lo, bounds[d].hi);
    }
  }
  assign_modes(cats, config, rng);
  return cats;
}

std::vector<Cat> init_swarm(const SwarmConfig& config, const Bounds& bounds) {
  Rng rng(config.seed);
  return init_swarm(config, bounds, rng);
}

void assign_modes(std::span<Cat> cats, const SwarmConfig& config, Rng& rng) {
  std::vector<std::size_t> order(cats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(std::span(order), rng);
  const std::size_t tracing = std::min(config.tracing_count(), cats.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    cats[order[k]].mode = k < tracing ? CatMode::tracing : CatMode::seeking;
  }
}

std::vector<std::vector<double>> seeking_candidates(const Cat& cat, const SwarmConfig& config,
                                                    const Bounds& bounds, Rng& rng) {
  const std::size_t dims = bounds.size();
  const std::size_t n_mutate = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.cdc * static_cast<double>(dims) - 1e-12)), 1,
      dims);
  std::vector<std::vector<double>> candidates;
  candidates.reserve(config.smp);
  if (config.spc) candidates.push_back(cat.position);

  std::vector<std::size_t> dim_order(dims);
  while (candidates.size() < config.smp) {
    std::vector<double> x = cat.position;
    for (std::size_t d = 0; d < dims; ++d) dim_order[d] = d;
    // Partial Fisher-Yates: the first n_mutate entries are a random subset.
    for (std::size_t k = 0; k < n_mutate; ++k) {
      const std::size_t j = k + uniform_index(rng, dims - k);
      std::swap(dim_order[k], dim_order[j]);
      const std::size_t d = dim_order[k];
      const double step = config.srd * bounds[d].span();
      const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      x[d] = std::clamp(x[d] + sign * step, bounds[d].lo, bounds[d].hi);
    }
    candidates.push_back(std::move(x));
  }
  return candidates;
}

std::size_t select_candidate(std::span<const double> fitness, const SwarmConfig& config,
                             Rng& rng) {
  if (fitness.empty()) throw PreconditionError("no candidates to select from");
  const bool minimize = config.objective == Objective::minimize;

  if (config.selection == SeekingSelection::greedy) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < fitness.size(); ++i) {
      if (is_better(fitness[i], fitness[best], config.objective)) best = i;
    }
    return best;
  }

  const auto [lo, hi] = std::minmax_element(fitness.begin(), fitness.end());
  const double worst = minimize ? *hi : *lo;
  std::vector<double> weight(fitness.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    weight[i] = std::abs(fitness[i] - worst);
    total += weight[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    // All equal (or unbounded spread): uniform among the best candidates.
    std::vector<std::size_t> best;
    const double target = minimize ? *lo : *hi;
    for (std::size_t i = 0; i < fitness.size(); ++i) {
      if (fitness[i] == target) best.push_back(i);
    }
    return best[uniform_index(rng, best.size())];
  }
  double pick = uniform01(rng) * total;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (pick < weight[i]) return i;
    pick -= weight[i];
  }
  // Rounding fell off the end; return the last candidate with weight.
  for (std::size_t i = weight.size(); i-- > 0;) {
    if (weight[i] > 0.0) return i;
  }
  return 0;
}

Cat seeking_move(const Cat& cat, const PlainFitnessFn& fitness, const SwarmConfig& config,
                 const Bounds& bounds, Rng& rng) {
  auto candidates = seeking_candidates(cat, config, bounds, rng);
  std::vector<double> values(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    values[k] = (k == 0 && config.spc && cat.fitness) ? *cat.fitness : fitness(candidates[k]);
  }
  const std::size_t pick = select_candidate(values, config, rng);
  Cat next = cat;
  std::fill(next.velocity.begin(), next.velocity.end(), 0.0);
  next.position = std::move(candidates[pick]);
  next.fitness = values[pick];
  return next;
}

Cat tracing_move(const Cat& cat, std::span<const double> global_best, const SwarmConfig& config,
                 const Bounds& bounds, double r) {
  const std::size_t dims = bounds.size();
  if (global_best.size() != dims || cat.position.size() != dims) {
    throw BoundsError("tracing move: dimension mismatch");
  }
  const auto vmax = velocity_limits(bounds, config);
  Cat next = cat;
  next.velocity.resize(dims, 0.0);
  for (std::size_t d = 0; d < dims; ++d) {
    double v = next.velocity[d] + r * config.c1 * (global_best[d] - cat.position[d]);
    v = std::clamp(v, -vmax[d], vmax[d]);
    next.velocity[d] = v;
    next.position[d] = std::clamp(cat.position[d] + v, bounds[d].lo, bounds[d].hi);
  }
  next.fitness.reset();
  return next;
}

Cat tracing_move(const Cat& cat, std::span<const double> global_best, const SwarmConfig& config,
                 const Bounds& bounds, Rng& rng) {
  return tracing_move(cat, global_best, config, bounds, uniform01(rng));
}

namespace {

IterationRecord make_record(std::size_t iter, const OptimizeResult& result, double fitness_sum,
                            const std::vector<Cat>& cats) {
  IterationRecord record;
  record.iter = iter;
  record.best_fitness = result.best_fitness;
  record.mean_fitness = fitness_sum / static_cast<double>(cats.size());
  record.best_position = result.best_position;
  record.tracing_count = static_cast<std::size_t>(std::count_if(
      cats.begin(), cats.end(), [](const Cat& c) { return c.mode == CatMode::tracing; }));
  return record;
}

}  // namespace

OptimizeResult optimize(const FitnessFn& fitness, const Bounds& bounds,
                        const SwarmConfig& config) {
  validate_bounds(bounds);
  config.validate();
  Rng rng(config.seed);
  std::vector<Cat> cats = init_swarm(config, bounds, rng);
  OptimizeResult result;

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cats.size(); ++i) jobs.push_back({cats[i].position, {1, i, 0}});
  auto values = evaluate_all(fitness, jobs, config.workers);
  result.evaluations += jobs.size();

  std::size_t best_cat = 0;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    cats[i].fitness = values[i];
    if (is_better(values[i], values[best_cat], config.objective)) best_cat = i;
  }
  result.best_position = cats[best_cat].position;
  result.best_fitness = values[best_cat];
  result.history.records.push_back(
      make_record(1, result, std::accumulate(values.begin(), values.end(), 0.0), cats));

  struct Pending {
    std::vector<std::vector<double>> candidates;
    std::vector<double> fitness;
    std::vector<std::size_t> job_of;  // SIZE_MAX when the fitness is cached
  };

  for (std::size_t iter = 2; iter <= config.max_iters; ++iter) {
    assign_modes(cats, config, rng);

    jobs.clear();
    std::vector<Pending> pending(cats.size());
    for (std::size_t i = 0; i < cats.size(); ++i) {
      auto& p = pending[i];
      if (cats[i].mode == CatMode::seeking) {
        // A resting cat loses its momentum.
        std::fill(cats[i].velocity.begin(), cats[i].velocity.end(), 0.0);
        p.candidates = seeking_candidates(cats[i], config, bounds, rng);
      } else {
        cats[i] = tracing_move(cats[i], result.best_position, config, bounds, rng);
        p.candidates = {cats[i].position};
      }
      p.fitness.assign(p.candidates.size(), 0.0);
      p.job_of.assign(p.candidates.size(), SIZE_MAX);
      for (std::size_t k = 0; k < p.candidates.size(); ++k) {
        const bool cached = cats[i].mode == CatMode::seeking && config.spc && k == 0 &&
                            cats[i].fitness.has_value();
        if (cached) {
          p.fitness[k] = *cats[i].fitness;
        } else {
          p.job_of[k] = jobs.size();
          jobs.push_back({p.candidates[k], {iter, i, k}});
        }
      }
    }

    values = evaluate_all(fitness, jobs, config.workers);
    result.evaluations += jobs.size();

    double sum = 0.0;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      auto& p = pending[i];
      for (std::size_t k = 0; k < p.candidates.size(); ++k) {
        if (p.job_of[k] != SIZE_MAX) p.fitness[k] = values[p.job_of[k]];
      }
      for (std::size_t k = 0; k < p.candidates.size(); ++k) {
        if (is_better(p.fitness[k], result.best_fitness, config.objective)) {
          result.best_fitness = p.fitness[k];
          result.best_position = p.candidates[k];
        }
      }
      const std::size_t pick =
          cats[i].mode == CatMode::seeking ? select_candidate(p.fitness, config, rng) : 0;
      cats[i].position = std::move(p.candidates[pick]);
      cats[i].fitness = p.fitness[pick];
      sum += p.fitness[pick];
    }

    result.history.records.push_back(make_record(iter, result, sum, cats));
  }
  return result;
}

OptimizeResult optimize(const PlainFitnessFn& fitness, const Bounds& bounds,
                        const SwarmConfig& config) {
  return optimize(FitnessFn([&fitness](std::span<const double> x, const EvalContext&) {
                    return fitness(x);
                  }),
                  bounds, config);
}

void SwarmHistory::write_csv(std::ostream& out) const {
  out << "iter,best_fitness,mean_fitness\n";
  for (const auto& r : records) {
    out << fmt::format("{},{:.17g},{:.17g}\n", r.iter, r.best_fitness, r.mean_fitness);
  }
}

}  // namespace csocnn::cso
