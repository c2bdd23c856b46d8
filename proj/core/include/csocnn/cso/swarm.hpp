#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "csocnn/error.hpp"
#include "csocnn/random.hpp"

namespace csocnn::cso {

enum class Objective { minimize, maximize };
enum class CatMode { seeking, tracing };

// `greedy` always keeps the best seeking candidate. It exists so tests can
// check the self-position guarantee; real searches use roulette.
enum class SeekingSelection { roulette, greedy };

struct Bound {
  double lo = 0.0;
  double hi = 1.0;
  double span() const noexcept { return hi - lo; }
};
using Bounds = std::vector<Bound>;

struct Cat {
  std::vector<double> position;
  std::vector<double> velocity;
  CatMode mode = CatMode::seeking;
  std::optional<double> fitness;
};

// Defaults follow the usual CSO convention (smp 5, srd 0.2, cdc 0.8,
// spc on, MR 0.3, c1 2.0, vmax half of each dimension's span).
struct SwarmConfig {
  std::size_t n_cats = 30;
  double mixture_ratio = 0.3;  // fraction of cats in tracing mode
  std::size_t smp = 5;         // seeking memory pool
  double srd = 0.2;            // seeking step, fraction of the dimension span
  double cdc = 0.8;            // fraction of dimensions mutated per candidate
  bool spc = true;             // current position occupies one candidate slot
  double c1 = 2.0;
  double vmax_fraction = 0.5;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  Objective objective = Objective::minimize;
  SeekingSelection selection = SeekingSelection::roulette;
  std::size_t workers = 1;     // parallel fitness evaluations per iteration

  // Throws PreconditionError describing the first invalid field.
  void validate() const;
  std::size_t tracing_count() const;
};

// Where an evaluation happens. Iteration 1 evaluates the initial swarm.
struct EvalContext {
  std::size_t iteration = 0;
  std::size_t cat_index = 0;
  std::size_t candidate = 0;
};

using FitnessFn = std::function<double(std::span<const double>, const EvalContext&)>;
using PlainFitnessFn = std::function<double(std::span<const double>)>;

// Raised when the fitness function throws; the original exception is nested.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::vector<double> position)
      : Error(what), position_(std::move(position)) {}
  const std::vector<double>& position() const noexcept { return position_; }

 private:
  std::vector<double> position_;
};

struct IterationRecord {
  std::size_t iter = 0;
  double best_fitness = 0.0;  // best so far
  double mean_fitness = 0.0;  // mean over the swarm at the end of the iteration
  std::vector<double> best_position;
  std::size_t tracing_count = 0;
};

struct SwarmHistory {
  std::vector<IterationRecord> records;

  // Columns: iter,best_fitness,mean_fitness
  void write_csv(std::ostream& out) const;
};

struct OptimizeResult {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  SwarmHistory history;
  std::size_t evaluations = 0;
};

void validate_bounds(const Bounds& bounds);
bool is_better(double a, double b, Objective objective);
std::vector<double> velocity_limits(const Bounds& bounds, const SwarmConfig& config);

// Uniform positions, zero velocities, exactly tracing_count() cats tracing.
// Fitness is left unset.
std::vector<Cat> init_swarm(const SwarmConfig& config, const Bounds& bounds, Rng& rng);
std::vector<Cat> init_swarm(const SwarmConfig& config, const Bounds& bounds);

// Re-draws every cat's mode so that exactly tracing_count() are tracing.
void assign_modes(std::span<Cat> cats, const SwarmConfig& config, Rng& rng);

// The smp seeking candidates. With spc the first is the current position.
std::vector<std::vector<double>> seeking_candidates(const Cat& cat, const SwarmConfig& config,
                                                    const Bounds& bounds, Rng& rng);

// Roulette (or greedy) pick among evaluated candidates.
std::size_t select_candidate(std::span<const double> fitness, const SwarmConfig& config,
                             Rng& rng);

// Full seeking step with serial evaluation. The current position's cached
// fitness is reused when present. Velocity is zeroed.
Cat seeking_move(const Cat& cat, const PlainFitnessFn& fitness, const SwarmConfig& config,
                 const Bounds& bounds, Rng& rng);

// v += r * c1 * (best - x), clamped to +-vmax; x += v, clamped to bounds.
// One draw of r in [0, 1) per move. Fitness is cleared.
Cat tracing_move(const Cat& cat, std::span<const double> global_best, const SwarmConfig& config,
                 const Bounds& bounds, double r);
Cat tracing_move(const Cat& cat, std::span<const double> global_best, const SwarmConfig& config,
                 const Bounds& bounds, Rng& rng);

// Runs max_iters iterations, the first being the evaluation of the initial
// swarm. Results depend only on (fitness, bounds, config);
// `workers` changes wall-clock time, never the outcome.
OptimizeResult optimize(const FitnessFn& fitness, const Bounds& bounds,
                        const SwarmConfig& config);
OptimizeResult optimize(const PlainFitnessFn& fitness, const Bounds& bounds,
                        const SwarmConfig& config);

}  // namespace csocnn::cso
