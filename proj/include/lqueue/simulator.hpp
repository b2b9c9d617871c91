#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <utility>
#include <vector>

#include "lqueue/transforms.hpp"
#include "lqueue/wiener_hopf.hpp"

namespace lq {

enum class SimMode { exact, grid };
enum class InitialLaw { stationary, zero, exponential };

// Exact mode samples every observable from its exact law: Brownian-bridge
// minima for the running minimum, inverse-Gaussian first-passage and argmin
// times inside bridges. Grid mode cuts time into cells of length grid_step
// (plus the exact jump epochs); values still use per-cell bridge minima, but
// tau is reported at the right end of the cell where the crossing happens
// and g_min is the last argmin over the skeleton points, so time
// functionals carry an O(grid_step) bias.
struct SimConfig {
  SimMode mode = SimMode::exact;
  double grid_step = 1e-3;
  double q = 1.0;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
  double burn_in_horizon = 0.0;  // supremum fallback cap; 0 derives one
  InitialLaw initial = InitialLaw::stationary;
  double initial_rate = 1.0;  // Exp rate when initial == exponential
  unsigned threads = 1;       // 0 = hardware concurrency

  void validate() const;
};

struct QueueObservables {
  double horizon = 0.0;  // e_q
  double q0 = 0.0;
  double x_end = 0.0;    // X at e_q
  double x_min = 0.0;    // running minimum of X over [0, e_q]
  double g_min = 0.0;    // last time of that minimum
  double q_end = 0.0;
  double q_min = 0.0;
  double tau = 0.0;      // first emptying time, equal to horizon when censored
  bool idle = false;     // tau < horizon
  std::optional<double> unused;     // -(q0 + x_min) when idle
  std::optional<double> overshoot;  // -(q0 + X_tau) when idle
};

/// Independent random stream for one path index.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t index);

  double uniform();  // in (0, 1]
  double normal() { return normal_(engine_); }
  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Positive root R of psi(-iR) = 0; +inf when X can never move up.
double lundberg_root(const LevyModel& model);

struct SupremumSample {
  double value = 0.0;  // overall supremum of X
  double time = 0.0;   // first time it is attained
};

/// Running supremum of the free process and its first argmax. The path is
/// stopped once the gap below the running maximum makes a new maximum
/// impossible up to probability `tail` (Lundberg bound), or at horizon_cap.
SupremumSample sample_supremum(const LevyModel& model, PathRng& rng, double horizon_cap, double tail = 1e-9);

/// Draws Q_0 from the law with transform kb(0,0)/kb(0,theta).
class StationarySampler {
 public:
  enum class Method { mixture, supremum };

  explicit StationarySampler(const LadderExponents& lx, double burn_in_horizon = 0.0, bool force_supremum = false);

  double operator()(PathRng& rng) const;

  Method method() const { return method_; }
  double atom() const { return atom_; }
  const std::vector<std::pair<double, double>>& components() const { return components_; }  // (weight, rate)
  double burn_in_horizon() const { return horizon_; }

 private:
  const LevyModel* model_;
  Method method_ = Method::mixture;
  double atom_ = 0.0;
  std::vector<std::pair<double, double>> components_;
  double horizon_ = 0.0;
};

/// Smallest power-of-two T with P(first argmax time > T) < tail, bounded
/// through (1 - E exp(-G/T)) / (1 - 1/e).
double derive_burn_in_horizon(const LadderExponents& lx, double tail = 1e-4);

QueueObservables simulate_path(const LadderExponents& lx, const StationarySampler& q0_sampler, PathRng& rng,
                               const SimConfig& config);

/// tau for a queue started from stationarity, without killing.
double sample_busy_period(const LadderExponents& lx, const StationarySampler& q0_sampler, PathRng& rng);

enum class Observable { q0, x_end, x_min, q_end, q_min, horizon, g_min, tau, unused, overshoot };
enum class Restriction { none, ongoing, finished, positive_end };  // tau > e_q, tau < e_q, X_{e_q} > 0
enum class FunctionalKind { exponential, residual_life_tau, residual_life_q0 };

/// E(exp(-sum weight * observable); restriction), optionally divided by
/// P(restriction). The residual-life kinds estimate
/// E(1 - exp(-theta Z)) / (theta E Z) for Z = tau or Q_0.
struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::exponential;
  std::vector<std::pair<Observable, double>> exponent;
  Restriction restriction = Restriction::none;
  bool conditional = false;
  double theta = 0.0;
  std::optional<double> exponential_initial_rate;
};

struct EstimateWithCI {
  double mean = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::optional<Formula> formula;
  TransformArgs args;
};

/// A grid-mode path read on config.grid_step and on twice that step (every
/// other grid point plus the jump epochs). Values coincide; tau and g_min are
/// the two grids' readings of the same path.
struct NestedGridPath {
  QueueObservables fine;
  QueueObservables coarse;
};

NestedGridPath simulate_nested_grid_path(const LadderExponents& lx, const StationarySampler& q0_sampler, PathRng& rng,
                                         const SimConfig& config);

/// Estimates at grid_step and 2 * grid_step from the same paths, with the
/// paired shift coarse - fine and its standard error.
struct RefinementEstimate {
  EstimateWithCI fine;
  EstimateWithCI coarse;
  double shift = 0.0;
  double shift_se = 0.0;
};

/// Monte Carlo counterpart of a transform formula; throws invalid_argument
/// for formulas without one (the q -> 0 limit).
FunctionalSpec functional_for(Formula f, const TransformArgs& args);

/// Calls `visit(index, path)` for every path in index order.
void for_each_path(const LadderExponents& lx, const SimConfig& config,
                   const std::function<void(std::uint64_t, const QueueObservables&)>& visit);

/// Estimates several functionals over one shared set of paths. Paths may run
/// concurrently; reduction is in path-chunk order so results depend only on
/// the seed.
std::vector<EstimateWithCI> estimate_functionals(const LadderExponents& lx, const std::vector<FunctionalSpec>& specs,
                                                 const SimConfig& config);

EstimateWithCI estimate_functional(const LadderExponents& lx, const FunctionalSpec& spec, const SimConfig& config);

/// Grid mode only; exponential functionals only.
std::vector<RefinementEstimate> estimate_refinement(const LadderExponents& lx, const std::vector<FunctionalSpec>& specs,
                                                    const SimConfig& config);

/// estimate_functional for functional_for(f, args) with config.q = args.q.
EstimateWithCI estimate_formula(const LadderExponents& lx, Formula f, const TransformArgs& args, SimConfig config);

struct Comparison {
  double analytic = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
};

Comparison compare(const TransformValue& analytic, const EstimateWithCI& estimate, double threshold = 3.0);

/// One CSV row per path; absent optionals are empty cells.
void write_observables_csv(std::ostream& out, const LadderExponents& lx, const SimConfig& config);

}  // namespace lq
