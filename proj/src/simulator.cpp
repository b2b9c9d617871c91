#include "lqueue/simulator.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "lqueue/errors.hpp"

namespace lq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// P(min of a Brownian bridge from a to b with variance v over the span <= c).
double bridge_below_prob(double a, double b, double c, double v) {
  if (a <= c || b <= c) return 1.0;
  return std::exp(-2.0 * (a - c) * (b - c) / v);
}

// Exponent beyond which bridge_below_prob is smaller than any PathRng
// uniform, so the draw can be skipped.
constexpr double kNegligibleExponent = 37.0;

bool bridge_may_reach(double a, double b, double c, double v) {
  return a <= c || b <= c || 2.0 * (a - c) * (b - c) / v < kNegligibleExponent;
}

// Inverse of the bridge-minimum CDF at u.
double bridge_min(double a, double b, double v, double u) {
  const double d = a - b;
  return 0.5 * (a + b - std::sqrt(d * d - 2.0 * v * std::log(u)));
}

// Michael-Schucany-Haas sampler for IG(mean, shape).
double inverse_gaussian(double mean, double shape, PathRng& rng) {
  const double nu = rng.normal();
  const double y = nu * nu;
  if (!std::isfinite(mean)) return shape / std::max(y, 1e-300);  // Levy limit
  const double my = mean * y;
  const double r = std::sqrt(my * my + 4.0 * mean * shape * y);
  const double x = mean * (r - my) / (my + r);
  if (rng.uniform() * (mean + x) <= mean) return x;
  return mean * mean / x;
}

// Offset into a bridge of length dt (variance rate s2) at which it first
// reaches a level sitting `above` below its start and `end_gap` = b - level
// relative to its end. Requires a crossing.
double bridge_first_passage(double above, double end_gap, double dt, double s2, PathRng& rng) {
  const double beta = std::abs(end_gap);
  const double mean = beta > 0.0 ? above / beta : kInf;
  const double y = inverse_gaussian(mean, above * above / (s2 * dt), rng);
  return dt * y / (1.0 + y);
}

// Offset of the (a.s. unique) argmin of a bridge from a to b whose minimum m
// is already known.
double bridge_argmin(double a, double b, double m, double dt, double s2, PathRng& rng) {
  const double alpha = a - m;
  const double beta = b - m;
  if (alpha <= 0.0) return 0.0;
  if (beta <= 0.0) return dt;
  double y;
  if (rng.uniform() * (alpha + beta) <= beta) {
    y = inverse_gaussian(alpha / beta, alpha * alpha / (s2 * dt), rng);
  } else {
    y = 1.0 / inverse_gaussian(beta / alpha, beta * beta / (s2 * dt), rng);
  }
  if (!std::isfinite(y)) return dt;
  return dt * y / (1.0 + y);
}

class JumpSampler {
 public:
  explicit JumpSampler(const LevyModel& m)
      : up_(m.up), down_(m.down), total_(m.up.rate + m.down.rate) {}

  double total_rate() const { return total_; }

  double operator()(PathRng& rng) const {
    const bool up = rng.uniform() * total_ <= up_.rate;
    const JumpSide& side = up ? up_ : down_;
    double u = rng.uniform();
    double decay = side.phases.back().decay;
    for (const auto& p : side.phases) {
      if (u <= p.weight) {
        decay = p.decay;
        break;
      }
      u -= p.weight;
    }
    const double size = rng.exponential(decay);
    return up ? size : -size;
  }

 private:
  const JumpSide& up_;
  const JumpSide& down_;
  double total_;
};

struct MinCandidate {
  bool bridge = false;
  double time = 0.0;  // point candidates
  double t0 = 0.0, dt = 0.0, a = 0.0, b = 0.0, m = 0.0;
};

double resolve_time(const MinCandidate& c, double s2, PathRng& rng) {
  if (!c.bridge) return c.time;
  return c.t0 + bridge_argmin(c.a, c.b, c.m, c.dt, s2, rng);
}

double draw_initial(const SimConfig& config, const StationarySampler& sampler, PathRng& rng) {
  switch (config.initial) {
    case InitialLaw::zero: return 0.0;
    case InitialLaw::exponential: return rng.exponential(config.initial_rate);
    case InitialLaw::stationary: break;
  }
  return sampler(rng);
}

void finish(QueueObservables& o) {
  o.q_min = std::max(o.q0 + o.x_min, 0.0);
  o.q_end = std::max(o.q0, -o.x_min) + o.x_end;
  if (o.idle) {
    o.unused = -(o.q0 + o.x_min);
  } else {
    o.tau = o.horizon;
    o.overshoot.reset();
    o.unused.reset();
  }
}

QueueObservables simulate_exact(const LevyModel& model, double q0, double horizon, PathRng& rng) {
  const double mu = model.drift;
  const double s2 = model.gauss_var;
  const double sigma = std::sqrt(s2);
  const JumpSampler jumps(model);
  const double level = -q0;

  QueueObservables o;
  o.horizon = horizon;
  o.q0 = q0;
  if (q0 <= 0.0) {
    o.idle = true;
    o.tau = 0.0;
    o.overshoot = 0.0;
  }
  double t = 0.0, x = 0.0, xmin = 0.0;
  MinCandidate best;

  for (;;) {
    const double dt = jumps.total_rate() > 0.0 ? rng.exponential(jumps.total_rate()) : kInf;
    const bool jump = t + dt < horizon;
    const double t1 = jump ? t + dt : horizon;
    const double len = t1 - t;
    double b;
    if (s2 > 0.0) {
      b = x + mu * len + sigma * std::sqrt(len) * rng.normal();
      const double v = s2 * len;
      const double u = rng.uniform();
      if (!o.idle && u <= bridge_below_prob(x, b, level, v)) {
        o.tau = t + bridge_first_passage(x - level, b - level, len, s2, rng);
        o.idle = true;
        o.overshoot = 0.0;
        const double rest = t1 - o.tau;
        const double m = rest > 0.0 ? bridge_min(level, b, s2 * rest, rng.uniform()) : std::min(level, b);
        if (m < xmin) {
          xmin = m;
          best = {true, 0.0, o.tau, rest, level, b, m};
        }
      } else if (u <= bridge_below_prob(x, b, xmin, v)) {
        const double m = bridge_min(x, b, v, u);
        if (m < xmin) {
          xmin = m;
          best = {true, 0.0, t, len, x, b, m};
        }
      }
    } else {
      b = x + mu * len;
      if (mu < 0.0) {
        if (!o.idle && b <= level) {
          o.idle = true;
          o.tau = t + (x - level) / (-mu);
          o.overshoot = 0.0;
        }
        if (b < xmin) {
          xmin = b;
          best = {false, t1};
        }
      }
    }
    x = b;
    t = t1;
    if (!jump) break;
    x += jumps(rng);
    if (!o.idle && x <= level) {
      o.idle = true;
      o.tau = t;
      o.overshoot = level - x;
    }
    if (x < xmin) {
      xmin = x;
      best = {false, t};
    }
  }
  o.x_end = x;
  o.x_min = xmin;
  o.g_min = resolve_time(best, s2, rng);
  finish(o);
  return o;
}

// Grid-mode path. When `coarse` is given it also receives the observables
// read on the grid of twice the step (every other grid point plus the jump
// epochs) of the same path; only tau and g_min can differ.
QueueObservables simulate_grid(const LevyModel& model, double q0, double horizon, double step, PathRng& rng,
                               QueueObservables* coarse = nullptr) {
  const double mu = model.drift;
  const double s2 = model.gauss_var;
  const double sigma = std::sqrt(s2);
  const JumpSampler jumps(model);
  const double level = -q0;

  QueueObservables o;
  o.horizon = horizon;
  o.q0 = q0;
  if (q0 <= 0.0) {
    o.idle = true;
    o.tau = 0.0;
    o.overshoot = 0.0;
  }
  double t = 0.0, x = 0.0, xmin = 0.0;
  struct Skeleton {
    double min = 0.0, time = 0.0;
    void add(double value, double at) {
      if (value <= min) {
        min = value;
        time = at;
      }
    }
  } fine, wide;
  double wide_tau = o.tau;
  bool wide_pending = false;

  double next_jump = jumps.total_rate() > 0.0 ? rng.exponential(jumps.total_rate()) : kInf;
  std::uint64_t cell = 0;
  for (;;) {
    const double grid_end = std::min(static_cast<double>(cell + 1) * step, horizon);
    const bool jump = next_jump < grid_end;
    const double t1 = jump ? next_jump : grid_end;
    const double len = t1 - t;
    const bool was_idle = o.idle;
    double b = x + mu * len;
    if (s2 > 0.0 && len > 0.0) {
      b += sigma * std::sqrt(len) * rng.normal();
      const double v = s2 * len;
      if (bridge_may_reach(x, b, xmin, v)) {
        const double u = rng.uniform();
        if (u <= bridge_below_prob(x, b, xmin, v)) xmin = std::min(xmin, bridge_min(x, b, v, u));
      }
    } else {
      xmin = std::min(xmin, b);
    }
    if (!o.idle && xmin <= level) {
      o.idle = true;
      o.tau = t1;
      o.overshoot = 0.0;
    }
    x = b;
    t = t1;
    fine.add(x, t);
    const bool wide_point = jump || t >= horizon || (cell + 1) % 2 == 0;
    if (o.idle && !was_idle) wide_pending = true;
    if (wide_point) {
      wide.add(x, t);
      if (wide_pending) {
        wide_tau = t;
        wide_pending = false;
      }
    }
    if (jump) {
      x += jumps(rng);
      if (!o.idle && x <= level) {
        o.idle = true;
        o.tau = t;
        wide_tau = t;
        o.overshoot = level - x;
      }
      xmin = std::min(xmin, x);
      fine.add(x, t);
      wide.add(x, t);
      next_jump = t + rng.exponential(jumps.total_rate());
    } else {
      if (t >= horizon) break;
      ++cell;
    }
  }
  o.x_end = x;
  o.x_min = xmin;
  o.g_min = fine.time;
  finish(o);
  if (coarse != nullptr) {
    *coarse = o;
    coarse->g_min = wide.time;
    if (o.idle) coarse->tau = wide_tau;
  }
  return o;
}

double observable(const QueueObservables& o, Observable which) {
  switch (which) {
    case Observable::q0: return o.q0;
    case Observable::x_end: return o.x_end;
    case Observable::x_min: return o.x_min;
    case Observable::q_end: return o.q_end;
    case Observable::q_min: return o.q_min;
    case Observable::horizon: return o.horizon;
    case Observable::g_min: return o.g_min;
    case Observable::tau: return o.tau;
    case Observable::unused: return o.unused.value_or(0.0);
    case Observable::overshoot: return o.overshoot.value_or(0.0);
  }
  return 0.0;
}

bool in_event(const QueueObservables& o, Restriction r) {
  switch (r) {
    case Restriction::none: return true;
    case Restriction::ongoing: return !o.idle;
    case Restriction::finished: return o.idle;
    case Restriction::positive_end: return o.x_end > 0.0;
  }
  return false;
}

void check_spec(const FunctionalSpec& s) {
  for (const auto& [obs, w] : s.exponent) {
    if (!std::isfinite(w)) throw Error(ErrorCode::invalid_argument, "non-finite functional weight");
    if ((obs == Observable::unused || obs == Observable::overshoot) && w != 0.0 &&
        s.restriction != Restriction::finished) {
      throw Error(ErrorCode::invalid_argument, "unused/overshoot are only defined on the event tau < e_q");
    }
  }
  if (s.kind != FunctionalKind::exponential && !(s.theta > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "residual-life functionals need theta > 0");
  }
}

// Sums for mean / ratio estimation.
struct Moments {
  double n = 0, f = 0, ff = 0, g = 0, gg = 0, fg = 0;

  void add(double fv, double gv) {
    n += 1;
    f += fv;
    ff += fv * fv;
    g += gv;
    gg += gv * gv;
    fg += fv * gv;
  }
  void merge(const Moments& o) {
    n += o.n;
    f += o.f;
    ff += o.ff;
    g += o.g;
    gg += o.gg;
    fg += o.fg;
  }
};

double exponential_functional(const QueueObservables& o, const FunctionalSpec& s) {
  double e = 0.0;
  for (const auto& [obs, w] : s.exponent)
    if (w != 0.0) e += w * observable(o, obs);
  return std::exp(-e);
}

bool is_ratio(const FunctionalSpec& s) { return s.conditional || s.kind != FunctionalKind::exponential; }

EstimateWithCI finalize(const Moments& m, const FunctionalSpec& spec, const SimConfig& config) {
  EstimateWithCI e;
  e.samples = static_cast<std::uint64_t>(m.n);
  e.seed = config.seed;
  const double n = m.n;
  if (!is_ratio(spec)) {
    e.mean = m.f / n;
    const double var = n > 1 ? std::max(0.0, (m.ff - n * e.mean * e.mean) / (n - 1)) : 0.0;
    e.se = std::sqrt(var / n);
  } else {
    if (m.g <= 0.0) throw Error(ErrorCode::invalid_argument, "conditioning event never observed");
    const double r = m.f / m.g;
    e.mean = r;
    const double resid = std::max(0.0, m.ff - 2.0 * r * m.fg + r * r * m.gg);
    const double gbar = m.g / n;
    e.se = n > 1 ? std::sqrt(resid / (n - 1) / n) / gbar : 0.0;
  }
  e.ci_low = e.mean - 1.959963984540054 * e.se;
  e.ci_high = e.mean + 1.959963984540054 * e.se;
  return e;
}

SimConfig joint_config(const std::vector<FunctionalSpec>& specs, const SimConfig& base) {
  SimConfig config = base;
  const auto& first = specs.front();
  for (const auto& s : specs) {
    check_spec(s);
    if (s.exponential_initial_rate != first.exponential_initial_rate || s.kind != first.kind) {
      throw Error(ErrorCode::invalid_argument, "functionals estimated together must share initial law and kind");
    }
  }
  if (first.exponential_initial_rate) {
    config.initial = InitialLaw::exponential;
    config.initial_rate = *first.exponential_initial_rate;
  }
  config.validate();
  return config;
}

constexpr std::uint64_t kChunk = 4096;

template <typename Work>
void run_chunks(std::uint64_t samples, unsigned threads, Work&& work) {
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  unsigned n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n = static_cast<unsigned>(std::min<std::uint64_t>(n, std::max<std::uint64_t>(chunks, 1)));
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t c; (c = next.fetch_add(1)) < chunks;) {
      work(c, c * kChunk, std::min(samples, (c + 1) * kChunk));
    }
  };
  if (n <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t index)
    : engine_(splitmix64(seed ^ splitmix64(index ^ 0x5851f42d4c957f2dULL))) {}

double PathRng::uniform() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

void SimConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, "invalid simulation config: " + msg); };
  if (!(q > 0.0) || !std::isfinite(q)) bad("q must be > 0");
  if (samples < 1) bad("samples must be >= 1");
  if (mode == SimMode::grid) {
    if (!(grid_step > 0.0)) bad("grid_step must be > 0");
    if (grid_step > 0.01 / q) bad("grid_step must be <= 0.01 / q");
  }
  if (burn_in_horizon < 0.0) bad("burn_in_horizon must be >= 0");
  if (initial == InitialLaw::exponential && !(initial_rate > 0.0)) bad("initial_rate must be > 0");
}

double lundberg_root(const LevyModel& model) {
  if (model.up.empty() && model.gauss_var == 0.0 && model.drift <= 0.0) return kInf;
  double hi;
  if (!model.up.empty()) {
    double eta = kInf;
    for (const auto& p : model.up.phases) eta = std::min(eta, p.decay);
    hi = eta * (1.0 - 1e-8);
  } else {
    hi = 1.0;
    while (laplace_exponent(model, hi).real() <= 0.0) hi *= 2.0;
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (laplace_exponent(model, mid).real() < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

SupremumSample sample_supremum(const LevyModel& model, PathRng& rng, double horizon_cap, double tail) {
  if (model.up.empty() && model.gauss_var == 0.0 && model.drift <= 0.0) return {0.0, 0.0};
  const double mu = model.drift;
  const double s2 = model.gauss_var;
  const double sigma = std::sqrt(s2);
  const JumpSampler jumps(model);
  const double gap = std::log(1.0 / tail) / lundberg_root(model);
  const double cap = 1.0;  // longest segment between stopping checks

  double t = 0.0, x = 0.0, top = 0.0;
  MinCandidate best;  // on the reflected path -X
  while (top - x < gap && t < horizon_cap) {
    const double dt = jumps.total_rate() > 0.0 ? rng.exponential(jumps.total_rate()) : kInf;
    const bool jump = dt <= cap && t + dt < horizon_cap;
    const double t1 = std::min({t + dt, t + cap, horizon_cap});
    const double len = t1 - t;
    double b;
    if (s2 > 0.0) {
      b = x + mu * len + sigma * std::sqrt(len) * rng.normal();
      const double v = s2 * len;
      const double u = rng.uniform();
      if (u <= bridge_below_prob(-x, -b, -top, v)) {
        const double m = bridge_min(-x, -b, v, u);
        if (-m > top) {
          top = -m;
          best = {true, 0.0, t, len, -x, -b, m};
        }
      }
    } else {
      b = x + mu * len;
      if (b > top) {
        top = b;
        best = {false, t1};
      }
    }
    x = b;
    t = t1;
    if (jump) {
      x += jumps(rng);
      if (x > top) {
        top = x;
        best = {false, t};
      }
    }
  }
  return {top, resolve_time(best, s2, rng)};
}

double derive_burn_in_horizon(const LadderExponents& lx, double tail) {
  for (double T = 1.0; T < 1e15; T *= 2.0) {
    const double bound = (1.0 - busy_period_transform(lx, 1.0 / T)) / (1.0 - std::exp(-1.0));
    if (bound < tail) return T;
  }
  throw Error(ErrorCode::internal, "no finite burn-in horizon found");
}

StationarySampler::StationarySampler(const LadderExponents& lx, double burn_in_horizon, bool force_supremum)
    : model_(&lx.model()) {
  const auto f = lx.at(0.0);
  const auto& zeros = f->ascending.zeros;
  const auto& poles = f->ascending.poles;
  bool ok = !force_supremum;
  for (const auto& z : zeros) ok = ok && z.imag() == 0.0 && z.real() > 0.0;
  if (ok) {
    double c = 1.0;
    for (const auto& z : zeros) c *= z.real();
    for (double p : poles) c /= p;
    atom_ = zeros.size() == poles.size() ? c : 0.0;
    double total = atom_;
    for (std::size_t i = 0; i < zeros.size(); ++i) {
      const double rho = zeros[i].real();
      double residue = c;
      for (double p : poles) residue *= p - rho;
      for (std::size_t k = 0; k < zeros.size(); ++k)
        if (k != i) residue /= zeros[k].real() - rho;
      const double weight = residue / rho;
      if (!(weight >= -1e-12 && weight <= 1.0 + 1e-12)) ok = false;
      components_.emplace_back(std::clamp(weight, 0.0, 1.0), rho);
      total += weight;
    }
    if (!(atom_ >= 0.0 && atom_ <= 1.0 + 1e-12) || std::abs(total - 1.0) > 1e-9) ok = false;
  }
  if (!ok) {
    method_ = Method::supremum;
    atom_ = 0.0;
    components_.clear();
    horizon_ = burn_in_horizon > 0.0 ? burn_in_horizon : derive_burn_in_horizon(lx);
  }
}

double StationarySampler::operator()(PathRng& rng) const {
  if (method_ == Method::supremum) return sample_supremum(*model_, rng, horizon_).value;
  double u = rng.uniform();
  if (u <= atom_) return 0.0;
  u -= atom_;
  for (const auto& [w, rate] : components_) {
    if (u <= w) return rng.exponential(rate);
    u -= w;
  }
  return rng.exponential(components_.back().second);
}

QueueObservables simulate_path(const LadderExponents& lx, const StationarySampler& q0_sampler, PathRng& rng,
                               const SimConfig& config) {
  const double horizon = rng.exponential(config.q);
  const double q0 = draw_initial(config, q0_sampler, rng);
  if (config.mode == SimMode::grid) return simulate_grid(lx.model(), q0, horizon, config.grid_step, rng);
  return simulate_exact(lx.model(), q0, horizon, rng);
}

double sample_busy_period(const LadderExponents& lx, const StationarySampler& q0_sampler, PathRng& rng) {
  const LevyModel& model = lx.model();
  const double q0 = q0_sampler(rng);
  if (q0 <= 0.0) return 0.0;
  const double mu = model.drift;
  const double s2 = model.gauss_var;
  const double sigma = std::sqrt(s2);
  const JumpSampler jumps(model);
  const double level = -q0;
  const double cap = 1.0;
  double t = 0.0, x = 0.0;
  for (;;) {
    const double dt = jumps.total_rate() > 0.0 ? rng.exponential(jumps.total_rate()) : kInf;
    const bool jump = dt <= cap;
    const double len = std::min(dt, cap);
    double b;
    if (s2 > 0.0) {
      b = x + mu * len + sigma * std::sqrt(len) * rng.normal();
      if (rng.uniform() <= bridge_below_prob(x, b, level, s2 * len)) {
        return t + bridge_first_passage(x - level, b - level, len, s2, rng);
      }
    } else {
      b = x + mu * len;
      if (b <= level) return t + (x - level) / (-mu);
    }
    x = b;
    t += len;
    if (jump) {
      x += jumps(rng);
      if (x <= level) return t;
    }
  }
}

FunctionalSpec functional_for(Formula f, const TransformArgs& a) {
  FunctionalSpec s;
  using O = Observable;
  switch (f) {
    case Formula::stationary: s.exponent = {{O::q0, a.theta}}; break;
    case Formula::min_workload: s.exponent = {{O::q_min, a.theta}}; break;
    case Formula::transient_factor: s.exponent = {{O::x_end, a.theta}, {O::x_min, -a.theta}}; break;
    case Formula::exp_initial_min:
      s.exponent = {{O::q_min, a.theta}};
      s.exponential_initial_rate = a.lambda;
      break;
    case Formula::busy_period: s.restriction = Restriction::finished; break;
    case Formula::min_on_ongoing:
      s.exponent = {{O::q_min, a.theta}};
      s.restriction = Restriction::ongoing;
      break;
    case Formula::ongoing_joint:
      s.exponent = {{O::q_min, a.theta}, {O::q_end, a.alpha}, {O::g_min, a.beta - a.gamma}, {O::horizon, a.gamma}};
      s.restriction = Restriction::ongoing;
      break;
    case Formula::unused_capacity:
      s.exponent = {{O::unused, a.theta}};
      s.restriction = Restriction::finished;
      break;
    case Formula::d_tau:
      s.exponent = {{O::overshoot, a.alpha}, {O::tau, a.u}};
      s.restriction = Restriction::finished;
      break;
    case Formula::finished_joint:
      s.exponent = {{O::overshoot, a.alpha}, {O::unused, a.beta}, {O::q_end, a.gamma},
                    {O::tau, a.u - a.v},     {O::g_min, a.v - a.w}, {O::horizon, a.w}};
      s.restriction = Restriction::finished;
      break;
    case Formula::conditional_min:
      s.exponent = {{O::q_min, a.theta}};
      s.restriction = Restriction::ongoing;
      s.conditional = true;
      break;
    case Formula::positive_part:
      s.exponent = {{O::x_end, a.theta}};
      s.restriction = Restriction::positive_end;
      break;
    case Formula::residual_busy_limit:
      s.kind = FunctionalKind::residual_life_tau;
      s.theta = a.theta;
      break;
    case Formula::residual_life_q0:
      s.kind = FunctionalKind::residual_life_q0;
      s.theta = a.theta;
      break;
    case Formula::limit_conditional_joint:
      throw Error(ErrorCode::invalid_argument, "limit_conditional_joint is a q -> 0 limit with no Monte Carlo functional");
  }
  return s;
}

void for_each_path(const LadderExponents& lx, const SimConfig& config,
                   const std::function<void(std::uint64_t, const QueueObservables&)>& visit) {
  config.validate();
  const StationarySampler sampler(lx, config.burn_in_horizon);
  for (std::uint64_t i = 0; i < config.samples; ++i) {
    PathRng rng(config.seed, i);
    visit(i, simulate_path(lx, sampler, rng, config));
  }
}

std::vector<EstimateWithCI> estimate_functionals(const LadderExponents& lx, const std::vector<FunctionalSpec>& specs,
                                                 const SimConfig& base) {
  if (specs.empty()) return {};
  const SimConfig config = joint_config(specs, base);
  const auto& first = specs.front();
  const StationarySampler sampler(lx, config.burn_in_horizon);

  const std::uint64_t chunks = (config.samples + kChunk - 1) / kChunk;
  std::vector<std::vector<Moments>> partial(chunks, std::vector<Moments>(specs.size()));

  run_chunks(config.samples, config.threads, [&](std::uint64_t c, std::uint64_t begin, std::uint64_t end) {
    auto& acc = partial[c];
    for (std::uint64_t i = begin; i < end; ++i) {
      PathRng rng(config.seed, i);
      if (first.kind != FunctionalKind::exponential) {
        const double z = first.kind == FunctionalKind::residual_life_tau ? sample_busy_period(lx, sampler, rng)
                                                                          : sampler(rng);
        for (std::size_t k = 0; k < specs.size(); ++k) {
          const double th = specs[k].theta;
          acc[k].add(-std::expm1(-th * z) / th, z);
        }
        continue;
      }
      const QueueObservables o = simulate_path(lx, sampler, rng, config);
      for (std::size_t k = 0; k < specs.size(); ++k) {
        const bool hit = in_event(o, specs[k].restriction);
        acc[k].add(hit ? exponential_functional(o, specs[k]) : 0.0, hit ? 1.0 : 0.0);
      }
    }
  });

  std::vector<EstimateWithCI> out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    Moments total;
    for (const auto& p : partial) total.merge(p[k]);
    out.push_back(finalize(total, specs[k], config));
  }
  return out;
}

NestedGridPath simulate_nested_grid_path(const LadderExponents& lx, const StationarySampler& q0_sampler, PathRng& rng,
                                         const SimConfig& config) {
  const double horizon = rng.exponential(config.q);
  const double q0 = draw_initial(config, q0_sampler, rng);
  NestedGridPath p;
  p.fine = simulate_grid(lx.model(), q0, horizon, config.grid_step, rng, &p.coarse);
  return p;
}

std::vector<RefinementEstimate> estimate_refinement(const LadderExponents& lx, const std::vector<FunctionalSpec>& specs,
                                                    const SimConfig& base) {
  if (specs.empty()) return {};
  if (base.mode != SimMode::grid) throw Error(ErrorCode::invalid_argument, "step refinement needs grid mode");
  for (const auto& s : specs) {
    if (s.kind != FunctionalKind::exponential) {
      throw Error(ErrorCode::invalid_argument, "step refinement applies to path functionals only");
    }
  }
  const SimConfig config = joint_config(specs, base);
  const StationarySampler sampler(lx, config.burn_in_horizon);
  const std::uint64_t chunks = (config.samples + kChunk - 1) / kChunk;
  // fine, coarse, coarse - fine
  std::vector<std::vector<std::array<Moments, 3>>> partial(chunks, std::vector<std::array<Moments, 3>>(specs.size()));

  run_chunks(config.samples, config.threads, [&](std::uint64_t c, std::uint64_t begin, std::uint64_t end) {
    auto& acc = partial[c];
    for (std::uint64_t i = begin; i < end; ++i) {
      PathRng rng(config.seed, i);
      const NestedGridPath p = simulate_nested_grid_path(lx, sampler, rng, config);
      for (std::size_t k = 0; k < specs.size(); ++k) {
        const bool hit = in_event(p.fine, specs[k].restriction);
        const double g = hit ? 1.0 : 0.0;
        const double f = hit ? exponential_functional(p.fine, specs[k]) : 0.0;
        const double fc = hit ? exponential_functional(p.coarse, specs[k]) : 0.0;
        acc[k][0].add(f, g);
        acc[k][1].add(fc, g);
        acc[k][2].add(fc - f, g);
      }
    }
  });

  std::vector<RefinementEstimate> out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    std::array<Moments, 3> total;
    for (const auto& p : partial)
      for (int j = 0; j < 3; ++j) total[j].merge(p[k][j]);
    RefinementEstimate r;
    r.fine = finalize(total[0], specs[k], config);
    r.coarse = finalize(total[1], specs[k], config);
    const EstimateWithCI shift = finalize(total[2], specs[k], config);
    r.shift = shift.mean;
    r.shift_se = shift.se;
    out.push_back(r);
  }
  return out;
}

EstimateWithCI estimate_functional(const LadderExponents& lx, const FunctionalSpec& spec, const SimConfig& config) {
  return estimate_functionals(lx, {spec}, config).front();
}

EstimateWithCI estimate_formula(const LadderExponents& lx, Formula f, const TransformArgs& args, SimConfig config) {
  const FunctionalSpec spec = functional_for(f, args);
  if (spec.kind == FunctionalKind::exponential) config.q = args.q;
  EstimateWithCI e = estimate_functional(lx, spec, config);
  e.formula = f;
  e.args = args;
  return e;
}

Comparison compare(const TransformValue& analytic, const EstimateWithCI& estimate, double threshold) {
  if (estimate.formula) {
    const auto& a = analytic.args;
    const auto& b = estimate.args;
    const bool same = *estimate.formula == analytic.formula && a.q == b.q && a.theta == b.theta &&
                      a.alpha == b.alpha && a.beta == b.beta && a.gamma == b.gamma && a.u == b.u && a.v == b.v &&
                      a.w == b.w && a.lambda == b.lambda;
    if (!same) throw Error(ErrorCode::invalid_argument, "estimate and analytic value describe different functionals");
  }
  Comparison c;
  c.analytic = analytic.value;
  c.mean = estimate.mean;
  c.se = estimate.se;
  const double diff = estimate.mean - analytic.value;
  if (estimate.se > 0.0) {
    c.z = diff / estimate.se;
  } else {
    c.z = diff == 0.0 ? 0.0 : std::copysign(kInf, diff);
  }
  c.pass = std::abs(c.z) <= threshold;
  return c;
}

void write_observables_csv(std::ostream& out, const LadderExponents& lx, const SimConfig& config) {
  out << "path,horizon,q0,x_end,x_min,g_min,q_end,q_min,tau,idle,unused,overshoot\n";
  std::ostringstream row;
  row.precision(17);
  for_each_path(lx, config, [&](std::uint64_t i, const QueueObservables& o) {
    row.str("");
    row << i << ',' << o.horizon << ',' << o.q0 << ',' << o.x_end << ',' << o.x_min << ',' << o.g_min << ','
        << o.q_end << ',' << o.q_min << ',' << o.tau << ',' << (o.idle ? 1 : 0) << ',';
    if (o.unused) row << *o.unused;
    row << ',';
    if (o.overshoot) row << *o.overshoot;
    row << '\n';
    out << row.str();
  });
}

}  // namespace lq
