#include "lqueue/levy_model.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "lqueue/errors.hpp"

namespace lq {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::invalid_model: return "invalid model";
    case ErrorCode::pole_proximity: return "pole proximity";
    case ErrorCode::root_clustering: return "root clustering";
    case ErrorCode::partition: return "root partition";
    case ErrorCode::residual_exceeded: return "residual exceeded";
    case ErrorCode::derivative_mismatch: return "derivative mismatch";
    case ErrorCode::small_q: return "q below threshold";
    case ErrorCode::oscillation: return "oscillation detected";
    case ErrorCode::unknown_formula: return "unknown formula";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown";
}

double JumpSide::mean_size() const {
  double m = 0.0;
  for (const auto& p : phases) m += p.weight / p.decay;
  return m;
}

namespace {

void check_pole(double pole, cplx distance) {
  if (std::abs(distance) < kPoleTolerance * pole) {
    std::ostringstream os;
    os << "argument within " << kPoleTolerance << " relative distance of pole at " << pole;
    throw Error(ErrorCode::pole_proximity, os.str());
  }
}

void check_side(const JumpSide& side, const char* name, std::vector<std::string>& out) {
  auto add = [&](const std::string& msg) { out.push_back(std::string(name) + ": " + msg); };
  if (!std::isfinite(side.rate) || side.rate < 0.0) add("rate must be finite and >= 0");
  if (side.rate == 0.0 && !side.phases.empty()) add("phases must be empty when rate is 0");
  if (side.rate > 0.0 && side.phases.empty()) add("phases must be non-empty when rate > 0");
  double total = 0.0;
  for (std::size_t j = 0; j < side.phases.size(); ++j) {
    const auto& p = side.phases[j];
    if (!(p.weight >= 0.0 && p.weight <= 1.0)) add("weight outside [0,1]");
    if (!(p.decay > 0.0) || !std::isfinite(p.decay)) add("decay must be finite and > 0");
    total += p.weight;
    for (std::size_t k = 0; k < j; ++k) {
      const double a = side.phases[k].decay;
      if (std::abs(a - p.decay) <= 1e-9 * std::max(a, p.decay)) add("decay rates must be distinct");
    }
  }
  if (side.rate > 0.0 && std::abs(total - 1.0) > 1e-12) add("weights must sum to 1");
}

}  // namespace

cplx levy_exponent(const LevyModel& model, cplx theta) {
  const cplx i(0.0, 1.0);
  cplx value = i * model.drift * theta - 0.5 * model.gauss_var * theta * theta;
  for (const auto& p : model.up.phases) {
    const cplx d = p.decay - i * theta;
    check_pole(p.decay, d);
    value += model.up.rate * p.weight * (p.decay / d - 1.0);
  }
  for (const auto& p : model.down.phases) {
    const cplx d = p.decay + i * theta;
    check_pole(p.decay, d);
    value += model.down.rate * p.weight * (p.decay / d - 1.0);
  }
  if (theta == cplx(0.0)) return cplx(0.0);
  return value;
}

cplx laplace_exponent(const LevyModel& model, cplx s) {
  cplx value = model.drift * s + 0.5 * model.gauss_var * s * s;
  for (const auto& p : model.up.phases) {
    const cplx d = p.decay - s;
    check_pole(p.decay, d);
    value += model.up.rate * p.weight * s / d;
  }
  for (const auto& p : model.down.phases) {
    const cplx d = p.decay + s;
    check_pole(p.decay, d);
    value -= model.down.rate * p.weight * s / d;
  }
  return value;
}

cplx laplace_exponent_derivative(const LevyModel& model, cplx s) {
  cplx value = model.drift + model.gauss_var * s;
  for (const auto& p : model.up.phases) {
    const cplx d = p.decay - s;
    check_pole(p.decay, d);
    value += model.up.rate * p.weight * p.decay / (d * d);
  }
  for (const auto& p : model.down.phases) {
    const cplx d = p.decay + s;
    check_pole(p.decay, d);
    value -= model.down.rate * p.weight * p.decay / (d * d);
  }
  return value;
}

double mean_drift(const LevyModel& model) {
  return model.drift + model.up.rate * model.up.mean_size() - model.down.rate * model.down.mean_size();
}

ValidationReport validate(const LevyModel& model) {
  ValidationReport report;
  auto& v = report.violations;
  if (!std::isfinite(model.drift)) v.push_back("drift must be finite");
  if (!std::isfinite(model.gauss_var) || model.gauss_var < 0.0) v.push_back("gauss_var must be finite and >= 0");
  check_side(model.up, "up", v);
  check_side(model.down, "down", v);
  if (model.gauss_var == 0.0 && model.drift == 0.0) {
    v.push_back("pure compound Poisson process (gauss_var = 0 and drift = 0)");
  }
  const double m = mean_drift(model);
  if (!(m < 0.0)) {
    std::ostringstream os;
    os << "nonnegative mean drift (E X_1 = " << m << ")";
    v.push_back(os.str());
  }
  return report;
}

void require_valid(const LevyModel& model) {
  const auto report = validate(model);
  if (!report.ok()) throw Error(ErrorCode::invalid_model, report.str());
}

std::string ValidationReport::str() const {
  if (ok()) return "ok";
  std::string s;
  for (const auto& msg : violations) {
    if (!s.empty()) s += "; ";
    s += msg;
  }
  return s;
}

std::uint64_t fingerprint(const LevyModel& model) {
  // FNV-1a over the raw parameter bits.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(model.drift);
  mix(model.gauss_var);
  for (const JumpSide* side : {&model.up, &model.down}) {
    mix(side->rate);
    mix(static_cast<double>(side->phases.size()));
    for (const auto& p : side->phases) {
      mix(p.weight);
      mix(p.decay);
    }
  }
  return h;
}

}  // namespace lq
