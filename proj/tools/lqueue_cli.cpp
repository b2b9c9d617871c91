// Command-line front end over the lqueue C API.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lqueue/lqueue.h"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LibraryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(lq_status s) {
  if (s != LQ_OK) throw LibraryError(std::string(lq_status_name(s)) + ": " + lq_last_error());
}

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  lq_string_free(s);
  return out;
}

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json json_number(double x) {
  if (std::isfinite(x)) return x;
  return number(x);
}

// "a:b:n" (n evenly spaced points, both ends included), "x,y,z" or "x".
std::vector<double> parse_grid(const std::string& flag, const std::string& text) {
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("--" + flag + ": cannot read '" + s + "' as a number");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw UsageError("--" + flag + ": ranges are written start:stop:count");
    const double a = to_double(parts[0]);
    const double b = to_double(parts[1]);
    const double n = to_double(parts[2]);
    if (n < 1 || n != std::floor(n)) throw UsageError("--" + flag + ": count must be a positive integer");
    const auto count = static_cast<std::size_t>(n);
    if (count == 1 && a != b) throw UsageError("--" + flag + ": a one-point range needs start == stop");
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(count == 1 ? a : (i + 1 == count ? b : a + (b - a) * static_cast<double>(i) / (count - 1)));
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(p));
  if (out.empty()) throw UsageError("--" + flag + ": empty grid");
  return out;
}

const std::vector<std::string> kArgNames = {"q", "theta", "alpha", "beta", "gamma", "u", "v", "w", "lambda"};

double& arg_slot(lq_args& a, const std::string& name) {
  static const std::map<std::string, double lq_args::*> slots = {
      {"q", &lq_args::q},         {"theta", &lq_args::theta}, {"alpha", &lq_args::alpha},
      {"beta", &lq_args::beta},   {"gamma", &lq_args::gamma}, {"u", &lq_args::u},
      {"v", &lq_args::v},         {"w", &lq_args::w},         {"lambda", &lq_args::lambda}};
  return a.*slots.at(name);
}

struct Options {
  std::string model_path;
  std::string out_path;
  bool as_json = false;
  bool stamp = false;
  std::string formula = "stationary";
  std::map<std::string, std::string> grids;
  std::string x_grid;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
  std::string mode = "exact";
  double step = 1e-3;
  unsigned threads = 0;
  double burn_in = 0.0;
  double threshold = 3.0;
  double perturb_se = 0.0;
  std::string raw_path;
};

struct ModelHandle {
  lq_model* model = nullptr;
  ~ModelHandle() { lq_model_free(model); }
};

struct LadderHandle {
  lq_ladder* ladder = nullptr;
  ~LadderHandle() { lq_ladder_free(ladder); }
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

std::string cell(const json& v) {
  if (v.is_number_float()) return number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

class Run {
 public:
  Run(std::string subcommand, const Options& o) : sub_(std::move(subcommand)), opt_(o) {
    manifest_["tool"] = std::string("lqueue ") + lq_version();
    manifest_["subcommand"] = sub_;
    manifest_["model"] = o.model_path;
  }

  json& manifest() { return manifest_; }

  void write(const Table& t) const {
    std::ostringstream os;
    if (opt_.as_json) {
      json doc;
      doc["manifest"] = manifest_;
      doc["rows"] = json::array();
      for (const auto& r : t.rows) {
        json row;
        for (std::size_t i = 0; i < t.columns.size(); ++i) row[t.columns[i]] = r[i];
        doc["rows"].push_back(row);
      }
      os << doc.dump(2) << '\n';
    } else {
      for (const auto& [k, v] : manifest_.items()) os << "# " << k << ": " << cell(v) << '\n';
      for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
      os << '\n';
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell(r[i]);
        os << '\n';
      }
    }
    emit(opt_.out_path, os.str());
  }

  static void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
      std::cout << text;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw LibraryError("io: cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw LibraryError("io: failed writing '" + path + "'");
  }

  void finish_manifest() {
    manifest_["out"] = opt_.out_path.empty() ? "-" : opt_.out_path;
    if (opt_.stamp) manifest_["timestamp"] = timestamp();
  }

 private:
  static std::string timestamp() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::string sub_;
  const Options& opt_;
  json manifest_;
};

ModelHandle load(const Options& o) {
  ModelHandle m;
  check(lq_model_from_file(o.model_path.c_str(), &m.model));
  return m;
}

void add_fingerprint(Run& run, const ModelHandle& m) {
  std::uint64_t fp = 0;
  check(lq_model_fingerprint(m.model, &fp));
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fp);
  run.manifest()["model_fingerprint"] = buf;
}

LadderHandle ladder_for(const ModelHandle& m) {
  LadderHandle l;
  check(lq_ladder_create(m.model, 1.0, &l.ladder));
  return l;
}

lq_formula formula_id(const std::string& name) {
  lq_formula f = 0;
  if (lq_formula_from_name(name.c_str(), &f) != LQ_OK) {
    std::string known;
    for (std::size_t i = 0; i < lq_formula_count(); ++i) known += std::string(i ? ", " : "") + lq_formula_name(static_cast<lq_formula>(i));
    throw UsageError("unknown formula '" + name + "' (known: " + known + ")");
  }
  return f;
}

std::vector<std::string> formula_args(lq_formula f) {
  std::vector<std::string> out;
  std::stringstream ss(lq_formula_arguments(f));
  for (std::string p; std::getline(ss, p, ',');) out.push_back(p);
  return out;
}

// Cartesian product of the formula's argument grids, first argument slowest.
std::vector<lq_args> argument_tuples(const Options& o, const std::vector<std::string>& names, Run& run) {
  for (const auto& [flag, text] : o.grids) {
    if (std::find(names.begin(), names.end(), flag) == names.end()) {
      throw UsageError("formula '" + o.formula + "' does not take --" + flag);
    }
  }
  std::vector<lq_args> tuples{lq_args{}};
  for (const auto& name : names) {
    auto it = o.grids.find(name);
    if (it == o.grids.end()) continue;
    run.manifest()["grid." + name] = it->second;
    const auto values = parse_grid(name, it->second);
    std::vector<lq_args> next;
    for (const auto& t : tuples) {
      for (double v : values) {
        lq_args a = t;
        arg_slot(a, name) = v;
        next.push_back(a);
      }
    }
    tuples = std::move(next);
  }
  return tuples;
}

std::vector<json> arg_cells(const lq_args& a, const std::vector<std::string>& names) {
  std::vector<json> out;
  lq_args copy = a;
  for (const auto& n : names) out.push_back(arg_slot(copy, n));
  return out;
}

lq_sim_config sim_config(const Options& o, Run& run) {
  lq_sim_config c;
  lq_sim_config_default(&c);
  if (o.mode == "exact") {
    c.mode = LQ_EXACT;
  } else if (o.mode == "grid") {
    c.mode = LQ_GRID;
  } else {
    throw UsageError("--mode must be exact or grid");
  }
  c.grid_step = o.step;
  c.samples = o.samples;
  c.seed = o.seed;
  c.threads = o.threads;
  c.burn_in_horizon = o.burn_in;
  run.manifest()["samples"] = o.samples;
  run.manifest()["seed"] = o.seed;
  run.manifest()["mode"] = o.mode;
  if (c.mode == LQ_GRID) run.manifest()["step"] = o.step;
  return c;
}

int cmd_validate(const Options& o) {
  ModelHandle m = load(o);
  int valid = 0;
  char* report = nullptr;
  check(lq_model_validate(m.model, &valid, &report));
  const std::string text = take(report);
  double drift = 0.0;
  check(lq_model_mean_drift(m.model, &drift));
  if (o.as_json) {
    json doc;
    doc["model"] = o.model_path;
    doc["valid"] = valid == 1;
    doc["mean_drift"] = json_number(drift);
    doc["violations"] = json::array();
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);)
      if (!line.empty()) doc["violations"].push_back(line);
    Run::emit(o.out_path, doc.dump(2) + "\n");
  } else {
    std::string body = o.model_path + ": " + (valid ? "valid" : "invalid") + " (mean drift " + number(drift) + ")\n";
    if (!valid) body += text + (text.empty() || text.back() == '\n' ? "" : "\n");
    Run::emit(o.out_path, body);
  }
  return valid ? kExitOk : kExitFail;
}

std::string root_list(const lq_ladder* l, double q, lq_side side) {
  std::size_t count = 0;
  check(lq_wh_roots(l, q, side, 0, nullptr, nullptr, &count));
  std::vector<double> re(count), im(count);
  check(lq_wh_roots(l, q, side, count, re.data(), im.data(), &count));
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    out += (i ? ";" : "") + number(re[i]);
    if (im[i] != 0.0) out += (im[i] > 0 ? "+" : "") + number(im[i]) + "i";
  }
  return out;
}

int cmd_wh(const Options& o) {
  Run run("wh", o);
  ModelHandle m = load(o);
  add_fingerprint(run, m);
  LadderHandle l = ladder_for(m);
  auto it = o.grids.find("q");
  if (it == o.grids.end()) throw UsageError("wh needs --q");
  run.manifest()["grid.q"] = it->second;
  run.finish_manifest();
  Table t;
  t.columns = {"q", "leading", "ascending_gauge", "ascending_roots", "descending_gauge", "descending_roots",
               "product_residual", "identity_residual"};
  for (double q : parse_grid("q", it->second)) {
    lq_wh_info info;
    check(lq_wh_info_at(l.ladder, q, &info));
    t.rows.push_back({q, info.leading, info.ascending_gauge, root_list(l.ladder, q, LQ_ASCENDING),
                      info.descending_gauge, root_list(l.ladder, q, LQ_DESCENDING), info.product_residual,
                      info.identity_residual});
  }
  run.write(t);
  return kExitOk;
}

int cmd_transform(const Options& o) {
  Run run("transform", o);
  ModelHandle m = load(o);
  add_fingerprint(run, m);
  LadderHandle l = ladder_for(m);
  const lq_formula f = formula_id(o.formula);
  run.manifest()["formula"] = o.formula;
  const auto names = formula_args(f);
  const auto tuples = argument_tuples(o, names, run);
  run.finish_manifest();
  Table t;
  t.columns.assign(names.begin(), names.end());
  t.columns.push_back("value");
  for (const auto& a : tuples) {
    double v = 0.0;
    check(lq_transform(l.ladder, f, &a, &v));
    auto row = arg_cells(a, names);
    row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  run.write(t);
  return kExitOk;
}

// Estimates every tuple, sharing paths among tuples with equal q and lambda.
std::vector<lq_estimate> estimate_all(const lq_ladder* l, lq_formula f, const std::vector<lq_args>& tuples,
                                      const lq_sim_config& c) {
  std::vector<lq_estimate> out(tuples.size());
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < tuples.size(); ++i) groups[{tuples[i].q, tuples[i].lambda}].push_back(i);
  for (const auto& [key, index] : groups) {
    std::vector<lq_args> batch;
    for (std::size_t i : index) batch.push_back(tuples[i]);
    std::vector<lq_estimate> est(batch.size());
    check(lq_estimate_batch(l, f, batch.size(), batch.data(), &c, est.data()));
    for (std::size_t k = 0; k < index.size(); ++k) out[index[k]] = est[k];
  }
  return out;
}

void write_raw(const Options& o, const lq_ladder* l, lq_sim_config c, const std::vector<lq_args>& tuples) {
  if (o.raw_path.empty()) return;
  for (const auto& a : tuples) {
    if (a.q != tuples.front().q) throw UsageError("--raw needs a single q value");
  }
  c.q = tuples.front().q;
  char* csv = nullptr;
  check(lq_simulate_csv(l, &c, &csv));
  Run::emit(o.raw_path, take(csv));
}

int cmd_simulate(const Options& o) {
  Run run("simulate", o);
  ModelHandle m = load(o);
  add_fingerprint(run, m);
  LadderHandle l = ladder_for(m);
  const lq_formula f = formula_id(o.formula);
  run.manifest()["formula"] = o.formula;
  const auto names = formula_args(f);
  const auto tuples = argument_tuples(o, names, run);
  const lq_sim_config c = sim_config(o, run);
  if (!o.raw_path.empty()) run.manifest()["raw"] = o.raw_path;
  run.finish_manifest();
  const auto est = estimate_all(l.ladder, f, tuples, c);
  Table t;
  t.columns.assign(names.begin(), names.end());
  for (const char* c2 : {"mean", "se", "ci_low", "ci_high", "samples"}) t.columns.push_back(c2);
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    auto row = arg_cells(tuples[i], names);
    row.insert(row.end(), {est[i].mean, est[i].se, est[i].ci_low, est[i].ci_high, est[i].samples});
    t.rows.push_back(std::move(row));
  }
  run.write(t);
  write_raw(o, l.ladder, c, tuples);
  return kExitOk;
}

int cmd_compare(const Options& o) {
  Run run("compare", o);
  ModelHandle m = load(o);
  add_fingerprint(run, m);
  LadderHandle l = ladder_for(m);
  const lq_formula f = formula_id(o.formula);
  run.manifest()["formula"] = o.formula;
  const auto names = formula_args(f);
  const auto tuples = argument_tuples(o, names, run);
  const lq_sim_config c = sim_config(o, run);
  run.manifest()["threshold"] = o.threshold;
  if (o.perturb_se != 0.0) run.manifest()["perturb_se"] = o.perturb_se;
  run.finish_manifest();
  const auto est = estimate_all(l.ladder, f, tuples, c);
  Table t;
  t.columns.assign(names.begin(), names.end());
  for (const char* c2 : {"analytic", "mean", "se", "z", "pass"}) t.columns.push_back(c2);
  bool all = true;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    double analytic = 0.0;
    check(lq_transform(l.ladder, f, &tuples[i], &analytic));
    analytic += o.perturb_se * est[i].se;
    double z = 0.0;
    int pass = 0;
    check(lq_compare(analytic, &est[i], o.threshold, &z, &pass));
    all = all && pass;
    auto row = arg_cells(tuples[i], names);
    row.insert(row.end(), {analytic, est[i].mean, est[i].se, json_number(z), pass});
    t.rows.push_back(std::move(row));
  }
  run.write(t);
  return all ? kExitOk : kExitFail;
}

int cmd_invert(const Options& o) {
  Run run("invert", o);
  ModelHandle m = load(o);
  add_fingerprint(run, m);
  LadderHandle l = ladder_for(m);
  const lq_formula f = formula_id(o.formula);
  if (!lq_formula_invertible(f)) throw UsageError("formula '" + o.formula + "' cannot be inverted");
  run.manifest()["formula"] = o.formula;
  auto names = formula_args(f);
  names.erase(std::remove(names.begin(), names.end(), "theta"), names.end());
  const auto tuples = argument_tuples(o, names, run);
  if (tuples.size() != 1) throw UsageError("invert takes single values for the non-theta arguments");
  if (o.x_grid.empty()) throw UsageError("invert needs --x");
  run.manifest()["grid.x"] = o.x_grid;
  run.finish_manifest();
  const auto xs = parse_grid("x", o.x_grid);
  std::vector<double> cdf(xs.size());
  double atom = 0.0;
  check(lq_invert(l.ladder, f, &tuples.front(), xs.size(), xs.data(), nullptr, cdf.data(), &atom));
  Table t;
  t.columns = {"x", "cdf", "atom"};
  for (std::size_t i = 0; i < xs.size(); ++i) t.rows.push_back({xs[i], cdf[i], atom});
  run.write(t);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Levy-driven queue: Wiener-Hopf factors, transforms, simulation and inversion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("lqueue ") + lq_version());
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", o.model_path, "model file")->required();
    sub->add_option("--out", o.out_path, "output path (default stdout)");
    sub->add_flag("--json", o.as_json, "write JSON instead of CSV");
  };
  auto stamped = [&](CLI::App* sub) {
    sub->add_flag("--stamp", o.stamp, "record a UTC timestamp (SOURCE_DATE_EPOCH if set) in the manifest");
  };
  auto grids = [&](CLI::App* sub, const std::vector<std::string>& names) {
    for (const auto& n : names) {
      sub->add_option_function<std::string>("--" + n, [&o, n](const std::string& v) { o.grids[n] = v; },
                                            "grid: start:stop:count, comma list or value");
    }
  };
  auto formula = [&](CLI::App* sub) { sub->add_option("--formula", o.formula, "transform name")->required(); };
  auto simulation = [&](CLI::App* sub) {
    sub->add_option("--samples", o.samples, "paths per grid group")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--mode", o.mode, "exact or grid");
    sub->add_option("--step", o.step, "grid-mode step");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    sub->add_option("--burn-in", o.burn_in, "horizon cap for the supremum-based stationary sampler");
  };

  auto* validate = app.add_subcommand("validate", "check a model file");
  common(validate);

  auto* wh = app.add_subcommand("wh", "dump the Wiener-Hopf factorization at each q");
  common(wh);
  stamped(wh);
  grids(wh, {"q"});

  auto* transform = app.add_subcommand("transform", "evaluate a transform over argument grids");
  common(transform);
  stamped(transform);
  formula(transform);
  grids(transform, kArgNames);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates over argument grids");
  common(simulate);
  stamped(simulate);
  formula(simulate);
  grids(simulate, kArgNames);
  simulation(simulate);
  simulate->add_option("--raw", o.raw_path, "also write per-path observables to this CSV");

  auto* cmp = app.add_subcommand("compare", "compare Monte Carlo estimates with the transforms");
  common(cmp);
  stamped(cmp);
  formula(cmp);
  grids(cmp, kArgNames);
  simulation(cmp);
  cmp->add_option("--threshold", o.threshold, "largest accepted |z|");
  cmp->add_option("--perturb-se", o.perturb_se, "shift the analytic value by this many standard errors");

  auto* invert = app.add_subcommand("invert", "invert a transform into a CDF");
  common(invert);
  stamped(invert);
  invert->add_option("--formula", o.formula, "invertible transform name (default stationary)");
  grids(invert, {"q", "alpha", "lambda"});
  invert->add_option("--x", o.x_grid, "points: start:stop:count, comma list or value")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*wh) return cmd_wh(o);
    if (*transform) return cmd_transform(o);
    if (*simulate) return cmd_simulate(o);
    if (*cmp) return cmd_compare(o);
    if (*invert) return cmd_invert(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
