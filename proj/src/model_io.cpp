#include "lqueue/model_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "lqueue/errors.hpp"

namespace lq {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, std::string_view key, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line;
  if (!key.empty()) os << ", field '" << key << "'";
  os << ": " << msg;
  throw Error(ErrorCode::parse, os.str());
}

double parse_number(std::string_view s, int line, std::string_view key) {
  s = trim(s);
  double value = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    fail(line, key, "expected a number, got '" + std::string(s) + "'");
  }
  return value;
}

std::vector<Phase> parse_phases(std::string_view s, int line, std::string_view key) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    fail(line, key, "expected a list like [(weight, decay), ...]");
  }
  s = trim(s.substr(1, s.size() - 2));
  std::vector<Phase> phases;
  while (!s.empty()) {
    if (s.front() != '(') fail(line, key, "expected '(' to open a (weight, decay) pair");
    const auto close = s.find(')');
    if (close == std::string_view::npos) fail(line, key, "unterminated (weight, decay) pair");
    const auto inner = s.substr(1, close - 1);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) fail(line, key, "pair needs two comma-separated numbers");
    Phase p;
    p.weight = parse_number(inner.substr(0, comma), line, key);
    p.decay = parse_number(inner.substr(comma + 1), line, key);
    phases.push_back(p);
    s = trim(s.substr(close + 1));
    if (!s.empty()) {
      if (s.front() != ',') fail(line, key, "expected ',' between pairs");
      s = trim(s.substr(1));
      if (s.empty()) fail(line, key, "trailing ',' in phase list");
    }
  }
  return phases;
}

}  // namespace

LevyModel parse_model(std::string_view text) {
  LevyModel model;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "", "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = line.substr(eq + 1);
    if (!seen.insert(std::string(key)).second) fail(line_no, key, "duplicate key");

    if (key == "drift") {
      model.drift = parse_number(value, line_no, key);
    } else if (key == "gauss_var") {
      model.gauss_var = parse_number(value, line_no, key);
    } else if (key == "up.rate") {
      model.up.rate = parse_number(value, line_no, key);
    } else if (key == "down.rate") {
      model.down.rate = parse_number(value, line_no, key);
    } else if (key == "up.phases") {
      model.up.phases = parse_phases(value, line_no, key);
    } else if (key == "down.phases") {
      model.down.phases = parse_phases(value, line_no, key);
    } else {
      fail(line_no, key, "unknown key");
    }
  }
  if (!seen.contains("drift")) fail(line_no, "drift", "missing required key");
  return model;
}

LevyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_model(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string format_model(const LevyModel& model) {
  std::ostringstream os;
  os.precision(17);
  auto side = [&os](const char* name, const JumpSide& s) {
    os << name << ".rate = " << s.rate << '\n' << name << ".phases = [";
    for (std::size_t j = 0; j < s.phases.size(); ++j) {
      if (j) os << ", ";
      os << '(' << s.phases[j].weight << ", " << s.phases[j].decay << ')';
    }
    os << "]\n";
  };
  os << "drift = " << model.drift << '\n' << "gauss_var = " << model.gauss_var << '\n';
  side("up", model.up);
  side("down", model.down);
  return os.str();
}

}  // namespace lq
