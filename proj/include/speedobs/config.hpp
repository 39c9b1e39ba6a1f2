// Copyright 2026 The speedobs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Sectioned key = value run configuration.
//
//   # comment
//   [model]        name = spider-crane | manipulator | constant, physical
//                  constants, friction = r1, r2, ..., known = 1, 0, ...
//   [observer]     kind = prop1 | prop2 | none, lambda, psi3, psi4_extra,
//                  psi5_extra
//   [initial]      q, mom, exact, p_hat, r_hat, d_hat, q_bar, p_bar, r
//   [input]        channel = amplitude, frequency, phase, cos|sin (repeat)
//   [disturbance]  step = time: d1, d2, ... (repeat; first time is 0)
//   [sim]          t_final, dt, stride
//   [output]       directory, emit_svg
//
// Matrices are written row by row with ';' between rows.
#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <locale>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "speedobs/linalg.hpp"
#include "speedobs/model.hpp"
#include "speedobs/simulation.hpp"
#include "speedobs/systems.hpp"

namespace speedobs {

/// Parse or validation failure; `line` is 0 when no single line is to blame.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : "") +
                           ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct OutputSpec {
  std::string directory;
  bool emit_svg = false;
};

struct RunConfig {
  Scenario scenario;
  OutputSpec output;
};

namespace detail {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

/// Reads a section's entries, enforcing the key set and tracking lines.
class Section {
 public:
  Section(std::string source, std::string name, std::vector<Entry> entries)
      : source_(std::move(source)), name_(std::move(name)),
        entries_(std::move(entries)) {}

  [[noreturn]] void fail(const Entry& e, const std::string& msg) const {
    throw ConfigError(source_, e.line, "[" + name_ + "] " + e.key + ": " + msg);
  }

  void allow(const std::set<std::string>& keys,
             const std::set<std::string>& repeatable = {}) const {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
      if (!keys.count(e.key) && !repeatable.count(e.key)) {
        fail(e, "unknown key");
      }
      if (!repeatable.count(e.key) && !seen.insert(e.key).second) {
        fail(e, "duplicate key");
      }
    }
  }

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }

  std::vector<const Entry*> all(const std::string& key) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries_) {
      if (e.key == key) out.push_back(&e);
    }
    return out;
  }

  const Entry& required(const std::string& key) const {
    if (const Entry* e = find(key)) return *e;
    throw ConfigError(source_, 0,
                      "[" + name_ + "] missing required key '" + key + "'");
  }

  double number(const Entry& e, const std::string& text) const {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != last) {
      fail(e, "expected a number, got '" + text + "'");
    }
    if (!std::isfinite(v)) fail(e, "value must be finite");
    return v;
  }

  double number(const Entry& e) const { return number(e, e.value); }

  std::optional<double> number(const std::string& key) const {
    if (const Entry* e = find(key)) return number(*e);
    return std::nullopt;
  }

  double positive(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    const double v = number(*e);
    if (!(v > 0)) fail(*e, "must be > 0");
    return v;
  }

  double non_negative(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    const double v = number(*e);
    if (!(v >= 0)) fail(*e, "must be >= 0");
    return v;
  }

  Vec vector(const Entry& e, const std::string& text) const {
    const auto parts = split(text, ',');
    Vec v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = number(e, parts[i]);
    }
    return v;
  }

  std::optional<Vec> vector(const std::string& key, Eigen::Index n) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    Vec v = vector(*e, e->value);
    if (v.size() != n) {
      fail(*e, "expected " + std::to_string(n) + " entries, got " +
                   std::to_string(v.size()));
    }
    return v;
  }

  Mat matrix(const Entry& e) const {
    const auto rows = split(e.value, ';');
    std::vector<Vec> parsed;
    for (const auto& r : rows) parsed.push_back(vector(e, r));
    const auto nr = static_cast<Eigen::Index>(parsed.size());
    Mat m(nr, parsed.empty() ? 0 : parsed.front().size());
    for (Eigen::Index i = 0; i < nr; ++i) {
      if (parsed[i].size() != m.cols()) fail(e, "ragged matrix rows");
      m.row(i) = parsed[i].transpose();
    }
    return m;
  }

  bool boolean(const Entry& e, const std::string& text) const {
    if (text == "1" || text == "true" || text == "yes") return true;
    if (text == "0" || text == "false" || text == "no") return false;
    fail(e, "expected a boolean, got '" + text + "'");
  }

  std::optional<bool> boolean(const std::string& key) const {
    if (const Entry* e = find(key)) return boolean(*e, e->value);
    return std::nullopt;
  }

  std::optional<std::vector<bool>> mask(const std::string& key,
                                        Eigen::Index n) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    std::vector<bool> out;
    for (const auto& p : split(e->value, ',')) out.push_back(boolean(*e, p));
    if (static_cast<Eigen::Index>(out.size()) != n) {
      fail(*e, "expected " + std::to_string(n) + " flags");
    }
    return out;
  }

 private:
  std::string source_;
  std::string name_;
  std::vector<Entry> entries_;
};

inline const std::set<std::string>& section_names() {
  static const std::set<std::string> names{
      "model", "observer", "initial", "input", "disturbance", "sim", "output"};
  return names;
}

inline Eigen::Index model_dof(const ModelSpec& spec) {
  if (const auto* c = std::get_if<ConstantInertiaParams>(&spec)) {
    return c->mass.rows();
  }
  if (std::holds_alternative<ManipulatorParams>(spec)) return 4;
  return 3;
}

inline ModelSpec parse_model(const Section& sec) {
  const Entry& name = sec.required("name");
  if (name.value == "spider-crane") {
    sec.allow({"name", "ring_mass", "payload_mass", "cable_length", "gravity",
               "friction", "known", "factor"});
    SpiderCraneParams p;
    p.ring_mass = sec.positive("ring_mass", p.ring_mass);
    p.payload_mass = sec.positive("payload_mass", p.payload_mass);
    p.cable_length = sec.positive("cable_length", p.cable_length);
    p.gravity = sec.non_negative("gravity", p.gravity);
    if (auto r = sec.vector("friction", 3)) p.friction = *r;
    if (auto k = sec.mask("known", 3)) p.known = *k;
    if (const Entry* f = sec.find("factor")) {
      if (f->value == "upper") {
        p.factor = CraneFactor::upper;
      } else if (f->value == "lower-cholesky") {
        p.factor = CraneFactor::lower_cholesky;
      } else {
        sec.fail(*f, "expected upper or lower-cholesky");
      }
    }
    return p;
  }
  if (name.value == "manipulator") {
    sec.allow({"name", "inertia", "base_mass", "link_mass", "link_length",
               "elastic_stiffness", "friction", "known"});
    ManipulatorParams p;
    p.inertia = sec.positive("inertia", p.inertia);
    p.base_mass = sec.positive("base_mass", p.base_mass);
    p.link_mass = sec.positive("link_mass", p.link_mass);
    p.link_length = sec.positive("link_length", p.link_length);
    p.elastic_stiffness = sec.non_negative("elastic_stiffness", p.elastic_stiffness);
    if (auto r = sec.vector("friction", 4)) p.friction = *r;
    if (auto k = sec.mask("known", 4)) p.known = *k;
    return p;
  }
  if (name.value == "constant") {
    sec.allow({"name", "mass", "stiffness", "friction", "known"});
    ConstantInertiaParams p;
    if (const Entry* e = sec.find("mass")) {
      p.mass = sec.matrix(*e);
      if (p.mass.rows() != p.mass.cols() || p.mass.rows() == 0) {
        sec.fail(*e, "mass must be a non-empty square matrix");
      }
    }
    const Eigen::Index n = p.mass.rows();
    p.stiffness = Mat::Zero(n, n);
    p.friction = Vec::Zero(n);
    p.known.assign(static_cast<std::size_t>(n), false);
    if (const Entry* e = sec.find("stiffness")) {
      p.stiffness = sec.matrix(*e);
      if (p.stiffness.rows() != n || p.stiffness.cols() != n) {
        sec.fail(*e, "stiffness must be " + std::to_string(n) + "x" +
                         std::to_string(n));
      }
    }
    if (auto r = sec.vector("friction", n)) p.friction = *r;
    if (auto k = sec.mask("known", n)) p.known = *k;
    return p;
  }
  sec.fail(name, "unknown model '" + name.value +
                     "' (expected spider-crane, manipulator or constant)");
}

inline void parse_observer(const Section& sec, Scenario& sc) {
  sec.allow({"kind", "lambda", "psi3", "psi4_extra", "psi5_extra"});
  const Entry& kind = sec.required("kind");
  if (kind.value == "prop1") {
    sc.observer = ObserverKind::prop1;
  } else if (kind.value == "prop2") {
    sc.observer = ObserverKind::prop2;
  } else if (kind.value == "none") {
    sc.observer = ObserverKind::none;
  } else {
    sec.fail(kind, "expected prop1, prop2 or none");
  }
  sc.obs1.lambda = sec.positive("lambda", sc.obs1.lambda);
  sc.obs2.psi3 = sec.positive("psi3", sc.obs2.psi3);
  sc.obs2.psi4_extra = sec.positive("psi4_extra", sc.obs2.psi4_extra);
  sc.obs2.psi5_extra = sec.positive("psi5_extra", sc.obs2.psi5_extra);
}

inline void parse_initial(const Section& sec, Scenario& sc, Eigen::Index n,
                          Eigen::Index s) {
  sec.allow({"q", "mom", "exact", "p_hat", "r_hat", "d_hat", "q_bar", "p_bar",
             "r"});
  if (auto v = sec.vector("q", n)) sc.q0 = *v;
  if (auto v = sec.vector("mom", n)) sc.mom0 = *v;
  sc.init.exact = sec.boolean("exact").value_or(false);
  sc.init.p_hat = sec.vector("p_hat", n);
  sc.init.r_hat = sec.vector("r_hat", s);
  sc.init.d_hat = sec.vector("d_hat", n);
  sc.init.q_bar = sec.vector("q_bar", n);
  sc.init.p_bar = sec.vector("p_bar", n);
  if (const Entry* e = sec.find("r")) {
    const double r = sec.number(*e);
    if (!(r >= 1.0)) sec.fail(*e, "scaling factor must be >= 1");
    sc.init.r = r;
  }
}

inline void parse_input(const Section& sec, Scenario& sc, Eigen::Index m) {
  sec.allow({}, {"channel"});
  sc.input.clear();
  for (const Entry* e : sec.all("channel")) {
    const auto parts = split(e->value, ',');
    if (parts.size() != 4) {
      sec.fail(*e, "expected amplitude, frequency, phase, waveform");
    }
    InputChannel ch;
    ch.amplitude = sec.number(*e, parts[0]);
    ch.frequency = sec.number(*e, parts[1]);
    ch.phase = sec.number(*e, parts[2]);
    if (parts[3] == "cos") {
      ch.waveform = Waveform::cos;
    } else if (parts[3] == "sin") {
      ch.waveform = Waveform::sin;
    } else {
      sec.fail(*e, "waveform must be cos or sin");
    }
    sc.input.push_back(ch);
  }
  if (!sc.input.empty() && static_cast<Eigen::Index>(sc.input.size()) != m) {
    sec.fail(*sec.all("channel").back(),
             "model has " + std::to_string(m) + " inputs but " +
                 std::to_string(sc.input.size()) + " channels are listed");
  }
}

inline void parse_disturbance(const Section& sec, Scenario& sc, Eigen::Index n) {
  sec.allow({}, {"step"});
  std::vector<DisturbanceSchedule::Step> steps;
  for (const Entry* e : sec.all("step")) {
    const auto colon = e->value.find(':');
    if (colon == std::string::npos) sec.fail(*e, "expected 'time: d1, d2, ...'");
    const double t = sec.number(*e, trim(e->value.substr(0, colon)));
    Vec d = sec.vector(*e, trim(e->value.substr(colon + 1)));
    if (d.size() != n) {
      sec.fail(*e, "expected " + std::to_string(n) + " disturbance entries");
    }
    if (steps.empty() && t != 0.0) sec.fail(*e, "first switch time must be 0");
    if (!steps.empty() && !(t > steps.back().time)) {
      sec.fail(*e, "switch times must be strictly increasing");
    }
    steps.push_back({t, std::move(d)});
  }
  sc.disturbance = steps.empty() ? DisturbanceSchedule(Vec(Vec::Zero(n)))
                                 : DisturbanceSchedule(std::move(steps));
}

inline void parse_sim(const Section& sec, Scenario& sc) {
  sec.allow({"t_final", "dt", "stride"});
  const Entry& dt = sec.required("dt");
  sc.dt = sec.number(dt);
  if (!(sc.dt > 0)) sec.fail(dt, "must be > 0");
  const Entry& tf = sec.required("t_final");
  sc.t_final = sec.number(tf);
  if (!(sc.t_final >= sc.dt)) sec.fail(tf, "must be >= dt");
  if (const Entry* e = sec.find("stride")) {
    const double v = sec.number(*e);
    if (!(v >= 1) || v != std::floor(v)) sec.fail(*e, "must be a positive integer");
    sc.stride = static_cast<int>(v);
  }
}

inline void parse_output(const Section& sec, OutputSpec& out) {
  sec.allow({"directory", "emit_svg"});
  if (const Entry* e = sec.find("directory")) out.directory = e->value;
  out.emit_svg = sec.boolean("emit_svg").value_or(false);
}

}  // namespace detail

/// Parses a configuration; every failure is a ConfigError naming the line
/// and key at fault.
inline RunConfig parse_config(std::istream& is,
                              const std::string& source = "<config>") {
  using detail::Entry;
  std::map<std::string, std::vector<Entry>> sections;
  std::map<std::string, int> header_line;
  std::string current;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(source, line, "malformed section header");
      current = detail::trim(text.substr(1, text.size() - 2));
      if (!detail::section_names().count(current)) {
        throw ConfigError(source, line, "unknown section [" + current + "]");
      }
      if (header_line.count(current)) {
        throw ConfigError(source, line, "duplicate section [" + current + "]");
      }
      header_line[current] = line;
      sections[current];
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source, line, "expected 'key = value'");
    }
    if (current.empty()) {
      throw ConfigError(source, line, "entry outside of any section");
    }
    Entry e{detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1)),
            line};
    if (e.key.empty()) throw ConfigError(source, line, "empty key");
    sections[current].push_back(std::move(e));
  }
  auto section = [&](const std::string& name) {
    return detail::Section(source, name, sections[name]);
  };
  for (const char* req : {"model", "observer", "sim"}) {
    if (!sections.count(req)) {
      throw ConfigError(source, 0, std::string("missing section [") + req + "]");
    }
  }

  RunConfig cfg;
  Scenario& sc = cfg.scenario;
  sc.model = detail::parse_model(section("model"));
  const Eigen::Index n = detail::model_dof(sc.model);
  std::size_t s = 0;
  Eigen::Index m = 0;
  try {
    const MechanicalModel model = make_model(sc.model);
    s = model.friction.unknown_count();
    m = model.m;
  } catch (const std::exception& e) {
    throw ConfigError(source, header_line["model"], std::string("[model] ") + e.what());
  }
  sc.q0 = Vec::Zero(n);
  sc.mom0 = Vec::Zero(n);
  detail::parse_observer(section("observer"), sc);
  detail::parse_initial(section("initial"), sc, n, static_cast<Eigen::Index>(s));
  detail::parse_input(section("input"), sc, m);
  detail::parse_disturbance(section("disturbance"), sc, n);
  detail::parse_sim(section("sim"), sc);
  detail::parse_output(section("output"), cfg.output);
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text,
                                   const std::string& source = "<config>") {
  std::istringstream is(text);
  return parse_config(is, source);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), 0, "cannot open file");
  return parse_config(is, path.string());
}

namespace detail {

inline void put_vector(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
}

inline void put_mask(std::ostream& os, const std::vector<bool>& k) {
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? ", " : "") << (k[i] ? 1 : 0);
}

inline void put_matrix(std::ostream& os, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    put_vector(os, m.row(i).transpose());
  }
}

}  // namespace detail

/// Complete configuration text with every value spelled out; parsing it
/// yields the same scenario.
inline std::string to_config_text(const RunConfig& cfg) {
  const Scenario& sc = cfg.scenario;
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << "[model]\n";
  std::visit(
      [&os](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SpiderCraneParams>) {
          os << "name = spider-crane\n"
             << "ring_mass = " << p.ring_mass << '\n'
             << "payload_mass = " << p.payload_mass << '\n'
             << "cable_length = " << p.cable_length << '\n'
             << "gravity = " << p.gravity << '\n'
             << "factor = "
             << (p.factor == CraneFactor::upper ? "upper" : "lower-cholesky")
             << '\n';
        } else if constexpr (std::is_same_v<P, ManipulatorParams>) {
          os << "name = manipulator\n"
             << "inertia = " << p.inertia << '\n'
             << "base_mass = " << p.base_mass << '\n'
             << "link_mass = " << p.link_mass << '\n'
             << "link_length = " << p.link_length << '\n'
             << "elastic_stiffness = " << p.elastic_stiffness << '\n';
        } else {
          os << "name = constant\nmass = ";
          detail::put_matrix(os, p.mass);
          os << "\nstiffness = ";
          detail::put_matrix(os, p.stiffness);
          os << '\n';
        }
        os << "friction = ";
        detail::put_vector(os, p.friction);
        os << "\nknown = ";
        detail::put_mask(os, p.known);
        os << '\n';
      },
      sc.model);

  os << "\n[observer]\nkind = " << to_string(sc.observer) << '\n'
     << "lambda = " << sc.obs1.lambda << '\n'
     << "psi3 = " << sc.obs2.psi3 << '\n'
     << "psi4_extra = " << sc.obs2.psi4_extra << '\n'
     << "psi5_extra = " << sc.obs2.psi5_extra << '\n';

  os << "\n[initial]\nq = ";
  detail::put_vector(os, sc.q0);
  os << "\nmom = ";
  detail::put_vector(os, sc.mom0);
  os << "\nexact = " << (sc.init.exact ? "true" : "false") << '\n';
  auto opt = [&os](const char* key, const std::optional<Vec>& v) {
    if (!v) return;
    os << key << " = ";
    detail::put_vector(os, *v);
    os << '\n';
  };
  opt("p_hat", sc.init.p_hat);
  opt("r_hat", sc.init.r_hat);
  opt("d_hat", sc.init.d_hat);
  opt("q_bar", sc.init.q_bar);
  opt("p_bar", sc.init.p_bar);
  if (sc.init.r) os << "r = " << *sc.init.r << '\n';

  os << "\n[input]\n";
  for (const auto& ch : sc.input) {
    os << "channel = " << ch.amplitude << ", " << ch.frequency << ", " << ch.phase
       << ", " << (ch.waveform == Waveform::cos ? "cos" : "sin") << '\n';
  }
  os << "\n[disturbance]\n";
  for (const auto& st : sc.disturbance.steps()) {
    os << "step = " << st.time << ": ";
    detail::put_vector(os, st.d);
    os << '\n';
  }
  os << "\n[sim]\nt_final = " << sc.t_final << "\ndt = " << sc.dt
     << "\nstride = " << sc.stride << '\n';
  os << "\n[output]\n";
  if (!cfg.output.directory.empty()) {
    os << "directory = " << cfg.output.directory << '\n';
  }
  os << "emit_svg = " << (cfg.output.emit_svg ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace speedobs
