#pragma once

// Text formats: CSV points, label files, 3-cover instances, generator spec
// files, and key=value reports.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kfinder/baselines.hpp"
#include "kfinder/generators.hpp"
#include "kfinder/linalg.hpp"

namespace kfinder {

/// I/O and format failures; the CLI maps these to exit status 2.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& detail) : Error("parse-error", detail) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& detail) : Error("io-error", detail) {}
};

inline bool is_input_error(const Error& e) { return e.code() == "parse-error" || e.code() == "io-error"; }

namespace io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> lines(std::string_view text) {
  auto out = split(text, '\n');
  while (!out.empty() && trim(out.back()).empty()) out.pop_back();
  return out;
}

inline std::optional<double> to_double(std::string_view tok) {
  tok = trim(tok);
  if (tok.empty()) return std::nullopt;
  if (tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_integer(std::string_view tok) {
  tok = trim(tok);
  Int v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

}  // namespace io

/// One point per line, comma separated, no header.
inline PointSet parse_points_text(std::string_view text) {
  const auto rows = io::lines(text);
  if (rows.empty()) throw ParseError("empty file");
  std::vector<std::vector<double>> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (io::trim(rows[r]).empty()) throw ParseError("empty row" + io::at_line(r + 1));
    std::vector<double> row;
    for (auto tok : io::split(rows[r], ',')) {
      auto v = io::to_double(tok);
      if (!v) throw ParseError("non-numeric token '" + std::string(io::trim(tok)) + "'" + io::at_line(r + 1));
      row.push_back(*v);
    }
    if (!values.empty() && row.size() != values.front().size())
      throw ParseError("ragged row" + io::at_line(r + 1));
    values.push_back(std::move(row));
  }
  Matrix X(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.front().size()));
  for (std::size_t r = 0; r < values.size(); ++r)
    for (std::size_t c = 0; c < values[r].size(); ++c)
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
  return PointSet(std::move(X));
}

inline PointSet parse_points(const std::string& path) { return parse_points_text(io::read_file(path)); }

inline std::string format_points(const PointSet& X) {
  std::string out;
  for (Index i = 0; i < X.size(); ++i) {
    for (Index j = 0; j < X.dim(); ++j) {
      if (j) out += ',';
      out += io::format_double(X.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out += '\n';
  }
  return out;
}

/// One positive integer label per line.
inline std::vector<int> parse_labels_text(std::string_view text, std::optional<Index> expected = std::nullopt) {
  const auto rows = io::lines(text);
  if (rows.empty()) throw ParseError("empty labels file");
  std::vector<int> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto v = io::to_integer<int>(rows[r]);
    if (!v || *v < 1) throw ParseError("bad label" + io::at_line(r + 1));
    out.push_back(*v);
  }
  if (expected && out.size() != *expected)
    throw ParseError("labels file has " + std::to_string(out.size()) + " lines, expected " +
                     std::to_string(*expected));
  return out;
}

inline std::vector<int> parse_labels(const std::string& path, std::optional<Index> expected = std::nullopt) {
  return parse_labels_text(io::read_file(path), expected);
}

inline std::string format_labels(const std::vector<int>& labels) {
  std::string out;
  for (int l : labels) out += std::to_string(l) + '\n';
  return out;
}

/// First line m, then one set per line as three 1-based elements.
inline ThreeCoverInstance parse_three_cover_text(std::string_view text) {
  const auto rows = io::lines(text);
  if (rows.empty()) throw ParseError("empty 3-cover file");
  ThreeCoverInstance inst;
  auto m = io::to_integer<Index>(rows[0]);
  if (!m) throw ParseError("bad universe size" + io::at_line(1));
  inst.universe = *m;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::istringstream ss{std::string(rows[r])};
    std::array<long long, 3> e{};
    std::string extra;
    if (!(ss >> e[0] >> e[1] >> e[2]) || (ss >> extra)) throw ParseError("expected three elements" + io::at_line(r + 1));
    std::array<Index, 3> s{};
    for (int i = 0; i < 3; ++i) {
      if (e[i] < 1) throw ParseError("elements are 1-based" + io::at_line(r + 1));
      s[i] = static_cast<Index>(e[i] - 1);
    }
    std::sort(s.begin(), s.end());
    inst.sets.push_back(s);
  }
  return inst;
}

inline std::string format_three_cover(const ThreeCoverInstance& inst) {
  std::string out = std::to_string(inst.universe) + '\n';
  for (const auto& s : inst.sets)
    out += std::to_string(s[0] + 1) + ' ' + std::to_string(s[1] + 1) + ' ' + std::to_string(s[2] + 1) + '\n';
  return out;
}

/// Parsed generator spec file (format in docs/spec-files.md).
struct GeneratorConfig {
  std::optional<MixtureSpec> mixture;
  std::optional<SbmSpec> sbm;
  std::optional<Index> n;
  std::optional<std::uint64_t> seed;
};

inline GeneratorConfig parse_generator_spec_text(std::string_view text) {
  GeneratorConfig cfg;
  enum class Section { top, component, sbm } section = Section::top;
  std::vector<std::vector<double>> prob_rows;
  std::vector<double> sbm_weights;
  std::optional<Index> sbm_n;
  bool in_sbm = false;

  auto numbers = [](std::string_view v, std::size_t line) {
    std::vector<double> out;
    for (auto tok : io::split(v, ',')) {
      auto x = io::to_double(tok);
      if (!x) throw ParseError("bad number '" + std::string(io::trim(tok)) + "'" + io::at_line(line));
      out.push_back(*x);
    }
    return out;
  };
  struct Pending {
    std::optional<Vector> mean;
    std::optional<Matrix> cov;
    std::optional<double> scalar_cov;
    double weight = -1.0;
    ComponentKind kind = ComponentKind::gaussian;
    std::size_t line = 0;
  };
  std::vector<Pending> comps;

  const auto rows = io::split(text, '\n');
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t line = r + 1;
    std::string_view s = rows[r];
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = io::trim(s);
    if (s.empty()) continue;
    if (s == "[component]") {
      section = Section::component;
      comps.push_back({});
      comps.back().line = line;
      continue;
    }
    if (s == "[sbm]") {
      if (in_sbm) throw ParseError("duplicate [sbm] section" + io::at_line(line));
      section = Section::sbm;
      in_sbm = true;
      continue;
    }
    if (s.front() == '[') throw ParseError("unknown section " + std::string(s) + io::at_line(line));
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value" + io::at_line(line));
    const std::string key(io::trim(s.substr(0, eq)));
    const std::string_view value = io::trim(s.substr(eq + 1));

    if (section == Section::top || (section == Section::sbm && key == "seed")) {
      if (key == "n") {
        auto v = io::to_integer<Index>(value);
        if (!v || *v < 1) throw ParseError("bad n" + io::at_line(line));
        cfg.n = *v;
      } else if (key == "seed") {
        auto v = io::to_integer<std::uint64_t>(value);
        if (!v) throw ParseError("bad seed" + io::at_line(line));
        cfg.seed = *v;
      } else {
        throw ParseError("unknown key '" + key + "'" + io::at_line(line));
      }
      continue;
    }
    if (section == Section::component) {
      Pending& c = comps.back();
      if (key == "mean") {
        auto v = numbers(value, line);
        c.mean = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else if (key == "cov") {
        const auto row_text = io::split(value, ';');
        if (row_text.size() == 1 && io::split(value, ',').size() == 1) {
          c.scalar_cov = numbers(value, line).front();
        } else {
          Matrix M(static_cast<Eigen::Index>(row_text.size()), static_cast<Eigen::Index>(row_text.size()));
          for (std::size_t i = 0; i < row_text.size(); ++i) {
            auto v = numbers(row_text[i], line);
            if (v.size() != row_text.size()) throw ParseError("cov must be square" + io::at_line(line));
            for (std::size_t j = 0; j < v.size(); ++j)
              M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
          }
          c.cov = std::move(M);
        }
      } else if (key == "weight") {
        auto v = io::to_double(value);
        if (!v) throw ParseError("bad weight" + io::at_line(line));
        c.weight = *v;
      } else if (key == "kind") {
        try {
          c.kind = component_kind_from_string(std::string(value));
        } catch (const Error&) {
          throw ParseError("unknown kind '" + std::string(value) + "'" + io::at_line(line));
        }
      } else {
        throw ParseError("unknown key '" + key + "'" + io::at_line(line));
      }
      continue;
    }
    // [sbm]
    if (key == "n") {
      auto v = io::to_integer<Index>(value);
      if (!v || *v < 1) throw ParseError("bad n" + io::at_line(line));
      sbm_n = *v;
    } else if (key == "weights") {
      sbm_weights = numbers(value, line);
    } else if (key == "prob_row") {
      prob_rows.push_back(numbers(value, line));
    } else {
      throw ParseError("unknown key '" + key + "'" + io::at_line(line));
    }
  }

  if (!comps.empty()) {
    MixtureSpec spec;
    for (auto& c : comps) {
      if (!c.mean) throw ParseError("component without mean" + io::at_line(c.line));
      const auto d = c.mean->size();
      Matrix cov = c.cov ? *c.cov : (c.scalar_cov ? *c.scalar_cov : 1.0) * Matrix::Identity(d, d);
      if (cov.rows() != d) throw ParseError("cov and mean dimensions differ" + io::at_line(c.line));
      spec.components.push_back({*c.mean, cov, c.weight, c.kind});
    }
    // Unspecified weights share what the given ones leave.
    double given = 0.0;
    Index missing = 0;
    for (const auto& c : spec.components) {
      if (c.weight < 0.0)
        ++missing;
      else
        given += c.weight;
    }
    for (auto& c : spec.components)
      if (c.weight < 0.0) c.weight = std::max(0.0, 1.0 - given) / static_cast<double>(missing);
    try {
      spec.validate();
    } catch (const Error& e) {
      throw ParseError(std::string("invalid mixture: ") + e.what());
    }
    cfg.mixture = std::move(spec);
  }
  if (in_sbm) {
    SbmSpec spec;
    const auto k = static_cast<Eigen::Index>(prob_rows.size());
    spec.prob.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      if (static_cast<Eigen::Index>(prob_rows[static_cast<std::size_t>(a)].size()) != k)
        throw ParseError("prob_row " + std::to_string(a + 1) + " has the wrong length");
      for (Eigen::Index b = 0; b < k; ++b) spec.prob(a, b) = prob_rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    spec.weights = sbm_weights.empty() ? std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k))
                                       : sbm_weights;
    spec.n = sbm_n ? *sbm_n : cfg.n.value_or(0);
    try {
      spec.validate();
    } catch (const Error& e) {
      throw ParseError(std::string("invalid sbm: ") + e.what());
    }
    cfg.sbm = std::move(spec);
  }
  if (!cfg.mixture && !cfg.sbm) throw ParseError("spec file defines no [component] or [sbm] section");
  return cfg;
}

inline GeneratorConfig parse_generator_spec(const std::string& path) {
  return parse_generator_spec_text(io::read_file(path));
}

/// Ordered key=value lines.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value) { add(key, io::format_double(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
  template <class Int>
    requires std::is_integral_v<Int>
  void add(const std::string& key, Int value) {
    add(key, std::to_string(value));
  }
  void add(const std::string& key, const IndexSet& values) {
    std::string s;
    for (Index v : values) {
      if (!s.empty()) s += ' ';
      s += std::to_string(v);
    }
    add(key, s);
  }
  void add(const std::string& key, const std::vector<double>& values) {
    std::string s;
    for (double v : values) {
      if (!s.empty()) s += ' ';
      s += io::format_double(v);
    }
    add(key, s);
  }
  void add(const std::string& key, const Vector& v) {
    add(key, std::vector<double>(v.data(), v.data() + v.size()));
  }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + '=' + v + '\n';
    return out;
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace kfinder
