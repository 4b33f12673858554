#pragma once

// Mixture files, report JSON and CSV tables. Parsing goes through nlohmann
// json; output uses a small writer so every double is printed with 17
// significant digits and round-trips bit-exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "symentropy/error.hpp"
#include "symentropy/estimators.hpp"
#include "symentropy/gaussian_mixture.hpp"
#include "symentropy/harness.hpp"
#include "symentropy/heat_flow.hpp"

namespace symentropy {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Streaming JSON writer with two-space indentation. Non-finite numbers are
// written as null.
class JsonWriter {
 public:
  JsonWriter& begin_object() { return open('{'); }
  JsonWriter& end_object() { return close('}'); }
  JsonWriter& begin_array() { return open('['); }
  JsonWriter& end_array() { return close(']'); }

  JsonWriter& key(const std::string& k) {
    separate();
    quoted(k);
    out_ << ": ";
    after_key_ = true;
    return *this;
  }

  JsonWriter& value(double v) {
    separate();
    out_ << (std::isfinite(v) ? format_double(v) : "null");
    return *this;
  }
  JsonWriter& value(std::size_t v) {
    separate();
    out_ << v;
    return *this;
  }
  JsonWriter& value(bool v) {
    separate();
    out_ << (v ? "true" : "false");
    return *this;
  }
  JsonWriter& value(const std::string& v) {
    separate();
    quoted(v);
    return *this;
  }
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null() {
    separate();
    out_ << "null";
    return *this;
  }

  template <class T>
  JsonWriter& field(const std::string& k, const T& v) {
    key(k);
    return value(v);
  }

  std::string str() const { return out_.str() + "\n"; }

 private:
  JsonWriter& open(char c) {
    separate();
    out_ << c;
    first_.push_back(true);
    return *this;
  }
  JsonWriter& close(char c) {
    const bool empty = first_.back();
    first_.pop_back();
    if (!empty) newline();
    out_ << c;
    return *this;
  }
  void separate() {
    if (after_key_) {
      after_key_ = false;
      return;
    }
    if (first_.empty()) return;
    if (!first_.back()) out_ << ',';
    first_.back() = false;
    newline();
  }
  void newline() {
    out_ << '\n';
    for (std::size_t i = 0; i < first_.size(); ++i) out_ << "  ";
  }
  void quoted(const std::string& s) {
    out_ << '"';
    for (char ch : s) {
      switch (ch) {
        case '"': out_ << "\\\""; break;
        case '\\': out_ << "\\\\"; break;
        case '\n': out_ << "\\n"; break;
        case '\t': out_ << "\\t"; break;
        default:
          if (static_cast<unsigned char>(ch) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", ch);
            out_ << buf;
          } else {
            out_ << ch;
          }
      }
    }
    out_ << '"';
  }

  std::ostringstream out_;
  std::vector<bool> first_;
  bool after_key_ = false;
};

inline void write_vector(JsonWriter& w, const Vector& v) {
  w.begin_array();
  for (Eigen::Index i = 0; i < v.size(); ++i) w.value(v(i));
  w.end_array();
}

// Row-major nested arrays.
inline void write_matrix(JsonWriter& w, const Matrix& m) {
  w.begin_array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) write_vector(w, m.row(i).transpose());
  w.end_array();
}

inline std::string mixture_to_json(const GaussianMixture& mix) {
  JsonWriter w;
  w.begin_object().field("dim", mix.dim()).key("components").begin_array();
  for (const auto& c : mix.components()) {
    w.begin_object().field("weight", c.weight).key("mean");
    write_vector(w, c.mean);
    w.key("cov");
    write_matrix(w, c.cov);
    w.end_object();
  }
  w.end_array().end_object();
  return w.str();
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, field + ": " + what);
}

inline double parse_number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) parse_fail(field, "expected a number");
  return j.get<double>();
}

inline Vector parse_vector(const nlohmann::json& j, std::size_t n, const std::string& field) {
  if (!j.is_array() || j.size() != n) {
    parse_fail(field, "expected an array of " + std::to_string(n) + " numbers");
  }
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_number(j[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

}  // namespace detail

// {dim, components: [{weight, mean: [...], cov: [[...], ...]}, ...]}
inline GaussianMixture mixture_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::parse_fail("mixture", std::string("malformed JSON (") + e.what() + ")");
  }
  if (!doc.is_object()) detail::parse_fail("mixture", "expected a JSON object");
  if (!doc.contains("dim") || !doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() < 1) {
    detail::parse_fail("dim", "expected an integer >= 1");
  }
  const auto n = doc["dim"].get<std::size_t>();
  if (!doc.contains("components") || !doc["components"].is_array() || doc["components"].empty()) {
    detail::parse_fail("components", "expected a non-empty array");
  }
  std::vector<MixtureComponent> comps;
  for (std::size_t m = 0; m < doc["components"].size(); ++m) {
    const auto& c = doc["components"][m];
    const std::string where = "components[" + std::to_string(m) + "]";
    if (!c.is_object()) detail::parse_fail(where, "expected an object");
    if (!c.contains("weight")) detail::parse_fail(where + ".weight", "missing");
    if (!c.contains("mean")) detail::parse_fail(where + ".mean", "missing");
    if (!c.contains("cov")) detail::parse_fail(where + ".cov", "missing");
    MixtureComponent comp;
    comp.weight = detail::parse_number(c["weight"], where + ".weight");
    comp.mean = detail::parse_vector(c["mean"], n, where + ".mean");
    const auto& cov = c["cov"];
    if (!cov.is_array() || cov.size() != n) {
      detail::parse_fail(where + ".cov", "expected " + std::to_string(n) + " rows");
    }
    comp.cov.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      comp.cov.row(static_cast<Eigen::Index>(i)) =
          detail::parse_vector(cov[i], n, where + ".cov[" + std::to_string(i) + "]").transpose();
    }
    comps.push_back(std::move(comp));
  }
  return make_gaussian_mixture(std::move(comps));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "law: cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a temporary file in the target directory, then renames it over
// the destination so readers never see a partial report.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "out: cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidArgument, "out: write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::InvalidArgument, "out: cannot rename onto '" + path + "': " + ec.message());
  }
}

inline void write_quantity(JsonWriter& w, const Quantity& q) {
  w.begin_object()
      .field("value", q.value)
      .field("stderr", q.std_error)
      .field("method", q.method)
      .field("count", q.count)
      .end_object();
}

inline void write_estimate(JsonWriter& w, const EntropyEstimate& e) {
  write_quantity(w, to_quantity(e));
}

inline void write_budget(JsonWriter& w, const Budget& b) {
  w.begin_object().field("samples", b.samples).field("tol_sigma", b.tol_sigma).end_object();
}

// Body of an InequalityReport, written into an object the caller has opened.
inline void write_report_fields(JsonWriter& w, const InequalityReport& r) {
  w.field("statement", to_string(r.statement)).key("lhs");
  write_quantity(w, r.lhs);
  w.key("rhs");
  if (std::isfinite(r.rhs.value)) {
    write_quantity(w, r.rhs);
  } else {
    w.null();
  }
  w.field("gap", r.gap)
      .field("sigma", r.sigma)
      .field("verdict", to_string(r.verdict))
      .field("symmetric_law", r.symmetric_law)
      .field("trivial", r.trivial)
      .field("law_fingerprint", r.law_fingerprint)
      .field("seed", static_cast<std::size_t>(r.budget.seed))
      .key("budget");
  write_budget(w, r.budget);
  w.key("notes").begin_array();
  for (const auto& note : r.notes) w.value(note);
  w.end_array();
}

inline void write_report(JsonWriter& w, const InequalityReport& r) {
  w.begin_object();
  write_report_fields(w, r);
  w.end_object();
}

inline std::string report_to_json(const InequalityReport& r) {
  JsonWriter w;
  write_report(w, r);
  return w.str();
}

// a1..an, entropy, stderr, bound, margin
inline std::string scan_to_csv(const ScanTable& t) {
  std::ostringstream out;
  const std::size_t n = t.rows.empty() ? 0 : static_cast<std::size_t>(t.rows.front().a.size());
  for (std::size_t i = 0; i < n; ++i) out << 'a' << (i + 1) << ',';
  out << "entropy,stderr,bound,margin\n";
  for (const auto& row : t.rows) {
    for (Eigen::Index i = 0; i < row.a.size(); ++i) out << format_double(row.a(i)) << ',';
    out << format_double(row.entropy) << ',' << format_double(row.stderr_margin) << ','
        << format_double(row.bound) << ',' << format_double(row.margin) << '\n';
  }
  return out.str();
}

}  // namespace symentropy
