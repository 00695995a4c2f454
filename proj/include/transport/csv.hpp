#pragma once

// CSV ingestion and export.
//
// Schemas: source files carry the header x1,...,xd,w,y; target files carry
// x1,...,xd. UTF-8, '.' decimal point, no quoting or thousands separators.
// Doubles are written with std::to_chars (shortest form that parses back to
// the same value), so export -> ingest -> export is byte-identical.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "transport/dataset.hpp"
#include "transport/errors.hpp"
#include "transport/simulation.hpp"

namespace transport::csv {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw DataError(context + ": cannot parse number '" + std::string(text) + "'");
  if (!std::isfinite(v)) throw DataError(context + ": non-finite value '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
  return fields;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw DataError("'" + path + "' is empty");
  return lines;
}

inline void expect_header(const std::vector<std::string>& header,
                          const std::vector<std::string>& expected, const std::string& path) {
  for (const auto& name : expected) {
    bool found = false;
    for (const auto& h : header)
      if (h == name) found = true;
    if (!found) throw DataError("'" + path + "' is missing required column '" + name + "'");
  }
  if (header.size() != expected.size())
    throw DataError("'" + path + "' has unexpected columns (expected exactly " +
                    std::to_string(expected.size()) + ")");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (header[i] != expected[i])
      throw DataError("'" + path + "' column " + std::to_string(i + 1) + " is '" + header[i] +
                      "', expected '" + expected[i] + "'");
}

inline std::vector<std::string> covariate_header(std::size_t d) {
  std::vector<std::string> h;
  for (std::size_t j = 1; j <= d; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

/// Read a source CSV (header x1..xd,w,y). Missing or non-numeric cells are
/// rejected, not imputed.
inline SourceDataset read_source(const std::string& path, double propensity = 0.5) {
  const auto lines = read_lines(path);
  const auto header = split_line(lines[0]);
  if (header.size() < 3)
    throw DataError("'" + path + "' must have columns x1..xd,w,y");
  const std::size_t d = header.size() - 2;
  auto expected = covariate_header(d);
  expected.push_back("w");
  expected.push_back("y");
  expect_header(header, expected, path);

  SourceDataset out;
  out.propensity = propensity;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_line(lines[r]);
    const std::string ctx = "'" + path + "' row " + std::to_string(r);
    if (fields.size() != header.size())
      throw DataError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    SourceUnit unit;
    unit.x.resize(d);
    for (std::size_t j = 0; j < d; ++j) unit.x[j] = parse_double(fields[j], ctx);
    const double w = parse_double(fields[d], ctx);
    if (w != 0.0 && w != 1.0) throw DataError(ctx + ": w must be 0 or 1");
    unit.w = static_cast<int>(w);
    unit.y = parse_double(fields[d + 1], ctx);
    out.units.push_back(std::move(unit));
  }
  return out;
}

/// Read a target CSV (header x1..xd).
inline TargetDataset read_target(const std::string& path) {
  const auto lines = read_lines(path);
  const auto header = split_line(lines[0]);
  const std::size_t d = header.size();
  expect_header(header, covariate_header(d), path);

  TargetDataset out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_line(lines[r]);
    const std::string ctx = "'" + path + "' row " + std::to_string(r);
    if (fields.size() != d)
      throw DataError(ctx + ": expected " + std::to_string(d) + " fields, got " +
                      std::to_string(fields.size()));
    TargetUnit unit;
    unit.x.resize(d);
    for (std::size_t j = 0; j < d; ++j) unit.x[j] = parse_double(fields[j], ctx);
    out.units.push_back(std::move(unit));
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
}

inline std::string render_source(const SourceDataset& data) {
  std::ostringstream out;
  const std::size_t d = data.dim();
  for (std::size_t j = 1; j <= d; ++j) out << "x" << j << ",";
  out << "w,y\n";
  for (const auto& u : data.units) {
    for (double v : u.x) out << format_double(v) << ",";
    out << u.w << "," << format_double(u.y) << "\n";
  }
  return out.str();
}

inline std::string render_target(const TargetDataset& data) {
  std::ostringstream out;
  const std::size_t d = data.dim();
  for (std::size_t j = 1; j <= d; ++j) out << "x" << j << (j == d ? "" : ",");
  out << "\n";
  for (const auto& u : data.units) {
    for (std::size_t j = 0; j < u.x.size(); ++j)
      out << format_double(u.x[j]) << (j + 1 == u.x.size() ? "" : ",");
    out << "\n";
  }
  return out.str();
}

inline void write_source(const std::string& path, const SourceDataset& data) {
  write_file(path, render_source(data));
}

inline void write_target(const std::string& path, const TargetDataset& data) {
  write_file(path, render_target(data));
}

/// Per-unit oracle table for a simulated population: location, latent u,
/// true effect, oracle weight.
inline void write_oracle(const std::string& path, const SimulatedPopulation& pop) {
  std::ostringstream out;
  out << "l,u,tau,z_star\n";
  for (const auto& unit : pop.units) {
    out << unit.l << "," << format_double(unit.u) << "," << format_double(unit.tau) << ","
        << format_double(unit.z_star) << "\n";
  }
  write_file(path, out.str());
}

}  // namespace transport::csv
