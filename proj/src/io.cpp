#include "cgd/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <utility>

namespace cgd::io {

namespace {

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t first = 0;
  std::size_t last = s.size();
  while (first < last && std::isspace(static_cast<unsigned char>(s[first]))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(s[last - 1]))) --last;
  return s.substr(first, last - first);
}

double parse_double(const std::string& raw, const std::filesystem::path& path,
                    std::size_t line, std::size_t field) {
  const std::string s = trimmed(raw);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw IoError(location(path, line) + ": field " + std::to_string(field) +
                  ": cannot parse '" + raw + "' as a number");
  }
  if (!std::isfinite(value)) {
    throw IoError(location(path, line) + ": field " + std::to_string(field) +
                  ": non-finite value '" + raw + "'");
  }
  return value;
}

long parse_int(const std::string& raw, const std::filesystem::path& path, std::size_t line,
               std::size_t field) {
  const std::string s = trimmed(raw);
  long value = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw IoError(location(path, line) + ": field " + std::to_string(field) +
                  ": cannot parse '" + raw + "' as an integer");
  }
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  while (!lines.empty() && trimmed(lines.back()).empty()) lines.pop_back();
  return lines;
}

void append_complex_row(std::string& out, const CMat& m, Index row) {
  for (Index k = 0; k < m.cols(); ++k) {
    if (k > 0) out.push_back(',');
    out += format_double(m(row, k).real());
    out.push_back(',');
    out += format_double(m(row, k).imag());
  }
  out.push_back('\n');
}

CVec parse_complex_row(const std::vector<std::string>& fields, Index p,
                       const std::filesystem::path& path, std::size_t line) {
  if (static_cast<Index>(fields.size()) != 2 * p) {
    throw IoError(location(path, line) + ": expected " + std::to_string(2 * p) +
                  " fields, found " + std::to_string(fields.size()));
  }
  CVec row(p);
  for (Index k = 0; k < p; ++k) {
    const double re = parse_double(fields[static_cast<std::size_t>(2 * k)], path, line,
                                   static_cast<std::size_t>(2 * k + 1));
    const double im = parse_double(fields[static_cast<std::size_t>(2 * k + 1)], path, line,
                                   static_cast<std::size_t>(2 * k + 2));
    row(k) = Complex(re, im);
  }
  return row;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " +
                  ec.message());
  }
}

void write_batch_file(const std::filesystem::path& path, const DataBatch& batch) {
  std::string out;
  out += std::to_string(batch.p());
  out.push_back(',');
  out += std::to_string(batch.n());
  out.push_back(',');
  out += std::to_string(batch.t);
  out.push_back('\n');
  const CMat rows = batch.samples.transpose();  // one line per sample vector
  for (Index i = 0; i < rows.rows(); ++i) append_complex_row(out, rows, i);
  write_text_atomic(path, out);
}

DataBatch read_batch_file(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw IoError(path.string() + ": empty file");

  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.size() != 3) {
    throw IoError(location(path, 1) + ": header must be 'p,n,t', found " +
                  std::to_string(header.size()) + " fields");
  }
  const long p = parse_int(header[0], path, 1, 1);
  const long n = parse_int(header[1], path, 1, 2);
  const long t = parse_int(header[2], path, 1, 3);
  if (p < 1 || n < 1) {
    throw IoError(location(path, 1) + ": header requires p >= 1 and n >= 1");
  }
  if (static_cast<long>(lines.size()) - 1 != n) {
    throw IoError(path.string() + ": header says n = " + std::to_string(n) + " but " +
                  std::to_string(lines.size() - 1) + " data rows follow");
  }

  CMat samples(p, n);
  for (long i = 0; i < n; ++i) {
    const std::size_t line_no = static_cast<std::size_t>(i) + 2;
    samples.col(i) = parse_complex_row(split_fields(lines[line_no - 1]), p, path, line_no);
  }
  return DataBatch(std::move(samples), static_cast<int>(t));
}

void write_theta_file(const std::filesystem::path& path, const CMat& sigma,
                      const RVec& tau) {
  if (sigma.rows() != sigma.cols()) {
    throw DimensionError("write_theta_file: scatter must be square");
  }
  std::string out;
  out += std::to_string(sigma.rows());
  out.push_back(',');
  out += std::to_string(tau.size());
  out.push_back('\n');
  for (Index i = 0; i < sigma.rows(); ++i) append_complex_row(out, sigma, i);
  for (Index i = 0; i < tau.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += format_double(tau(i));
  }
  out.push_back('\n');
  write_text_atomic(path, out);
}

void write_theta_file(const std::filesystem::path& path, const CGPoint& theta) {
  write_theta_file(path, theta.sigma.matrix(), theta.tau.values());
}

ThetaFile read_theta_file(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw IoError(path.string() + ": empty file");

  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.size() != 2) {
    throw IoError(location(path, 1) + ": header must be 'p,n', found " +
                  std::to_string(header.size()) + " fields");
  }
  const long p = parse_int(header[0], path, 1, 1);
  const long n = parse_int(header[1], path, 1, 2);
  if (p < 1 || n < 1) {
    throw IoError(location(path, 1) + ": header requires p >= 1 and n >= 1");
  }
  if (static_cast<long>(lines.size()) != 1 + p + 1) {
    throw IoError(path.string() + ": expected " + std::to_string(p) +
                  " scatter rows plus one texture row after the header, found " +
                  std::to_string(lines.size() - 1) + " rows");
  }

  ThetaFile theta;
  theta.sigma.resize(p, p);
  for (long i = 0; i < p; ++i) {
    const std::size_t line_no = static_cast<std::size_t>(i) + 2;
    theta.sigma.row(i) =
        parse_complex_row(split_fields(lines[line_no - 1]), p, path, line_no).transpose();
  }
  const std::size_t tau_line = static_cast<std::size_t>(p) + 2;
  const std::vector<std::string> tau_fields = split_fields(lines[tau_line - 1]);
  if (static_cast<long>(tau_fields.size()) != n) {
    throw IoError(location(path, tau_line) + ": expected " + std::to_string(n) +
                  " texture fields, found " + std::to_string(tau_fields.size()));
  }
  theta.tau.resize(n);
  for (long i = 0; i < n; ++i) {
    theta.tau(i) = parse_double(tau_fields[static_cast<std::size_t>(i)], path, tau_line,
                                static_cast<std::size_t>(i) + 1);
  }
  return theta;
}

std::string batch_file_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "batch_%04d.csv", t);
  return buf;
}

std::vector<DataBatch> read_batch_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError(dir.string() + " is not a readable directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("batch_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw IoError("no batch_*.csv files found in " + dir.string());
  }
  std::sort(files.begin(), files.end());

  std::vector<DataBatch> batches;
  batches.reserve(files.size());
  for (const auto& file : files) batches.push_back(read_batch_file(file));
  std::sort(batches.begin(), batches.end(),
            [](const DataBatch& a, const DataBatch& b) { return a.t < b.t; });

  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (batches[i].p() != batches[0].p() || batches[i].n() != batches[0].n()) {
      throw IoError(dir.string() + ": batch files disagree on (p, n)");
    }
    if (i > 0 && batches[i].t == batches[i - 1].t) {
      throw IoError(dir.string() + ": duplicate time index " + std::to_string(batches[i].t));
    }
  }
  return batches;
}

void write_mse_csv(const std::filesystem::path& path, const MseCurve& curve) {
  std::string out = "T,icrb_db,mle_db,arithmetic_db,recursive_db\n";
  for (const MseRecord& rec : curve.records) {
    out += std::to_string(rec.T);
    out.push_back(',');
    out += format_double(to_db(rec.icrb));
    out.push_back(',');
    out += format_double(to_db(rec.mle));
    out.push_back(',');
    out += format_double(to_db(rec.arithmetic));
    out.push_back(',');
    out += format_double(to_db(rec.recursive));
    out.push_back('\n');
  }
  write_text_atomic(path, out);
}

}  // namespace cgd::io
