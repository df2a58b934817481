// Plain-text file formats: per-time batch files, parameter files, MSE-curve
// CSV. All values are written in shortest round-trip decimal form, UTF-8
// with LF line endings; readers report file, line and field on failure.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cgd/core.hpp"
#include "cgd/estimators.hpp"
#include "cgd/manifold.hpp"
#include "cgd/simulation.hpp"

namespace cgd::io {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

/// Writes to a sibling temporary file and renames over the target, so
/// readers never observe a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Batch file: header line "p,n,t", then n rows of 2p comma-separated
/// fields, sample entries interleaved as re,im per coordinate.
void write_batch_file(const std::filesystem::path& path, const DataBatch& batch);
DataBatch read_batch_file(const std::filesystem::path& path);

/// Parameter file: header line "p,n", p rows of the scatter matrix in
/// row-major re,im interleaving, then one row of n texture fields. The
/// scatter is stored as-is; it need not have unit determinant.
struct ThetaFile {
  CMat sigma;
  RVec tau;
};

void write_theta_file(const std::filesystem::path& path, const CMat& sigma, const RVec& tau);
void write_theta_file(const std::filesystem::path& path, const CGPoint& theta);
ThetaFile read_theta_file(const std::filesystem::path& path);

/// Standard name of the batch file for time index t: batch_<t, 4 digits>.csv.
std::string batch_file_name(int t);

/// Reads every batch_*.csv in `dir` (non-recursive) and returns the batches
/// sorted by their header time index; duplicate or inconsistent headers are
/// errors.
std::vector<DataBatch> read_batch_dir(const std::filesystem::path& dir);

/// CSV with header "T,icrb_db,mle_db,arithmetic_db,recursive_db"; estimators
/// that were not run appear as nan.
void write_mse_csv(const std::filesystem::path& path, const MseCurve& curve);

}  // namespace cgd::io
