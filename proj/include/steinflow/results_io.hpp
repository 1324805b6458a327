#pragma once

// Trace and summary files. Both formats carry a schema version and are
// written with shortest round-trip number formatting, so identical runs
// produce identical bytes.
//
// trace.csv (schema 1): one header row, then one row per iteration:
//   iter, mksd, ksd_h=<b_1> ... ksd_h=<b_m>, w_h=<b_1> ... w_h=<b_m>,
//   weight_fallback, <task metrics...>
// With a per-iteration median bandwidth the kernel columns are named
// ksd_median / w_median. Missing metric values are written as "nan".
//
// summary.txt (schema 1): "key = value" lines, starting with
//   schema_version = 1

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "steinflow/dynamics.hpp"

namespace steinflow {

inline constexpr int kResultsSchemaVersion = 1;

using Summary = std::vector<std::pair<std::string, std::string>>;

std::string format_number(double value);

std::string trace_to_csv(const RunTrace& trace);
RunTrace trace_from_csv(const std::string& text);

std::string summary_to_text(const Summary& summary);
Summary summary_from_text(const std::string& text);

/// Per-iteration wall clock, kept apart from the reproducible trace.
std::string timing_to_csv(const RunTrace& trace);

std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Writes <stem>_trace.csv, <stem>_timing.csv and <stem>_summary.txt into
/// directory, creating it when needed. Throws std::runtime_error on I/O
/// failure.
void emit_results(const RunTrace& trace, const Summary& summary,
                  const std::filesystem::path& directory, const std::string& stem = "run");

}  // namespace steinflow
