#include "steinflow/results_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "steinflow/errors.hpp"

namespace steinflow {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + s + "' in trace", line);
  }
  return v;
}

std::vector<std::string> kernel_labels(const RunTrace& trace) {
  std::vector<std::string> labels;
  if (trace.bandwidths.empty()) {
    labels.emplace_back("median");
  } else {
    for (double h : trace.bandwidths) labels.push_back("h=" + format_number(h));
  }
  return labels;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string trace_to_csv(const RunTrace& trace) {
  const std::vector<std::string> labels = kernel_labels(trace);
  std::ostringstream out;
  out << "iter,mksd";
  for (const auto& l : labels) out << ",ksd_" << l;
  for (const auto& l : labels) out << ",w_" << l;
  out << ",weight_fallback";
  for (const auto& name : trace.metric_names) out << ',' << name;
  out << '\n';

  for (const IterationRecord& rec : trace.records) {
    if (rec.ksd.size() != labels.size() || rec.weights.size() != labels.size() ||
        rec.metrics.size() != trace.metric_names.size()) {
      throw InputError("trace record does not match the trace header");
    }
    out << rec.iteration << ',' << format_number(rec.mksd);
    for (double v : rec.ksd) out << ',' << format_number(v);
    for (double v : rec.weights) out << ',' << format_number(v);
    out << ',' << (rec.weight_fallback ? 1 : 0);
    for (double v : rec.metrics) out << ',' << format_number(v);
    out << '\n';
  }
  return out.str();
}

RunTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty trace file", 1);
  const std::vector<std::string> header = split_line(line, ',');
  if (header.size() < 5 || header[0] != "iter" || header[1] != "mksd") {
    throw ParseError("not a trace header", 1);
  }

  RunTrace trace;
  std::size_t col = 2;
  std::vector<std::string> labels;
  while (col < header.size() && header[col].rfind("ksd_", 0) == 0) {
    labels.push_back(header[col].substr(4));
    ++col;
  }
  const std::size_t m = labels.size();
  if (m == 0) throw ParseError("trace header has no kernel columns", 1);
  for (std::size_t i = 0; i < m; ++i, ++col) {
    if (col >= header.size() || header[col] != "w_" + labels[i]) throw ParseError("weight columns do not match kernel columns", 1);
  }
  if (col >= header.size() || header[col] != "weight_fallback") throw ParseError("missing weight_fallback column", 1);
  ++col;
  trace.metric_names.assign(header.begin() + static_cast<std::ptrdiff_t>(col), header.end());
  if (!(m == 1 && labels[0] == "median")) {
    for (const auto& l : labels) {
      if (l.rfind("h=", 0) != 0) throw ParseError("unexpected kernel column '" + l + "'", 1);
      trace.bandwidths.push_back(parse_double(l.substr(2), 1));
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line, ',');
    if (f.size() != header.size()) throw ParseError("trace row has the wrong number of fields", line_no);
    IterationRecord rec;
    rec.iteration = static_cast<int>(parse_double(f[0], line_no));
    rec.mksd = parse_double(f[1], line_no);
    for (std::size_t i = 0; i < m; ++i) rec.ksd.push_back(parse_double(f[2 + i], line_no));
    for (std::size_t i = 0; i < m; ++i) rec.weights.push_back(parse_double(f[2 + m + i], line_no));
    rec.weight_fallback = parse_double(f[2 + 2 * m], line_no) != 0.0;
    for (std::size_t i = 3 + 2 * m; i < f.size(); ++i) rec.metrics.push_back(parse_double(f[i], line_no));
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

std::string summary_to_text(const Summary& summary) {
  std::ostringstream out;
  out << "schema_version = " << kResultsSchemaVersion << '\n';
  for (const auto& [key, value] : summary) {
    if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw InputError("summary keys must not contain '=' or newlines");
    }
    out << key << " = " << value << '\n';
  }
  return out.str();
}

Summary summary_from_text(const std::string& text) {
  Summary out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    std::string key = line.substr(0, eq);
    if (key == "schema_version") {
      if (line.substr(eq + 3) != std::to_string(kResultsSchemaVersion)) {
        throw ParseError("unsupported summary schema version", line_no);
      }
      continue;
    }
    out.emplace_back(std::move(key), line.substr(eq + 3));
  }
  return out;
}

std::string timing_to_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "iter,seconds\n";
  for (const auto& rec : trace.records) out << rec.iteration << ',' << format_number(rec.seconds) << '\n';
  return out.str();
}

std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header) {
  std::ostringstream out;
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_number(m(r, c));
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit_results(const RunTrace& trace, const Summary& summary,
                  const std::filesystem::path& directory, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + directory.string() + ": " + ec.message());
  write_text_file(directory / (stem + "_trace.csv"), trace_to_csv(trace));
  write_text_file(directory / (stem + "_timing.csv"), timing_to_csv(trace));
  write_text_file(directory / (stem + "_summary.txt"), summary_to_text(summary));
}

}  // namespace steinflow
