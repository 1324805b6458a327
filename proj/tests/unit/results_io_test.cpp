#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "steinflow/errors.hpp"
#include "steinflow/results_io.hpp"

using namespace steinflow;

namespace {

std::size_t count_columns(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

RunTrace sample_trace() {
  RunTrace t;
  t.bandwidths = {0.0625, 1.0, 2.0};
  t.metric_names = {"test_accuracy", "test_log_likelihood"};
  for (int i = 0; i < 4; ++i) {
    IterationRecord r;
    r.iteration = i;
    r.weights = {0.1 * i, 0.3, std::sqrt(1.0 - 0.09 - 0.01 * i * i)};
    r.ksd = {1.0 / (i + 3.0), 2e-17, 123456.789};
    r.mksd = 0.1 + i;
    r.seconds = 0.01 * i;
    r.weight_fallback = i == 2;
    r.metrics = {i == 3 ? 0.75 : std::numeric_limits<double>::quiet_NaN(), -0.5 * i};
    t.records.push_back(r);
  }
  return t;
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 1e16}) {
    const std::string s = format_number(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Trace, EmptyIsHeaderOnly) {
  RunTrace t;
  t.bandwidths = {0.5, 1.0};
  const std::string csv = trace_to_csv(t);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv, "iter,mksd,ksd_h=0.5,ksd_h=1,w_h=0.5,w_h=1,weight_fallback\n");
  EXPECT_TRUE(trace_from_csv(csv).records.empty());
}

TEST(Trace, ColumnCount) {
  const RunTrace t = sample_trace();
  const std::string csv = trace_to_csv(t);
  std::istringstream in(csv);
  std::string line;
  const std::size_t m = t.bandwidths.size();
  // iter, mksd, 2m kernel columns, then the fallback flag and task metrics.
  const std::size_t expect = 2 + 2 * m + 1 + t.metric_names.size();
  while (std::getline(in, line)) EXPECT_EQ(count_columns(line), expect);
}

TEST(Trace, RoundTrip) {
  const RunTrace t = sample_trace();
  const RunTrace back = trace_from_csv(trace_to_csv(t));
  EXPECT_EQ(back.bandwidths, t.bandwidths);
  EXPECT_EQ(back.metric_names, t.metric_names);
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const IterationRecord& a = t.records[i];
    const IterationRecord& b = back.records[i];
    EXPECT_EQ(a.iteration, b.iteration);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.ksd, b.ksd);
    EXPECT_EQ(a.mksd, b.mksd);
    EXPECT_EQ(a.weight_fallback, b.weight_fallback);
    ASSERT_EQ(a.metrics.size(), b.metrics.size());
    for (std::size_t k = 0; k < a.metrics.size(); ++k) {
      if (std::isnan(a.metrics[k])) {
        EXPECT_TRUE(std::isnan(b.metrics[k]));
      } else {
        EXPECT_EQ(a.metrics[k], b.metrics[k]);
      }
    }
  }
  EXPECT_EQ(trace_to_csv(back), trace_to_csv(t));
}

TEST(Trace, MedianModeColumns) {
  RunTrace t;
  t.metric_names = {"bandwidth"};
  IterationRecord r;
  r.weights = {1.0};
  r.ksd = {0.25};
  r.mksd = 0.25;
  r.metrics = {0.8};
  t.records.push_back(r);
  const std::string csv = trace_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,mksd,ksd_median,w_median,weight_fallback,bandwidth");
  const RunTrace back = trace_from_csv(csv);
  EXPECT_TRUE(back.bandwidths.empty());
  EXPECT_EQ(back.records[0].metrics[0], 0.8);
}

TEST(Trace, RejectsMalformed) {
  EXPECT_THROW(trace_from_csv(""), ParseError);
  EXPECT_THROW(trace_from_csv("a,b,c\n"), ParseError);
  EXPECT_THROW(trace_from_csv("iter,mksd,ksd_h=1,w_h=1,weight_fallback\n0,1,2\n"), ParseError);
  EXPECT_THROW(trace_from_csv("iter,mksd,ksd_h=1,w_h=1,weight_fallback\n0,1,x,1,0\n"), ParseError);
}

TEST(Summary, RoundTripAndVersion) {
  const Summary s = {{"task", "gaussian"}, {"mean_0", format_number(-0.6871)}};
  const std::string text = summary_to_text(s);
  EXPECT_EQ(text.rfind("schema_version = 1\n", 0), 0u);
  const Summary back = summary_from_text(text);
  EXPECT_EQ(back, s);
  EXPECT_THROW(summary_from_text("schema_version = 2\n"), ParseError);
  EXPECT_THROW(summary_to_text({{"a=b", "1"}}), InputError);
  EXPECT_THROW(summary_from_text("no equals sign\n"), ParseError);
}

TEST(Emit, WritesFilesAndFailsOnBadDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "steinflow_emit_test";
  std::filesystem::remove_all(dir);
  emit_results(sample_trace(), {{"k", "v"}}, dir, "trial_0");
  EXPECT_TRUE(std::filesystem::exists(dir / "trial_0_trace.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "trial_0_summary.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "trial_0_timing.csv"));
  EXPECT_EQ(read_text_file(dir / "trial_0_trace.csv"), trace_to_csv(sample_trace()));
  std::filesystem::remove_all(dir);

  const auto blocker = std::filesystem::temp_directory_path() / "steinflow_emit_blocker";
  write_text_file(blocker, "x");
  EXPECT_THROW(emit_results(sample_trace(), {}, blocker / "sub", "t"), std::runtime_error);
  std::filesystem::remove(blocker);
}
