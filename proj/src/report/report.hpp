#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace amc::report {

enum class Method { kBenchmark, kNt, kPq, kKd, kDp, kDq };

const char* method_name(Method m);
Method method_from_name(const std::string& s);

// One optimized-model result: exactly the metrics applicable to the method
// are present (NT/DP carry p_e, PQ/DQ carry C_Q, KD and benchmarks neither).
struct CompressionReport {
  Method method = Method::kBenchmark;
  std::optional<double> pruning_efficiency;  // p_e
  std::optional<double> compression;         // C_Q
  double accuracy_overall = 0.0;
  std::vector<std::pair<int, double>> acc_by_snr;  // (snr_db, accuracy)
  std::optional<double> benchmark_delta;           // accuracy - benchmark
  std::string run_label;

  void validate() const;
};

// Comparison table, one row per run:
// method,p_e,C_Q,accuracy,delta_vs_benchmark,sparsity,storage_efficiency,
// computation_efficiency
std::string summary_csv(const std::vector<CompressionReport>& rows);

struct ChartSeries {
  std::string label;
  std::vector<std::pair<int, double>> points;  // (snr_db, accuracy)
};

// Accuracy-versus-SNR line chart; fixed axes (-20..18 dB, 0..1) and fully
// deterministic bytes for identical input.
std::string accuracy_chart_svg(const std::vector<ChartSeries>& series);

// CSV twin of the chart: series,snr_db,accuracy with full-precision values.
std::string series_csv(const std::vector<ChartSeries>& series);

std::string format_double(double v);

}  // namespace amc::report
