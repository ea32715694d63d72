#include "report/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace amc::report {

namespace {

// Canvas geometry (pixels).
constexpr double kWidth = 860, kHeight = 520;
constexpr double kLeft = 70, kRight = 830, kTop = 40, kBottom = 460;
constexpr int kXMin = -20, kXMax = 18;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

double x_pos(double snr) {
  return kLeft + (snr - kXMin) / (kXMax - kXMin) * (kRight - kLeft);
}

double y_pos(double acc) { return kBottom - acc * (kBottom - kTop); }

std::string fmt_pix(double v) {
  // Pixel coordinates rounded to 0.01 so the byte output stays tidy and
  // deterministic.
  const double r = std::round(v * 100.0) / 100.0;
  return format_double(r);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kBenchmark: return "BENCH";
    case Method::kNt: return "NT";
    case Method::kPq: return "PQ";
    case Method::kKd: return "KD";
    case Method::kDp: return "DP";
    case Method::kDq: return "DQ";
  }
  return "?";
}

Method method_from_name(const std::string& s) {
  for (Method m : {Method::kBenchmark, Method::kNt, Method::kPq, Method::kKd,
                   Method::kDp, Method::kDq}) {
    if (s == method_name(m)) return m;
  }
  throw ParameterError("unknown method '" + s + "'");
}

void CompressionReport::validate() const {
  const bool wants_pe = method == Method::kNt || method == Method::kDp;
  const bool wants_cq = method == Method::kPq || method == Method::kDq;
  if (wants_pe != pruning_efficiency.has_value()) {
    throw ContractError(std::string(method_name(method)) +
                        (wants_pe ? " report is missing p_e"
                                  : " report must not carry p_e"));
  }
  if (wants_cq != compression.has_value()) {
    throw ContractError(std::string(method_name(method)) +
                        (wants_cq ? " report is missing C_Q"
                                  : " report must not carry C_Q"));
  }
}

std::string summary_csv(const std::vector<CompressionReport>& rows) {
  std::string csv =
      "method,p_e,C_Q,accuracy,delta_vs_benchmark,sparsity,"
      "storage_efficiency,computation_efficiency\n";
  for (const auto& r : rows) {
    r.validate();
    csv += method_name(r.method);
    csv += ",";
    if (r.pruning_efficiency) csv += format_double(*r.pruning_efficiency);
    csv += ",";
    if (r.compression) csv += format_double(*r.compression);
    csv += "," + format_double(r.accuracy_overall) + ",";
    if (r.benchmark_delta) csv += format_double(*r.benchmark_delta);
    // Qualitative columns of the comparison table.
    const char* sparsity = "";
    const char* storage = "";
    const char* compute = "";
    switch (r.method) {
      case Method::kBenchmark: break;
      case Method::kNt: sparsity = "yes"; storage = "yes"; compute = "yes"; break;
      case Method::kPq: sparsity = "no"; storage = "yes"; compute = "no"; break;
      case Method::kKd: sparsity = "no"; storage = "yes"; compute = "yes"; break;
      case Method::kDp: sparsity = "yes"; storage = "yes"; compute = "yes"; break;
      case Method::kDq: sparsity = "no"; storage = "yes"; compute = "yes"; break;
    }
    csv += std::string(",") + sparsity + "," + storage + "," + compute + "\n";
  }
  return csv;
}

std::string series_csv(const std::vector<ChartSeries>& series) {
  if (series.empty()) throw ParameterError("series_csv: no series");
  std::string csv = "series,snr_db,accuracy\n";
  for (const auto& s : series) {
    for (const auto& [snr, acc] : s.points) {
      csv += s.label + "," + std::to_string(snr) + "," + format_double(acc) + "\n";
    }
  }
  return csv;
}

std::string accuracy_chart_svg(const std::vector<ChartSeries>& series) {
  if (series.empty()) throw ParameterError("accuracy_chart_svg: no series");
  for (const auto& s : series) {
    if (s.points.empty()) {
      throw ParameterError("accuracy_chart_svg: series '" + s.label + "' is empty");
    }
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         format_double(kWidth) + "\" height=\"" + format_double(kHeight) +
         "\" viewBox=\"0 0 " + format_double(kWidth) + " " +
         format_double(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Grid and ticks: accuracy every 0.1, SNR every 4 dB.
  for (int i = 0; i <= 10; ++i) {
    const double acc = i / 10.0;
    const double y = y_pos(acc);
    svg += "<line x1=\"" + fmt_pix(kLeft) + "\" y1=\"" + fmt_pix(y) + "\" x2=\"" +
           fmt_pix(kRight) + "\" y2=\"" + fmt_pix(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt_pix(kLeft - 10) + "\" y=\"" + fmt_pix(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
           format_double(acc) + "</text>\n";
  }
  for (int snr = kXMin; snr <= kXMax; snr += 4) {
    const double x = x_pos(snr);
    svg += "<line x1=\"" + fmt_pix(x) + "\" y1=\"" + fmt_pix(kTop) + "\" x2=\"" +
           fmt_pix(x) + "\" y2=\"" + fmt_pix(kBottom) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt_pix(x) + "\" y=\"" + fmt_pix(kBottom + 18) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           std::to_string(snr) + "</text>\n";
  }
  svg += "<rect x=\"" + fmt_pix(kLeft) + "\" y=\"" + fmt_pix(kTop) + "\" width=\"" +
         fmt_pix(kRight - kLeft) + "\" height=\"" + fmt_pix(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + fmt_pix((kLeft + kRight) / 2) + "\" y=\"" +
         fmt_pix(kHeight - 14) +
         "\" font-family=\"sans-serif\" font-size=\"14\" "
         "text-anchor=\"middle\">SNR (dB)</text>\n";
  svg += "<text x=\"20\" y=\"" + fmt_pix((kTop + kBottom) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 " + fmt_pix((kTop + kBottom) / 2) +
         ")\">Accuracy</text>\n";

  // Series polylines and markers.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    auto pts = series[s].points;
    std::sort(pts.begin(), pts.end());
    std::string poly;
    for (const auto& [snr, acc] : pts) {
      poly += fmt_pix(x_pos(snr)) + "," + fmt_pix(y_pos(acc)) + " ";
    }
    if (!poly.empty()) poly.pop_back();
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + poly + "\"/>\n";
    for (const auto& [snr, acc] : pts) {
      svg += "<circle cx=\"" + fmt_pix(x_pos(snr)) + "\" cy=\"" +
             fmt_pix(y_pos(acc)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
  }

  // Legend, top-left inside the plot area.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double y = kTop + 18 + 18 * static_cast<double>(s);
    svg += "<line x1=\"" + fmt_pix(kLeft + 12) + "\" y1=\"" + fmt_pix(y - 4) +
           "\" x2=\"" + fmt_pix(kLeft + 40) + "\" y2=\"" + fmt_pix(y - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt_pix(kLeft + 46) + "\" y=\"" + fmt_pix(y) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + series[s].label +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace amc::report
