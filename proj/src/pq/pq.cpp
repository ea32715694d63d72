#include "pq/pq.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>

#include "core/threads.hpp"
#include "kernels/kernels.hpp"

namespace amc::pq {

namespace {

constexpr std::uint64_t kSubspaceTag = 31;

std::vector<std::uint32_t> kmeanspp_seed(const double* points, std::size_t n,
                                         std::size_t d, std::size_t k, Rng& rng) {
  std::vector<std::uint32_t> chosen;
  chosen.reserve(k);
  std::vector<double> dist(n, 0.0);
  chosen.push_back(static_cast<std::uint32_t>(rng.below(n)));
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* p = points + i * d;
    const double* c = points + chosen[0] * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = p[j] - c[j];
      s = s + diff * diff;
    }
    dist[i] = s;
  }
  while (chosen.size() < k) {
    double total = 0.0;
    for (double v : dist) total = total + v;
    std::uint32_t next = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      next = static_cast<std::uint32_t>(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        acc = acc + dist[i];
        if (acc > r) {
          next = static_cast<std::uint32_t>(i);
          break;
        }
      }
    } else {
      // Every remaining point coincides with a centroid; take the lowest
      // index not yet chosen to keep the result deterministic.
      std::vector<bool> used(n, false);
      for (auto c : chosen) used[c] = true;
      while (next < n && used[next]) ++next;
      if (next >= n) next = 0;
    }
    chosen.push_back(next);
    const double* c = points + next * d;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      const double* p = points + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = p[j] - c[j];
        s = s + diff * diff;
      }
      if (s < dist[i]) dist[i] = s;
    }
  }
  return chosen;
}

}  // namespace

KMeansResult kmeans(const double* points, std::size_t n, std::size_t d,
                    std::size_t k, int max_iter, double tol, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ParameterError("kmeans: empty input");
  if (k < 1) throw ParameterError("kmeans: k must be >= 1");
  if (k > n) {
    throw ParameterError("kmeans: k = " + std::to_string(k) +
                         " exceeds the number of points (" + std::to_string(n) +
                         "); cannot seed k distinct centroids");
  }
  if (max_iter < 1) throw ParameterError("kmeans: max_iter must be >= 1");

  Rng rng(seed);
  KMeansResult res;
  res.centroids.resize(k * d);
  {
    const auto chosen = kmeanspp_seed(points, n, d, k, rng);
    for (std::size_t c = 0; c < k; ++c) {
      std::memcpy(res.centroids.data() + c * d, points + chosen[c] * d,
                  d * sizeof(double));
    }
  }
  res.assignments.assign(n, 0);

  std::vector<double> ct(d * k);          // centroids transposed for the scan
  std::vector<double> min_dist(n, 0.0);
  std::vector<std::uint32_t> prev_assign;
  double prev_distortion = -1.0;

  auto assign_pass = [&] {
    kern::transpose(res.centroids.data(), ct.data(), k, d);
    parallel_for(n, 64, [&](std::size_t i0, std::size_t i1) {
      std::vector<double> dists(k);
      for (std::size_t i = i0; i < i1; ++i) {
        kern::backend().l2sq_scan(points + i * d, ct.data(), k, d, dists.data());
        // Strict < keeps ties on the lowest centroid index.
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
          if (dists[c] < dists[best]) best = c;
        }
        res.assignments[i] = static_cast<std::uint32_t>(best);
        min_dist[i] = dists[best];
      }
    });
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total = total + min_dist[i];
    return total;
  };

  for (int it = 1; it <= max_iter; ++it) {
    res.iterations = it;
    res.distortion = assign_pass();
    if (!prev_assign.empty() && prev_assign == res.assignments) break;
    if (prev_distortion >= 0.0 &&
        std::fabs(prev_distortion - res.distortion) <=
            tol * std::max(1.0, prev_distortion)) {
      break;
    }
    prev_assign = res.assignments;
    prev_distortion = res.distortion;
    if (it == max_iter) break;  // keep distortion in sync with assignments

    // Update means in point-index order.
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t a = res.assignments[i];
      const double* p = points + i * d;
      double* s = sums.data() + a * d;
      for (std::size_t j = 0; j < d; ++j) s[j] = s[j] + p[j];
      ++counts[a];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < d; ++j) {
        res.centroids[c * d + j] = sums[c * d + j] * inv;
      }
    }
    // Reseed empty clusters with the farthest point from its centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (min_dist[i] > min_dist[far]) far = i;
      }
      std::memcpy(res.centroids.data() + c * d, points + far * d,
                  d * sizeof(double));
      min_dist[far] = 0.0;
    }
  }
  return res;
}

void PQConfig::validate(std::size_t rows, std::size_t cols) const {
  if (num_subspaces < 1) throw ParameterError("P must be >= 1");
  if (num_centroids < 1 || num_centroids > 65535) {
    throw ParameterError("K_s must be in [1, 65535]");
  }
  if (cols % static_cast<std::size_t>(num_subspaces) != 0) {
    throw ParameterError("N = " + std::to_string(cols) +
                         " is not divisible by P = " + std::to_string(num_subspaces));
  }
  if (rows <= static_cast<std::size_t>(num_centroids)) {
    throw ParameterError("quantization requires M > K_s (got M = " +
                         std::to_string(rows) + ", K_s = " +
                         std::to_string(num_centroids) + ")");
  }
  if (kmeans_max_iter < 1) throw ParameterError("kmeans_max_iter must be >= 1");
  if (!(kmeans_tol >= 0.0)) throw ParameterError("kmeans_tol must be >= 0");
}

nn::PQCodebook quantize(const Tensor& w, const PQConfig& cfg) {
  if (w.rank() != 2) throw DimensionError("quantize expects a 2-D weight matrix");
  const std::size_t m = w.dim(0), n = w.dim(1);
  cfg.validate(m, n);
  const std::size_t p = static_cast<std::size_t>(cfg.num_subspaces);
  const std::size_t ks = static_cast<std::size_t>(cfg.num_centroids);
  const std::size_t d = n / p;

  nn::PQCodebook cb;
  cb.rows = static_cast<std::uint32_t>(m);
  cb.cols = static_cast<std::uint32_t>(n);
  cb.num_subspaces = static_cast<std::uint16_t>(p);
  cb.num_centroids = static_cast<std::uint16_t>(ks);
  cb.centroids.resize(p * ks * d);
  cb.codes.resize(m * p);

  std::vector<double> sub(m * d);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t z = 0; z < m; ++z) {
      std::memcpy(sub.data() + z * d, w.data() + z * n + i * d, d * sizeof(double));
    }
    const std::uint64_t sub_seed =
        Rng::derive_seed(cfg.seed, {kSubspaceTag, static_cast<std::uint64_t>(i)});
    auto km = kmeans(sub.data(), m, d, ks, cfg.kmeans_max_iter, cfg.kmeans_tol,
                     sub_seed);
    std::memcpy(cb.centroids.data() + i * ks * d, km.centroids.data(),
                ks * d * sizeof(double));
    for (std::size_t z = 0; z < m; ++z) {
      cb.codes[z * p + i] = static_cast<std::uint16_t>(km.assignments[z]);
    }
  }
  cb.validate();
  return cb;
}

double reconstruction_mse(const Tensor& w, const nn::PQCodebook& cb) {
  if (w.rank() != 2 || w.dim(0) != cb.rows || w.dim(1) != cb.cols) {
    throw DimensionError("reconstruction_mse: shape mismatch");
  }
  const Tensor rec = cb.reconstruct();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = w.data()[i] - rec.data()[i];
    s = s + diff * diff;
  }
  return s / static_cast<double>(w.size());
}

double compression_rate(double bits, std::uint64_t m, std::uint64_t n,
                        std::uint64_t ks, std::uint64_t p) {
  if (!(bits > 0.0) || m == 0 || n == 0 || ks == 0 || p == 0) {
    throw ParameterError("compression_rate: all arguments must be positive");
  }
  std::uint64_t code_bits = 0;
  while ((std::uint64_t{1} << code_bits) < ks) ++code_bits;
  const double numerator = bits * static_cast<double>(m) * static_cast<double>(n);
  const double denominator =
      bits * static_cast<double>(ks) * static_cast<double>(n) +
      static_cast<double>(code_bits) * static_cast<double>(m) * static_cast<double>(p);
  return numerator / denominator;
}

std::pair<nn::ModelGraph, QuantReport> quantize_model(const nn::ModelGraph& m,
                                                      const std::string& layer_name,
                                                      const PQConfig& cfg) {
  const auto& spec = m.layer(layer_name);
  if (spec.kind != nn::LayerKind::kDense) {
    throw ParameterError("layer '" + layer_name + "' is not a dense layer");
  }
  const auto& w = *m.param(layer_name + ".w");
  auto cb = quantize(w, cfg);

  QuantReport report;
  report.reconstruction_mse = reconstruction_mse(w, cb);
  report.compression = compression_rate(64.0, cb.rows, cb.cols, cb.num_centroids,
                                        cb.num_subspaces);
  report.bytes_original = static_cast<std::uint64_t>(cb.rows) * cb.cols * 8;
  report.bytes_codebook = static_cast<std::uint64_t>(cb.num_centroids) * cb.cols * 8;
  report.bytes_codes = static_cast<std::uint64_t>(cb.rows) * cb.num_subspaces *
                       (cb.num_centroids <= 256 ? 1 : 2);

  auto quantized = nn::to_pq_layer(m, layer_name, std::move(cb));
  quantized.provenance["pq_subspaces"] = std::to_string(cfg.num_subspaces);
  quantized.provenance["pq_centroids"] = std::to_string(cfg.num_centroids);
  return {std::move(quantized), report};
}

nn::TrainResult retrain_quantized(nn::ModelGraph& m, const rf::Dataset& d,
                                  const nn::TrainConfig& cfg, double fraction) {
  bool has_pq = false;
  for (const auto& spec : m.layers) has_pq |= spec.kind == nn::LayerKind::kDensePq;
  if (!has_pq) throw ContractError("retrain_quantized: model has no PQ layer");
  if (!(fraction > 0.0)) {
    throw ParameterError("retraining requires a positive data fraction");
  }
  auto sub = nn::subset(d, fraction, cfg.seed);
  return nn::train(m, sub, cfg);
}

std::string quant_report_csv(const PQConfig& cfg, const QuantReport& r,
                             double accuracy) {
  auto fmt = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
  };
  std::string csv = "P,K_s,C_Q,mse,accuracy\n";
  csv += std::to_string(cfg.num_subspaces) + "," + std::to_string(cfg.num_centroids) +
         "," + fmt(r.compression) + "," + fmt(r.reconstruction_mse) + "," +
         fmt(accuracy) + "\n";
  return csv;
}

}  // namespace amc::pq
