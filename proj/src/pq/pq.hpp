#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "models/model.hpp"
#include "train/trainer.hpp"

namespace amc::pq {

struct PQConfig {
  int num_subspaces = 2;    // P
  int num_centroids = 256;  // K_s
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-8;
  std::uint64_t seed = 0;

  void validate(std::size_t rows, std::size_t cols) const;
};

struct KMeansResult {
  std::vector<double> centroids;  // [k x d]
  std::vector<std::uint32_t> assignments;
  double distortion = 0.0;  // within-cluster sum of squared distances
  int iterations = 0;
};

// Lloyd iterations from k-means++ seeding. Assignment ties go to the lowest
// centroid index; empty clusters are reseeded with the point farthest from
// its centroid. Deterministic given the seed.
KMeansResult kmeans(const double* points, std::size_t n, std::size_t d,
                    std::size_t k, int max_iter, double tol, std::uint64_t seed);

// Algorithm: partition W[M x N] column-wise into P subspaces of width N/P,
// run k-means with K_s centroids per subspace, store one code per
// (row, subspace). Per-subspace seeds derive from (seed, subspace).
nn::PQCodebook quantize(const Tensor& w, const PQConfig& cfg);

// Mean squared reconstruction error over all M*N entries.
double reconstruction_mse(const Tensor& w, const nn::PQCodebook& cb);

// C_Q = b*M*N / (b*K_s*N + log2(K_s)*M*P); bit_width uses ceil(log2 K_s).
double compression_rate(double bits, std::uint64_t m, std::uint64_t n,
                        std::uint64_t ks, std::uint64_t p);

struct QuantReport {
  double compression = 0.0;  // C_Q
  std::uint64_t bytes_original = 0;
  std::uint64_t bytes_codebook = 0;
  std::uint64_t bytes_codes = 0;
  double reconstruction_mse = 0.0;
};

// Replace layer_name's dense weights with a PQ codebook; forward passes use
// the reconstruction, the bias is untouched, and the layer becomes frozen.
std::pair<nn::ModelGraph, QuantReport> quantize_model(const nn::ModelGraph& m,
                                                      const std::string& layer_name,
                                                      const PQConfig& cfg);

// Post-quantization fine-tuning: the PQ layer stays bitwise frozen while the
// rest of the network trains on a stratified fraction of the train split.
nn::TrainResult retrain_quantized(nn::ModelGraph& m, const rf::Dataset& d,
                                  const nn::TrainConfig& cfg, double fraction);

// CSV row: P,K_s,C_Q,mse,accuracy.
std::string quant_report_csv(const PQConfig& cfg, const QuantReport& r,
                             double accuracy);

}  // namespace amc::pq
