#include "nettrim/nettrim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "kernels/kernels.hpp"

namespace amc::nettrim {

namespace {

constexpr std::uint64_t kSampleTag = 21;

double frob_norm(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s = s + x[i] * x[i];
  return std::sqrt(s);
}

double l1_norm(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s = s + std::fabs(x[i]);
  return s;
}

// sqrt of the largest eigenvalue of X X^T by power iteration; X is
// rows x n, and the all-ones start has positive overlap with the leading
// eigenvector because X holds nonnegative activations.
double sigma_max(const Tensor& x, int iters) {
  const std::size_t rows = x.dim(0), n = x.dim(1);
  std::vector<double> v(rows, 1.0 / std::sqrt(static_cast<double>(rows)));
  std::vector<double> w(n), u(rows);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    kern::backend().gemm_tn(x.data(), v.data(), w.data(), rows, n, 1);
    std::fill(u.begin(), u.end(), 0.0);
    kern::backend().gemm_nn(x.data(), w.data(), u.data(), rows, n, 1);
    lambda = frob_norm(u.data(), rows);
    if (lambda <= 0.0) break;
    kern::backend().scale(u.data(), 1.0 / lambda, v.data(), rows);
  }
  return std::sqrt(lambda);
}

// ||relu(p) - y||_F without materializing relu(p).
double relu_residual(const double* p, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (p[i] > 0.0 ? p[i] : 0.0) - y[i];
    s = s + r * r;
  }
  return std::sqrt(s);
}

}  // namespace

void NetTrimConfig::validate() const {
  if (!(epsilon_rel > 0.0) && !epsilon_abs) {
    throw ParameterError("epsilon must be positive");
  }
  if (epsilon_abs && !(*epsilon_abs > 0.0)) {
    throw ParameterError("absolute epsilon must be positive");
  }
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) {
    throw ParameterError("tolerances must be positive");
  }
  if (!(zero_threshold >= 0.0)) throw ParameterError("zero_threshold must be >= 0");
  if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
}

ActivationPair collect_activations(const nn::ModelGraph& m, const rf::Dataset& d,
                                   int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
  if (static_cast<std::size_t>(n_samples) > d.train_idx.size()) {
    throw ParameterError("n_samples " + std::to_string(n_samples) +
                         " exceeds the train split (" +
                         std::to_string(d.train_idx.size()) + ")");
  }
  const int fc = m.layer_index(m.first_fc);
  const auto& spec = m.layers[static_cast<std::size_t>(fc)];
  if (spec.kind != nn::LayerKind::kDense) {
    throw ParameterError("first_fc layer is not dense");
  }
  const int fc_input = spec.inputs.at(0);
  if (fc_input < 0) throw ContractError("first FC reads the network input");
  // The layer's post-activation output is the relu node fed by it.
  int relu_node = -1;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (m.layers[i].kind == nn::LayerKind::kRelu && m.layers[i].inputs.at(0) == fc) {
      relu_node = static_cast<int>(i);
      break;
    }
  }
  if (relu_node < 0) throw ContractError("first FC has no following relu layer");

  std::vector<std::uint32_t> pick = d.train_idx;
  Rng rng = Rng::stream(seed, {kSampleTag});
  rng.shuffle(pick);
  pick.resize(static_cast<std::size_t>(n_samples));
  std::sort(pick.begin(), pick.end());

  const std::size_t d_in = static_cast<std::size_t>(spec.in_dim);
  const std::size_t d_out = static_cast<std::size_t>(spec.out_dim);
  const std::size_t n = static_cast<std::size_t>(n_samples);

  ActivationPair pair;
  pair.bias_row = true;
  pair.x = Tensor({d_in + 1, n});
  pair.y = Tensor({d_out, n});

  constexpr std::size_t kBatch = 256;
  std::size_t col = 0;
  for (std::size_t pos = 0; pos < pick.size(); pos += kBatch) {
    const std::size_t bn = std::min(pick.size() - pos, kBatch);
    auto xb = nn::make_batch(d, pick.data() + pos, bn);
    auto outs = nn::forward_all(m, nullptr, xb);
    const auto& fin = outs[static_cast<std::size_t>(fc_input)];
    const auto& act = outs[static_cast<std::size_t>(relu_node)];
    for (std::size_t b = 0; b < bn; ++b, ++col) {
      for (std::size_t i = 0; i < d_in; ++i) {
        pair.x.data()[i * n + col] = fin->data()[b * d_in + i];
      }
      pair.x.data()[d_in * n + col] = 1.0;
      for (std::size_t j = 0; j < d_out; ++j) {
        pair.y.data()[j * n + col] = act->data()[b * d_out + j];
      }
    }
  }

  // Augmented weights: W stacked over the bias row.
  pair.w_orig = Tensor({d_in + 1, d_out});
  const auto& w = *m.param(m.first_fc + ".w");
  const auto& b = *m.param(m.first_fc + ".b");
  std::copy(w.data(), w.data() + w.size(), pair.w_orig.data());
  std::copy(b.data(), b.data() + b.size(), pair.w_orig.data() + d_in * d_out);
  return pair;
}

TrimResult trim(const ActivationPair& pair, const NetTrimConfig& cfg) {
  cfg.validate();
  const std::size_t rows = pair.x.dim(0);
  const std::size_t n = pair.x.dim(1);
  const std::size_t d_out = pair.y.dim(0);
  if (pair.y.dim(1) != n) throw DimensionError("activation pair: column mismatch");
  if (pair.w_orig.dim(0) != rows || pair.w_orig.dim(1) != d_out) {
    throw DimensionError("activation pair: w_orig shape mismatch");
  }
  const auto& bk = kern::backend();

  const double y_norm = frob_norm(pair.y.data(), pair.y.size());
  const double eps_abs =
      cfg.epsilon_abs ? *cfg.epsilon_abs : cfg.epsilon_rel * y_norm;

  // Condition the problem: scale X (and Y, epsilon with it) by 1/sigma_max
  // so the linearized-ADMM step size is dimensionless. The variable U is
  // unchanged by this rescaling.
  const double sigma = sigma_max(pair.x, 20);
  if (!(sigma > 0.0)) throw NumericalError("activation matrix is zero");
  const double inv_sigma = 1.0 / sigma;
  Tensor xs({rows, n});
  Tensor ys({d_out, n});
  bk.scale(pair.x.data(), inv_sigma, xs.data(), xs.size());
  bk.scale(pair.y.data(), inv_sigma, ys.data(), ys.size());
  const double eps_s = eps_abs * inv_sigma;
  const double ys_norm = frob_norm(ys.data(), ys.size());

  // The iteration below runs in the scaled domain but must match the scheme
  // on the original data, where mu = rho * sigma_max(X)^2: the penalty gets
  // the sigma^2 factor back, making the shrink threshold 1/(rho*sigma^2).
  // sigma_max(xs) == 1 up to the power-iteration estimate; 1% headroom keeps
  // the majorization valid despite the estimate converging from below.
  const double mu = cfg.rho * sigma * sigma * 1.01;
  const double shrink = 1.0 / mu;
  const double step = 1.0 / 1.01;

  const std::size_t un = rows * d_out;
  const std::size_t zn = d_out * n;
  std::vector<double> u(pair.w_orig.data(), pair.w_orig.data() + un);
  std::vector<double> p(zn, 0.0);   // U^T Xs
  std::vector<double> z(zn), lam(zn, 0.0), r(zn), g(un), u_prev(un);
  bk.gemm_tn(u.data(), xs.data(), p.data(), rows, d_out, n);
  z = p;

  // The warm start is feasible (residual 0), so a best iterate always exists.
  std::vector<double> best_u = u;
  double best_l1 = l1_norm(u.data(), un);
  int iterations = 0;

  const std::vector<double>& y_ref = ys.values();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    iterations = it;
    // U-step: linearized proximal update.
    bk.sub(p.data(), z.data(), r.data(), zn);
    bk.add(r.data(), lam.data(), r.data(), zn);
    std::fill(g.begin(), g.end(), 0.0);
    bk.gemm_nt(xs.data(), r.data(), g.data(), rows, n, d_out);
    u_prev = u;
    bk.axpy(-step, g.data(), u.data(), un);
    bk.soft_threshold(u.data(), shrink, u.data(), un);

    std::vector<double> du(un);
    bk.sub(u.data(), u_prev.data(), du.data(), un);
    const double u_change = frob_norm(du.data(), un) /
                            std::max(1.0, frob_norm(u_prev.data(), un));

    // Refresh P with the new iterate; track the best feasible point of the
    // true (non-relaxed) constraint.
    std::fill(p.begin(), p.end(), 0.0);
    bk.gemm_tn(u.data(), xs.data(), p.data(), rows, d_out, n);
    const double resid_true = relu_residual(p.data(), y_ref.data(), zn);
    if (resid_true <= eps_s) {
      const double l1 = l1_norm(u.data(), un);
      if (l1 < best_l1) {
        best_l1 = l1;
        best_u = u;
      }
    }

    // Z-step: exact projection onto the split constraint set
    // (Frobenius ball around Y on the positive entries, nonpositive
    // half-space elsewhere; the two parts touch disjoint entries).
    double ball_sq = 0.0;
    for (std::size_t i = 0; i < zn; ++i) {
      const double v = p[i] + lam[i];
      if (y_ref[i] > 0.0) {
        const double diff = v - y_ref[i];
        ball_sq = ball_sq + diff * diff;
      }
    }
    const double ball_norm = std::sqrt(ball_sq);
    const double scale_ball = ball_norm > eps_s ? eps_s / ball_norm : 1.0;
    for (std::size_t i = 0; i < zn; ++i) {
      const double v = p[i] + lam[i];
      if (y_ref[i] > 0.0) {
        z[i] = y_ref[i] + (v - y_ref[i]) * scale_ball;
      } else {
        z[i] = v < 0.0 ? v : 0.0;
      }
    }

    // Dual update and stopping.
    double prim_sq = 0.0;
    for (std::size_t i = 0; i < zn; ++i) {
      const double diff = p[i] - z[i];
      lam[i] += diff;
      prim_sq = prim_sq + diff * diff;
    }
    const double prim = std::sqrt(prim_sq) / std::max(1e-300, ys_norm);
    if (prim < cfg.tol_primal && u_change < cfg.tol_dual) break;
  }

  // Snap numerically tiny entries to exact zeros before packing.
  double max_abs = 0.0;
  for (double v : best_u) max_abs = std::max(max_abs, std::fabs(v));
  const double thr = cfg.zero_threshold * max_abs;
  for (double& v : best_u) {
    if (std::fabs(v) < thr) v = 0.0;
  }

  // Residual of the snapped result against the original-scale data.
  std::vector<double> p_final(zn, 0.0);
  bk.gemm_tn(best_u.data(), xs.data(), p_final.data(), rows, d_out, n);
  const double resid = relu_residual(p_final.data(), y_ref.data(), zn) * sigma;

  TrimResult res;
  res.epsilon_abs = eps_abs;
  res.residual = resid;
  res.iterations = iterations;
  res.l1 = l1_norm(best_u.data(), un);
  const std::size_t d_in = pair.bias_row ? rows - 1 : rows;
  res.w = nn::CsrMatrix::from_dense(best_u.data(), d_in, d_out);
  if (pair.bias_row) {
    res.bias.assign(best_u.begin() + static_cast<std::ptrdiff_t>(d_in * d_out),
                    best_u.end());
  }
  return res;
}

std::pair<nn::ModelGraph, PruneReport> prune_model(const nn::ModelGraph& m,
                                                   const rf::Dataset& d,
                                                   const NetTrimConfig& cfg) {
  cfg.validate();
  auto pair = collect_activations(m, d, cfg.n_samples, cfg.seed);
  auto res = trim(pair, cfg);

  const auto& spec = m.layer(m.first_fc);
  const std::uint64_t d_in = static_cast<std::uint64_t>(spec.in_dim);
  const std::uint64_t d_out = static_cast<std::uint64_t>(spec.out_dim);
  auto nnz_of = [](const double* v, std::size_t n) {
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += v[i] != 0.0 ? 1 : 0;
    return c;
  };

  PruneReport report;
  report.n_total = (d_in + 1) * d_out;
  report.n_before = nnz_of(m.param(m.first_fc + ".w")->data(), d_in * d_out) +
                    nnz_of(m.param(m.first_fc + ".b")->data(), d_out);
  report.n_after = res.w.nnz() + nnz_of(res.bias.data(), res.bias.size());
  report.pruning_efficiency = PruneReport::efficiency(report.n_after, report.n_total);
  report.epsilon_used = res.epsilon_abs;
  report.constraint_residual = res.residual;
  report.iterations = res.iterations;

  auto pruned = nn::to_sparse_layer(m, m.first_fc, std::move(res.w),
                                    std::move(res.bias));
  pruned.provenance["pruned_epsilon"] = std::to_string(cfg.epsilon_abs
                                                           ? *cfg.epsilon_abs
                                                           : cfg.epsilon_rel);
  return {std::move(pruned), report};
}

std::string prune_report_csv(const std::string& network, const PruneReport& r) {
  auto fmt = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
  };
  std::string csv = "network,n_T,n_b,n_a,p_e,epsilon,residual,iterations\n";
  csv += network + "," + std::to_string(r.n_total) + "," +
         std::to_string(r.n_before) + "," + std::to_string(r.n_after) + "," +
         fmt(r.pruning_efficiency) + "," + fmt(r.epsilon_used) + "," +
         fmt(r.constraint_residual) + "," + std::to_string(r.iterations) + "\n";
  return csv;
}

}  // namespace amc::nettrim
