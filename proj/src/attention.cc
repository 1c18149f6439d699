//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/attention.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smited/error.h"
#include "smited/linalg.h"

namespace smited {
namespace {

void require_even(std::size_t d) {
  if (d % 2 != 0) {
    throw NumericalError("OddHeadDim",
                         "rotary head dimension must be even, got " +
                             std::to_string(d));
  }
}

double frequency(std::size_t pair, std::size_t d, double base) {
  return std::pow(base, -2.0 * static_cast<double>(pair) / static_cast<double>(d));
}

// Rotates every head of every row of `x` in place; sign = -1 inverts.
void rotate_rows(Tensor &x, std::size_t heads, double base, double sign) {
  const std::size_t n = x.rows(), width = x.cols(), d = width / heads;
  std::vector<double> freq(d / 2);
  for (std::size_t i = 0; i < d / 2; ++i) freq[i] = frequency(i, d, base);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row_span(r);
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle = sign * static_cast<double>(r) * freq[i];
      const double c = std::cos(angle), s = std::sin(angle);
      for (std::size_t h = 0; h < heads; ++h) {
        double &x0 = row[h * d + 2 * i];
        double &x1 = row[h * d + 2 * i + 1];
        const double a = x0, b = x1;
        x0 = a * c - b * s;
        x1 = a * s + b * c;
      }
    }
  }
}

}  // namespace

std::vector<double> rotate(std::span<const double> v, double position,
                           double base) {
  require_even(v.size());
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size() / 2; ++i) {
    const double angle = position * frequency(i, v.size(), base);
    const double c = std::cos(angle), s = std::sin(angle);
    out[2 * i] = v[2 * i] * c - v[2 * i + 1] * s;
    out[2 * i + 1] = v[2 * i] * s + v[2 * i + 1] * c;
  }
  return out;
}

Tensor random_feature_projection(std::size_t m, std::size_t d, Rng &rng) {
  Tensor p({m, d});
  for (double &v : p.data()) v = rng.normal();
  return p;
}

std::vector<double> feature_map(std::span<const double> u,
                                const Tensor &projection) {
  const std::size_t m = projection.rows(), d = projection.cols();
  if (u.size() != d) throw_shape_mismatch("feature_map", {u.size()}, projection.shape());
  double sq = 0;
  for (double x : u) sq += x * x;
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    double dot = 0;
    for (std::size_t t = 0; t < d; ++t) dot += projection.at(j, t) * u[t];
    out[j] = std::exp(dot - 0.5 * sq) / std::sqrt(static_cast<double>(m));
  }
  return out;
}

namespace ad {

Var rotary(const Var &x, std::size_t heads, double base) {
  if (x.value().rank() != 2 || heads == 0 || x.shape()[1] % heads != 0) {
    throw_shape_mismatch("rotary", x.shape(), {heads});
  }
  require_even(x.shape()[1] / heads);
  Tensor out = x.value();
  rotate_rows(out, heads, base, 1.0);
  return x.tape().record(std::move(out), {x},
                         [x, heads, base](Tape &t, const Tensor &g) {
                           Tensor back = g;
                           rotate_rows(back, heads, base, -1.0);
                           t.accumulate(x, back);
                         });
}

Var random_features(const Var &u, const Tensor &projection,
                    std::span<const double> row_mask,
                    FeatureStabilizer stabilizer) {
  const Tensor &uv = u.value();
  if (uv.rank() != 2 || projection.rank() != 2 || uv.cols() != projection.cols()) {
    throw_shape_mismatch("random_features", uv.shape(), projection.shape());
  }
  const std::size_t n = uv.rows(), m = projection.rows();
  if (!row_mask.empty() && row_mask.size() != n) {
    throw_shape_mismatch("random_features", uv.shape(), {row_mask.size()});
  }
  auto kept = [&](std::size_t r) { return row_mask.empty() || row_mask[r] != 0.0; };
  Tensor expo({n, m});
  linalg::gemm(uv, false, projection, true, expo, false);
  for (std::size_t r = 0; r < n; ++r) {
    double sq = 0;
    for (double x : uv.row_span(r)) sq += x * x;
    for (double &e : expo.row_span(r)) e -= 0.5 * sq;
  }
  std::vector<double> offset(n, 0.0);
  if (stabilizer == FeatureStabilizer::kPerRow) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = expo.row_span(r);
      offset[r] = *std::max_element(row.begin(), row.end());
    }
  } else if (stabilizer == FeatureStabilizer::kShared) {
    double shared = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n; ++r) {
      if (!kept(r)) continue;
      const auto row = expo.row_span(r);
      shared = std::max(shared, *std::max_element(row.begin(), row.end()));
    }
    if (std::isfinite(shared)) std::fill(offset.begin(), offset.end(), shared);
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  Tensor phi({n, m});
  for (std::size_t r = 0; r < n; ++r) {
    if (!kept(r)) continue;
    auto in = expo.row_span(r);
    auto out = phi.row_span(r);
    for (std::size_t j = 0; j < m; ++j) out[j] = std::exp(in[j] - offset[r]) * norm;
  }
  // d phi_rj / d u_r = phi_rj (w_j - u_r)
  return u.tape().record(
      phi, {u}, [u, projection, phi](Tape &t, const Tensor &g) {
        const std::size_t rows = phi.rows(), cols = phi.cols();
        Tensor h({rows, cols});
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = g[i] * phi[i];
        Tensor du({rows, projection.cols()});
        linalg::gemm(h, false, projection, false, du, false);
        const Tensor &uv = u.value();
        for (std::size_t r = 0; r < rows; ++r) {
          double total = 0;
          for (double x : h.row_span(r)) total += x;
          auto d = du.row_span(r);
          const auto x = uv.row_span(r);
          for (std::size_t c = 0; c < d.size(); ++c) d[c] -= total * x[c];
        }
        t.accumulate(u, du);
      });
}

}  // namespace ad

Var linear_attention(const Var &q, const Var &k, const Var &v,
                     const Tensor &projection,
                     std::span<const double> key_mask) {
  if (q.shape() != k.shape()) throw_shape_mismatch("linear_attention", q.shape(), k.shape());
  if (k.value().rows() != v.value().rows()) {
    throw_shape_mismatch("linear_attention", k.shape(), v.shape());
  }
  const Var phi_q = ad::random_features(q, projection, {}, FeatureStabilizer::kPerRow);
  const Var phi_k =
      ad::random_features(k, projection, key_mask, FeatureStabilizer::kShared);
  const Var kv = ad::matmul(ad::transpose(phi_k), v);     // [m, dv]
  const Var numerator = ad::matmul(phi_q, kv);            // [N, dv]
  const Var key_total = ad::sum_rows(phi_k);              // [1, m]
  const Var denominator = ad::clamp_min(ad::matmul_nt(phi_q, key_total),
                                        kAttentionDenominatorFloor);
  return ad::div_rows(numerator, denominator);
}

}  // namespace smited
