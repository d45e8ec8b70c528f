#pragma once

// Truncated SVD by randomized range finding: project onto a Gaussian sketch
// with oversampling, refine with power iterations, then take an exact SVD of
// the small projected matrix (one-sided Jacobi). Deterministic for a fixed
// seed; accuracy holds on well-separated spectra.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/errors.hpp"
#include "tip/matrix.hpp"
#include "tip/rng.hpp"

namespace tip {

struct TsvdModel {
  int k = 0;
  std::vector<double> singular_values;  // non-increasing, >= 0
  Matrix components;                    // k x m, rows orthonormal
  std::string fitted_block;
};

namespace tsvd_detail {

// Modified Gram-Schmidt with a reorthogonalization pass. Columns that vanish
// (rank deficiency) are left as zeros.
inline void orthonormalize_columns(Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t l = a.cols();
  for (std::size_t j = 0; j < l; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += a(r, i) * a(r, j);
        if (dot == 0.0) continue;
        for (std::size_t r = 0; r < n; ++r) a(r, j) -= dot * a(r, i);
      }
    }
    double norm2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm2 += a(r, j) * a(r, j);
    if (norm2 <= 1e-280) {
      for (std::size_t r = 0; r < n; ++r) a(r, j) = 0.0;
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t r = 0; r < n; ++r) a(r, j) *= inv;
  }
}

// One-sided Jacobi on the columns of `m` (tall, few columns). On return the
// columns of `m` are mutually orthogonal; their norms are the singular
// values of the input.
inline void one_sided_jacobi(Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  constexpr int kMaxSweeps = 100;
  constexpr double kTol = 1e-15;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool converged = true;
    for (std::size_t i = 0; i + 1 < cols; ++i) {
      for (std::size_t j = i + 1; j < cols; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += m(r, i) * m(r, i);
          beta += m(r, j) * m(r, j);
          gamma += m(r, i) * m(r, j);
        }
        if (std::fabs(gamma) <= kTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double vi = m(r, i);
          const double vj = m(r, j);
          m(r, i) = c * vi - s * vj;
          m(r, j) = s * vi + c * vj;
        }
      }
    }
    if (converged) break;
  }
}

}  // namespace tsvd_detail

inline TsvdModel fit_tsvd(const Matrix& block, int k, std::uint64_t seed,
                          std::string fitted_block = {}, int oversample = 10,
                          int power_iters = 2) {
  const std::size_t n = block.rows();
  const std::size_t m = block.cols();
  if (k < 1) throw RankError("tsvd: k must be >= 1");
  if (static_cast<std::size_t>(k) > std::min(n, m))
    throw RankError("tsvd: k exceeds min(rows, cols)");

  const std::size_t l =
      std::min(static_cast<std::size_t>(k + oversample), std::min(n, m));

  Rng rng(seed);
  Matrix sketch(m, l);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < l; ++j) sketch(i, j) = rng.normal();

  Matrix q = matmul(block, sketch);  // n x l
  tsvd_detail::orthonormalize_columns(q);
  for (int it = 0; it < power_iters; ++it) {
    Matrix z = matmul_at(block, q);  // m x l
    tsvd_detail::orthonormalize_columns(z);
    q = matmul(block, z);
    tsvd_detail::orthonormalize_columns(q);
  }

  Matrix projected_t = transpose(matmul_at(q, block));  // (l x m)^T = m x l
  tsvd_detail::one_sided_jacobi(projected_t);

  // Column norms are singular values; normalized columns are the right
  // singular vectors of the original block.
  std::vector<double> sv(l, 0.0);
  for (std::size_t j = 0; j < l; ++j) {
    double norm2 = 0.0;
    for (std::size_t r = 0; r < m; ++r) norm2 += projected_t(r, j) * projected_t(r, j);
    sv[j] = std::sqrt(norm2);
  }
  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&sv](std::size_t a, std::size_t b) { return sv[a] > sv[b]; });

  TsvdModel model;
  model.k = k;
  model.fitted_block = std::move(fitted_block);
  model.singular_values.resize(static_cast<std::size_t>(k));
  model.components = Matrix(static_cast<std::size_t>(k), m);
  for (int r = 0; r < k; ++r) {
    const std::size_t col = order[static_cast<std::size_t>(r)];
    const double sigma = sv[col];
    model.singular_values[static_cast<std::size_t>(r)] = sigma;
    if (sigma > 1e-280) {
      const double inv = 1.0 / sigma;
      for (std::size_t c = 0; c < m; ++c)
        model.components(static_cast<std::size_t>(r), c) = projected_t(c, col) * inv;
    }
  }
  return model;
}

/// Project a block onto the fitted components: scores = block * components^T.
inline Matrix apply_tsvd(const TsvdModel& model, const Matrix& block) {
  if (block.cols() != model.components.cols())
    throw ShapeMismatch("apply_tsvd: block width does not match fitted width");
  return matmul_bt(block, model.components);
}

/// Keep only the strongest k_prime components of a fitted model.
inline TsvdModel truncate_tsvd(const TsvdModel& model, int k_prime) {
  if (k_prime < 1 || k_prime > model.k) throw RankError("truncate_tsvd: bad k");
  TsvdModel out;
  out.k = k_prime;
  out.fitted_block = model.fitted_block;
  out.singular_values.assign(model.singular_values.begin(),
                             model.singular_values.begin() + k_prime);
  out.components = Matrix(static_cast<std::size_t>(k_prime), model.components.cols());
  for (int r = 0; r < k_prime; ++r)
    for (std::size_t c = 0; c < model.components.cols(); ++c)
      out.components(static_cast<std::size_t>(r), c) =
          model.components(static_cast<std::size_t>(r), c);
  return out;
}

inline nlohmann::json tsvd_to_json(const TsvdModel& model) {
  nlohmann::json j;
  j["k"] = model.k;
  j["fitted_block"] = model.fitted_block;
  j["singular_values"] = model.singular_values;
  auto rows = nlohmann::json::array();
  for (int r = 0; r < model.k; ++r) {
    std::vector<double> row(model.components.row(static_cast<std::size_t>(r)),
                            model.components.row(static_cast<std::size_t>(r)) +
                                model.components.cols());
    rows.push_back(std::move(row));
  }
  j["components"] = std::move(rows);
  return j;
}

inline TsvdModel tsvd_from_json(const nlohmann::json& j) {
  TsvdModel model;
  model.k = j.at("k").get<int>();
  model.fitted_block = j.at("fitted_block").get<std::string>();
  model.singular_values = j.at("singular_values").get<std::vector<double>>();
  const auto& rows = j.at("components");
  const std::size_t m = rows.empty() ? 0 : rows.front().size();
  model.components = Matrix(rows.size(), m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    for (std::size_t c = 0; c < m; ++c) model.components(r, c) = row[c];
  }
  return model;
}

}  // namespace tip
