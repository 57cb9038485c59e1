#include "geoprof/batchlinalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace geoprof {

namespace {

int resolveThreads(const BatchOptions& opts) {
  return opts.threads > 0 ? opts.threads : omp_get_max_threads();
}

// Crout-style row-by-row LDL^T of one row-major n x n matrix in place.
// work must hold n doubles. Returns false on a pivot at or below tol.
template <typename T>
bool ldlInPlace(T* a, T* d, std::size_t n, double tol, double* work, double& logDet) {
  logDet = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    T* rowI = a + i * n;
    for (std::size_t j = 0; j < i; ++j) {
      const T* rowJ = a + j * n;
      double s = static_cast<double>(rowI[j]);
      for (std::size_t k = 0; k < j; ++k) s -= work[k] * static_cast<double>(rowJ[k]);
      work[j] = s;  // L_ij * D_j
      rowI[j] = static_cast<T>(s / static_cast<double>(d[j]));
    }
    double dii = static_cast<double>(rowI[i]);
    for (std::size_t k = 0; k < i; ++k) dii -= work[k] * static_cast<double>(rowI[k]);
    if (!(dii > tol)) {
      ok = false;
      d[i] = static_cast<T>(std::numeric_limits<double>::quiet_NaN());
      logDet = -std::numeric_limits<double>::infinity();
      break;
    }
    d[i] = static_cast<T>(dii);
    logDet += std::log(static_cast<double>(d[i]));
    rowI[i] = T{1};
    std::fill(rowI + i + 1, rowI + n, T{0});
  }
  return ok;
}

}  // namespace

const char* toString(SetStatus s) {
  switch (s) {
    case SetStatus::ok:
      return "ok";
    case SetStatus::notPositiveDefinite:
      return "notPositiveDefinite";
    case SetStatus::zeroWeight:
      return "zeroWeight";
    case SetStatus::numericalFailure:
      return "numericalFailure";
  }
  return "unknown";
}

template <typename T>
double pivotTolerance(std::size_t n, double maxAbs) {
  return static_cast<double>(n) * static_cast<double>(std::numeric_limits<T>::epsilon()) * maxAbs;
}

template <typename T>
LdlFactorBatch<T> cholBatch(MatrixBatch<T>&& V, BatchOptions opts) {
  if (V.rows() != V.cols()) throw std::invalid_argument("cholBatch: matrices must be square");
  const std::size_t K = V.count();
  const std::size_t n = V.rows();
  LdlFactorBatch<T> f;
  f.D.assign(K * n, T{0});
  f.logDet.assign(K, 0.0);
  f.status.assign(K, SetStatus::ok);
  f.L = std::move(V);

  const auto Kll = static_cast<long long>(K);
#pragma omp parallel num_threads(resolveThreads(opts)) if (K > 1)
  {
    std::vector<double> work(n);
#pragma omp for schedule(dynamic, 1)
    for (long long kk = 0; kk < Kll; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      auto m = f.L.matrix(k);
      double maxAbs = 0.0;
      for (const T v : m) maxAbs = std::max(maxAbs, std::abs(static_cast<double>(v)));
      const double tol = pivotTolerance<T>(n, maxAbs);
      if (!ldlInPlace(m.data(), f.D.data() + k * n, n, tol, work.data(), f.logDet[k])) {
        f.status[k] = SetStatus::notPositiveDefinite;
      }
    }
  }
  return f;
}

template <typename T>
LdlFactorBatch<T> cholBatch(const MatrixBatch<T>& V, BatchOptions opts) {
  MatrixBatch<T> copy = V;
  return cholBatch(std::move(copy), opts);
}

template <typename T>
MatrixBatch<T> backsolveBatch(const LdlFactorBatch<T>& factors, const MatrixBatch<T>& B,
                              BatchOptions opts) {
  const std::size_t K = factors.count();
  const std::size_t n = factors.n();
  const std::size_t m = B.cols();
  if (B.rows() != n || (B.count() != 1 && B.count() != K)) {
    throw std::invalid_argument("backsolveBatch: right-hand side has " + std::to_string(B.rows()) +
                                " rows (expected " + std::to_string(n) + ") and " +
                                std::to_string(B.count()) + " matrices");
  }
  MatrixBatch<T> C(K, n, m);
  const auto Kll = static_cast<long long>(K);
#pragma omp parallel num_threads(resolveThreads(opts)) if (K > 1)
  {
    std::vector<double> acc(m);
#pragma omp for schedule(dynamic, 1)
    for (long long kk = 0; kk < Kll; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      auto c = C.matrix(k);
      if (factors.status[k] != SetStatus::ok) {
        std::fill(c.begin(), c.end(), std::numeric_limits<T>::quiet_NaN());
        continue;
      }
      const auto L = factors.L.matrix(k);
      const auto b = B.matrix(B.count() == 1 ? 0 : k);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t col = 0; col < m; ++col) acc[col] = static_cast<double>(b[i * m + col]);
        for (std::size_t r = 0; r < i; ++r) {
          const double lir = static_cast<double>(L[i * n + r]);
          if (lir == 0.0) continue;
          const T* cr = c.data() + r * m;
          for (std::size_t col = 0; col < m; ++col) acc[col] -= lir * static_cast<double>(cr[col]);
        }
        for (std::size_t col = 0; col < m; ++col) c[i * m + col] = static_cast<T>(acc[col]);
      }
    }
  }
  return C;
}

template <typename T>
MatrixBatch<T> crossprodBatch(const MatrixBatch<T>& A, std::span<const T> weights,
                              CrossprodWeight mode, std::span<SetStatus> status,
                              BatchOptions opts) {
  const std::size_t K = A.count();
  const std::size_t n = A.rows();
  const std::size_t m = A.cols();
  if (status.size() != K) throw std::invalid_argument("crossprodBatch: status size mismatch");
  if (mode != CrossprodWeight::identity && weights.size() != K * n) {
    throw std::invalid_argument("crossprodBatch: expected " + std::to_string(K * n) +
                                " weights, got " + std::to_string(weights.size()));
  }
  MatrixBatch<T> C(K, m, m);
  const auto Kll = static_cast<long long>(K);
#pragma omp parallel num_threads(resolveThreads(opts)) if (K > 1)
  {
    std::vector<double> acc(m * m);
#pragma omp for schedule(dynamic, 1)
    for (long long kk = 0; kk < Kll; ++kk) {
      const auto k = static_cast<std::size_t>(kk);
      auto c = C.matrix(k);
      if (status[k] != SetStatus::ok) {
        std::fill(c.begin(), c.end(), std::numeric_limits<T>::quiet_NaN());
        continue;
      }
      const auto a = A.matrix(k);
      std::fill(acc.begin(), acc.end(), 0.0);
      bool zero = false;
      for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        if (mode == CrossprodWeight::D) {
          w = static_cast<double>(weights[k * n + i]);
        } else if (mode == CrossprodWeight::Dinverse) {
          const double di = static_cast<double>(weights[k * n + i]);
          if (di == 0.0) {
            zero = true;
            break;
          }
          w = 1.0 / di;
        }
        const T* ai = a.data() + i * m;
        for (std::size_t r = 0; r < m; ++r) {
          const double war = w * static_cast<double>(ai[r]);
          double* accRow = acc.data() + r * m;
          for (std::size_t s = 0; s <= r; ++s) accRow[s] += war * static_cast<double>(ai[s]);
        }
      }
      if (zero) {
        status[k] = SetStatus::zeroWeight;
        std::fill(c.begin(), c.end(), std::numeric_limits<T>::quiet_NaN());
        continue;
      }
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t s = 0; s <= r; ++s) {
          const T v = static_cast<T>(acc[r * m + s]);
          c[r * m + s] = v;
          c[s * m + r] = v;
        }
      }
    }
  }
  return C;
}

#define GEOPROF_INSTANTIATE(T)                                                                  \
  template double pivotTolerance<T>(std::size_t, double);                                       \
  template LdlFactorBatch<T> cholBatch<T>(MatrixBatch<T>&&, BatchOptions);                      \
  template LdlFactorBatch<T> cholBatch<T>(const MatrixBatch<T>&, BatchOptions);                 \
  template MatrixBatch<T> backsolveBatch<T>(const LdlFactorBatch<T>&, const MatrixBatch<T>&,    \
                                            BatchOptions);                                      \
  template MatrixBatch<T> crossprodBatch<T>(const MatrixBatch<T>&, std::span<const T>,          \
                                            CrossprodWeight, std::span<SetStatus>, BatchOptions);

GEOPROF_INSTANTIATE(double)
GEOPROF_INSTANTIATE(float)

#undef GEOPROF_INSTANTIATE

}  // namespace geoprof
