#pragma once

// Batched dense kernels for the likelihood engine: LDL^T factorization,
// unit-lower forward substitution and weighted cross products, each applied
// independently to K matrices.
//
// Every kernel runs one matrix per work unit with a fixed, sequential
// reduction order inside the matrix, so results are bitwise identical for
// any thread count. A matrix whose factorization fails is flagged in the
// status vector; the remaining matrices of the batch are unaffected.

#include "geoprof/matrix_batch.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace geoprof {

enum class SetStatus : std::uint8_t {
  ok = 0,
  notPositiveDefinite,  // non-positive LDL^T pivot
  zeroWeight,           // D^-1 weighting hit a zero entry
  numericalFailure,     // downstream quantity lost positivity beyond tolerance
};

const char* toString(SetStatus s);

struct BatchOptions {
  int threads = 0;  // 0: OpenMP default
};

template <typename T>
struct LdlFactorBatch {
  MatrixBatch<T> L;             // unit lower triangular, strict upper part zero
  std::vector<T> D;             // count() * n pivots
  std::vector<double> logDet;   // sum of log D, left to right
  std::vector<SetStatus> status;

  [[nodiscard]] std::size_t count() const { return L.count(); }
  [[nodiscard]] std::size_t n() const { return L.rows(); }
  [[nodiscard]] std::span<const T> pivots(std::size_t k) const {
    return {D.data() + k * n(), n()};
  }
};

/// Pivot threshold: D[i] <= n * machine-epsilon(T) * max|V| is a failure.
template <typename T>
double pivotTolerance(std::size_t n, double maxAbs);

/// Factorizes every V_k = L_k D_k L_k^T, consuming the batch storage (the
/// factors overwrite V in place).
template <typename T>
LdlFactorBatch<T> cholBatch(MatrixBatch<T>&& V, BatchOptions opts = {});

/// Copy-preserving variant.
template <typename T>
LdlFactorBatch<T> cholBatch(const MatrixBatch<T>& V, BatchOptions opts = {});

/// Solves L_k C_k = B for every valid k. B is either a single n x m matrix
/// shared by all k (count() == 1) or a batch with one right-hand side per k.
/// Invalid sets get NaN-filled solutions.
template <typename T>
MatrixBatch<T> backsolveBatch(const LdlFactorBatch<T>& factors, const MatrixBatch<T>& B,
                              BatchOptions opts = {});

enum class CrossprodWeight { D, Dinverse, identity };

/// C_k = A_k^T W_k A_k with W_k = diag(weights_k), diag(weights_k)^-1 or I.
/// `weights` holds count() * n entries (ignored for identity). Only the lower
/// triangle is accumulated and then mirrored. `status` (size count()) is read
/// to skip invalid sets and updated on zero weights under Dinverse.
template <typename T>
MatrixBatch<T> crossprodBatch(const MatrixBatch<T>& A, std::span<const T> weights,
                              CrossprodWeight mode, std::span<SetStatus> status,
                              BatchOptions opts = {});

}  // namespace geoprof
