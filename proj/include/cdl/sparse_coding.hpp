#pragma once

#include <vector>

#include "cdl/common.hpp"
#include "cdl/projection.hpp"

namespace cdl {

// Dictionary as a pursuit algorithm sees it. For sketched data this is the
// equivalent dictionary Psi = R^T D of one block (columns are NOT unit norm
// even when D's are, hence the cached column norms); for in-domain coding it
// is D itself. gram = Psi^T Psi is filled only when requested.
struct EquivalentDictionary {
  Matrix psi;
  Vector column_norms;
  Matrix gram;

  bool has_gram() const noexcept { return gram.size() != 0; }
  Index dim() const noexcept { return psi.rows(); }
  Index atoms() const noexcept { return psi.cols(); }
};

EquivalentDictionary equivalent_dictionary(const ProjectionMatrix& R,
                                           const Matrix& D, bool with_gram);
EquivalentDictionary plain_dictionary(Matrix D, bool with_gram);

// Greedy pursuit tolerances, shared by both implementations:
//  - an atom is usable when its norm exceeds kAtomNormTol * max column norm;
//  - pursuit stops once the residual drops to kResidualTol * ||y||;
//  - a candidate whose projection onto the span of the selected atoms leaves
//    squared distance <= kDependentTol * ||psi_j||^2 is linearly dependent
//    and ends the pursuit.
inline constexpr double kAtomNormTol = 1e-12;
inline constexpr double kResidualTol = 1e-10;
inline constexpr double kDependentTol = 1e-24;

// Code of a single sample. support is sorted by atom index; values match it.
// degenerate marks a sample that could not be coded at all (no usable atoms).
struct SparseCode {
  std::vector<int> support;
  std::vector<double> values;
  bool degenerate = false;
  std::vector<double> residual_norms;  // ||r|| after 0, 1, ... selections
};

// Orthogonal matching pursuit for one sample: at each step picks the atom
// maximizing |<r, psi_j>| / ||psi_j|| (ties -> lowest index), then re-solves
// the least squares on the enlarged support via a progressive Cholesky.
SparseCode omp(const Vector& y, const EquivalentDictionary& dict,
               int sparsity);

// Codes of one block, in fixed-capacity slots (capacity = target sparsity).
class SparseCodeBlock {
public:
  SparseCodeBlock() = default;
  SparseCodeBlock(Index samples, int capacity);

  Index samples() const noexcept { return n_; }
  int capacity() const noexcept { return cap_; }

  int count(Index i) const { return counts_[std::size_t(i)]; }
  int atom(Index i, int t) const { return atoms_[slot(i, t)]; }
  double value(Index i, int t) const { return values_[slot(i, t)]; }
  bool degenerate(Index i) const { return degenerate_[std::size_t(i)] != 0; }

  void assign(Index i, const SparseCode& code);
  void set_value(Index i, int t, double v) { values_[slot(i, t)] = v; }

  // Slot of a given atom in sample i's support, or -1.
  int slot_of(Index i, int atom_index) const;

  // True when supports (not values) coincide sample by sample.
  bool same_pattern(const SparseCodeBlock& other) const;

private:
  std::size_t slot(Index i, int t) const {
    return std::size_t(i) * std::size_t(cap_) + std::size_t(t);
  }

  Index n_ = 0;
  int cap_ = 0;
  std::vector<std::int32_t> counts_;
  std::vector<std::int32_t> atoms_;
  std::vector<double> values_;
  std::vector<char> degenerate_;
};

// Batch pursuit over a whole block: precomputes Psi^T Y and the Gram matrix
// once, then runs each sample on cached correlations only (no residual
// vectors). Selection rule and tolerances match omp() exactly.
SparseCodeBlock batch_omp_block(const Matrix& Y,
                                const EquivalentDictionary& dict,
                                int sparsity);

}  // namespace cdl
