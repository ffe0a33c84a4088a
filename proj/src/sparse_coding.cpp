#include "cdl/sparse_coding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cdl {

EquivalentDictionary equivalent_dictionary(const ProjectionMatrix& R,
                                           const Matrix& D, bool with_gram) {
  if (D.rows() != R.p())
    throw DimensionError("equivalent_dictionary: D rows != projection p");
  EquivalentDictionary dict;
  dict.psi = R.sketch(D);
  dict.column_norms = dict.psi.colwise().norm();
  if (with_gram) dict.gram = dict.psi.transpose() * dict.psi;
  return dict;
}

EquivalentDictionary plain_dictionary(Matrix D, bool with_gram) {
  EquivalentDictionary dict;
  dict.psi = std::move(D);
  dict.column_norms = dict.psi.colwise().norm();
  if (with_gram) dict.gram = dict.psi.transpose() * dict.psi;
  return dict;
}

namespace {

// Shared pursuit scaffolding: progressive Cholesky of the selected atoms'
// Gram matrix, plus the usable-atom mask.
struct PursuitWorkspace {
  Matrix L;                  // lower Cholesky factor, grows along chosen
  std::vector<int> chosen;
  std::vector<char> in_support;
  Vector alpha0_sel;         // <psi_j, y> for chosen j, selection order
  Vector coef;               // current LS coefficients, selection order

  void reset(Index K, int cap) {
    L.resize(cap, cap);
    chosen.clear();
    chosen.reserve(std::size_t(cap));
    in_support.assign(std::size_t(K), 0);
    alpha0_sel.resize(cap);
    coef.resize(cap);
  }

  // Extends the factor with atom j given g = Psi_sel^T psi_j and ||psi_j||^2.
  // Returns false when psi_j is (numerically) inside the current span.
  bool push(const Vector& g, double norm2_j, double alpha0_j) {
    const Index c = Index(chosen.size());
    double diag2 = norm2_j;
    if (c > 0) {
      auto head = L.topLeftCorner(c, c).triangularView<Eigen::Lower>();
      Vector w = head.solve(g);
      diag2 -= w.squaredNorm();
      if (diag2 <= kDependentTol * norm2_j) return false;
      L.block(c, 0, 1, c) = w.transpose();
    } else if (diag2 <= 0.0) {
      return false;
    }
    L(c, c) = std::sqrt(diag2);
    alpha0_sel[c] = alpha0_j;
    return true;
  }

  // Solves L L^T coef = alpha0 on the current support.
  void solve(Index c) {
    auto head = L.topLeftCorner(c, c).triangularView<Eigen::Lower>();
    coef.head(c) = head.solve(alpha0_sel.head(c));
    head.transpose().solveInPlace(coef.head(c));
  }
};

std::vector<char> usable_mask(const Vector& norms, bool* any) {
  const double max_norm = norms.size() ? norms.maxCoeff() : 0.0;
  std::vector<char> usable(std::size_t(norms.size()), 0);
  *any = false;
  for (Index j = 0; j < norms.size(); ++j) {
    usable[std::size_t(j)] = norms[j] > kAtomNormTol * max_norm && norms[j] > 0.0;
    if (usable[std::size_t(j)]) *any = true;
  }
  return usable;
}

// argmax over usable, unselected atoms of |alpha_j| / norm_j; ties keep the
// lowest index because only a strictly larger score replaces the incumbent.
int select_atom(const Vector& alpha, const Vector& norms,
                const std::vector<char>& usable,
                const std::vector<char>& in_support) {
  int best = -1;
  double best_score = -1.0;
  for (Index j = 0; j < alpha.size(); ++j) {
    if (!usable[std::size_t(j)] || in_support[std::size_t(j)]) continue;
    const double score = std::abs(alpha[j]) / norms[j];
    if (score > best_score) {
      best_score = score;
      best = int(j);
    }
  }
  return best;
}

void package(const PursuitWorkspace& ws, SparseCode* code) {
  const std::size_t c = ws.chosen.size();
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ws.chosen[a] < ws.chosen[b];
  });
  code->support.resize(c);
  code->values.resize(c);
  for (std::size_t t = 0; t < c; ++t) {
    code->support[t] = ws.chosen[order[t]];
    code->values[t] = ws.coef[Index(order[t])];
  }
}

}  // namespace

SparseCode omp(const Vector& y, const EquivalentDictionary& dict,
               int sparsity) {
  if (y.size() != dict.dim())
    throw DimensionError("omp: sample dimension mismatch");
  if (sparsity < 1) throw ConfigError("omp: sparsity must be >= 1");

  SparseCode code;
  code.residual_norms.push_back(y.norm());
  bool any_usable = false;
  const auto usable = usable_mask(dict.column_norms, &any_usable);
  if (!any_usable) {
    code.degenerate = true;
    return code;
  }

  const double stop_norm = kResidualTol * code.residual_norms.front();
  const Index K = dict.atoms();
  const int cap = int(std::min<Index>(sparsity, K));
  PursuitWorkspace ws;
  ws.reset(K, cap);

  Vector r = y;
  Vector alpha(K);
  for (int step = 0; step < cap; ++step) {
    if (code.residual_norms.back() <= stop_norm) break;
    alpha.noalias() = dict.psi.transpose() * r;
    const int j = select_atom(alpha, dict.column_norms, usable, ws.in_support);
    if (j < 0) break;

    const Index c = Index(ws.chosen.size());
    Vector g(c);
    for (Index t = 0; t < c; ++t)
      g[t] = dict.psi.col(ws.chosen[std::size_t(t)]).dot(dict.psi.col(j));
    const double norm2_j = dict.column_norms[j] * dict.column_norms[j];
    if (!ws.push(g, norm2_j, dict.psi.col(j).dot(y))) break;
    ws.chosen.push_back(j);
    ws.in_support[std::size_t(j)] = 1;

    ws.solve(c + 1);
    r = y;
    for (Index t = 0; t <= c; ++t)
      r.noalias() -= ws.coef[t] * dict.psi.col(ws.chosen[std::size_t(t)]);
    code.residual_norms.push_back(r.norm());
  }

  package(ws, &code);
  return code;
}

SparseCodeBlock::SparseCodeBlock(Index samples, int capacity)
    : n_(samples),
      cap_(capacity),
      counts_(std::size_t(samples), 0),
      atoms_(std::size_t(samples) * std::size_t(capacity), -1),
      values_(std::size_t(samples) * std::size_t(capacity), 0.0),
      degenerate_(std::size_t(samples), 0) {
  if (samples < 0 || capacity < 1)
    throw DimensionError("SparseCodeBlock: bad shape");
}

void SparseCodeBlock::assign(Index i, const SparseCode& code) {
  if (int(code.support.size()) > cap_)
    throw DimensionError("SparseCodeBlock::assign: code exceeds capacity");
  counts_[std::size_t(i)] = int(code.support.size());
  degenerate_[std::size_t(i)] = code.degenerate ? 1 : 0;
  for (std::size_t t = 0; t < code.support.size(); ++t) {
    atoms_[slot(i, int(t))] = code.support[t];
    values_[slot(i, int(t))] = code.values[t];
  }
  for (int t = int(code.support.size()); t < cap_; ++t) {
    atoms_[slot(i, t)] = -1;
    values_[slot(i, t)] = 0.0;
  }
}

int SparseCodeBlock::slot_of(Index i, int atom_index) const {
  const int c = count(i);
  for (int t = 0; t < c; ++t)
    if (atoms_[slot(i, t)] == atom_index) return t;
  return -1;
}

bool SparseCodeBlock::same_pattern(const SparseCodeBlock& other) const {
  return n_ == other.n_ && cap_ == other.cap_ && counts_ == other.counts_ &&
         atoms_ == other.atoms_;
}

SparseCodeBlock batch_omp_block(const Matrix& Y,
                                const EquivalentDictionary& dict,
                                int sparsity) {
  if (Y.rows() != dict.dim())
    throw DimensionError("batch_omp_block: sample dimension mismatch");
  if (sparsity < 1) throw ConfigError("batch_omp_block: sparsity must be >= 1");
  if (!dict.has_gram())
    throw ConfigError("batch_omp_block: dictionary must carry its Gram matrix");

  const Index K = dict.atoms();
  const Index n = Y.cols();
  SparseCodeBlock codes(n, sparsity);

  bool any_usable = false;
  const auto usable = usable_mask(dict.column_norms, &any_usable);
  SparseCode empty;
  if (!any_usable) {
    empty.degenerate = true;
    for (Index i = 0; i < n; ++i) codes.assign(i, empty);
    return codes;
  }

  // All samples share one correlation precompute; per-sample work never
  // touches Y again.
  const Matrix A0 = dict.psi.transpose() * Y;  // K x n

  const int cap = int(std::min<Index>(sparsity, K));
  PursuitWorkspace ws;
  Vector alpha(K), beta(K), g(cap);
  SparseCode code;
  for (Index i = 0; i < n; ++i) {
    const double ynorm2 = Y.col(i).squaredNorm();
    const double stop_eps = kResidualTol * kResidualTol * ynorm2;
    ws.reset(K, cap);
    alpha = A0.col(i);
    double eps = ynorm2;

    for (int step = 0; step < cap; ++step) {
      if (eps <= stop_eps) break;
      const int j = select_atom(alpha, dict.column_norms, usable, ws.in_support);
      if (j < 0) break;

      const Index c = Index(ws.chosen.size());
      for (Index t = 0; t < c; ++t)
        g[t] = dict.gram(ws.chosen[std::size_t(t)], j);
      if (!ws.push(g.head(c), dict.gram(j, j), A0(j, i))) break;
      ws.chosen.push_back(j);
      ws.in_support[std::size_t(j)] = 1;

      ws.solve(c + 1);
      // alpha = alpha0 - G_sel coef;  eps = ||y||^2 - coef . alpha0_sel
      beta.setZero();
      double fitted = 0.0;
      for (Index t = 0; t <= c; ++t) {
        beta.noalias() += ws.coef[t] * dict.gram.col(ws.chosen[std::size_t(t)]);
        fitted += ws.coef[t] * ws.alpha0_sel[t];
      }
      alpha = A0.col(i) - beta;
      eps = std::max(ynorm2 - fitted, 0.0);
    }

    code.degenerate = false;
    code.residual_norms.clear();
    package(ws, &code);
    codes.assign(i, code);
  }
  return codes;
}

}  // namespace cdl
