#include "cdl/cksvd.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <set>
#include <utility>

#include "cdl/rng.hpp"

namespace cdl {

Matrix random_unit_dictionary(Index p, Index K, std::uint64_t seed) {
  if (p < 1 || K < 1)
    throw DimensionError("random_unit_dictionary: p and K must be >= 1");
  Rng rng(seed);
  Matrix D(p, K);
  for (Index k = 0; k < K; ++k) {
    double norm2 = 0.0;
    do {
      rng.fill_normal(D.col(k).data(), std::size_t(p));
      norm2 = D.col(k).squaredNorm();
    } while (norm2 == 0.0);
    D.col(k) /= std::sqrt(norm2);
  }
  return D;
}

void normalize_atom_sign(Vector& d) {
  Index arg = 0;
  double best = -1.0;
  for (Index i = 0; i < d.size(); ++i) {
    const double a = std::abs(d[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (d.size() > 0 && d[arg] < 0.0) d = -d;
}

double max_unit_norm_error(const Matrix& D) {
  double worst = 0.0;
  for (Index k = 0; k < D.cols(); ++k)
    worst = std::max(worst, std::abs(D.col(k).norm() - 1.0));
  return worst;
}

AtomResiduals residuals_for_atom(int k, const std::vector<Matrix>& sketches,
                                 const std::vector<Matrix>& psis,
                                 const std::vector<SparseCodeBlock>& codes) {
  const std::size_t L = sketches.size();
  if (psis.size() != L || codes.size() != L)
    throw DimensionError("residuals_for_atom: block count mismatch");

  AtomResiduals res;
  res.members.resize(L);
  res.errors.resize(L);
  res.coeffs.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const Matrix& Y = sketches[l];
    const Matrix& psi = psis[l];
    const SparseCodeBlock& C = codes[l];
    if (C.samples() != Y.cols() || psi.rows() != Y.rows())
      throw DimensionError("residuals_for_atom: block shape mismatch");

    auto& members = res.members[l];
    for (Index i = 0; i < C.samples(); ++i)
      if (C.slot_of(i, k) >= 0) members.push_back(i);

    Matrix& E = res.errors[l];
    Vector& c = res.coeffs[l];
    E.resize(Y.rows(), Index(members.size()));
    c.resize(Index(members.size()));
    for (std::size_t t = 0; t < members.size(); ++t) {
      const Index i = members[t];
      auto e = E.col(Index(t));
      e = Y.col(i);
      for (int slot = 0; slot < C.count(i); ++slot) {
        const int j = C.atom(i, slot);
        if (j == k) {
          c[Index(t)] = C.value(i, slot);
          continue;
        }
        e.noalias() -= C.value(i, slot) * psi.col(j);
      }
    }
  }
  return res;
}

AtomUpdateSystem build_atom_system(int k, const AtomResiduals& residuals,
                                   const BlockMatrixAccess& access,
                                   bool dense_gram) {
  const std::size_t L = residuals.members.size();
  if (Index(L) != access.blocks())
    throw DimensionError("build_atom_system: block count mismatch");

  AtomUpdateSystem sys;
  sys.atom = k;
  sys.block_weights.resize(L, 0.0);
  const Index p = access.source().p();
  sys.rhs = Vector::Zero(p);
  if (dense_gram) sys.gram = Matrix::Zero(p, p);

  for (std::size_t l = 0; l < L; ++l) {
    if (residuals.members[l].empty()) continue;
    const double w = residuals.coeffs[l].squaredNorm();
    sys.block_weights[l] = w;
    if (w == 0.0) continue;  // all-zero coefficients carry no information
    sys.empty = false;
    const ProjectionMatrix& R = access.get(Index(l));
    if (dense_gram) R.add_weighted_gram_lower(sys.gram, w);
    sys.rhs.noalias() +=
        R.apply(residuals.errors[l] * residuals.coeffs[l]);
  }

  if (dense_gram) {
    symmetrize_from_lower(sys.gram);
  } else {
    // Borrow the access object: G v = sum_l w_l R_l (R_l^T v).
    const auto* weights = &sys.block_weights;
    sys.gram_apply = [&access, weights, p](const Vector& v) {
      Vector out = Vector::Zero(p);
      for (std::size_t l = 0; l < weights->size(); ++l) {
        const double w = (*weights)[l];
        if (w == 0.0) continue;
        const ProjectionMatrix& R = access.get(Index(l));
        out.noalias() += w * R.apply(R.apply_transpose(v));
      }
      return out;
    };
  }
  return sys;
}

Vector solve_psd_system(const Matrix& G, const Vector& b, double ridge,
                        double truncation) {
  const Index p = G.rows();
  if (G.cols() != p || b.size() != p)
    throw DimensionError("solve_psd_system: shape mismatch");

  if (ridge > 0.0) {
    Matrix A = G;
    A.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(A);
    if (ldlt.info() == Eigen::Success) {
      Vector x = ldlt.solve(b);
      if (x.allFinite()) return x;
    }
    // fall through to the spectral path on the ridged matrix
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    const Vector& lam = es.eigenvalues();
    Vector proj = es.eigenvectors().transpose() * b;
    for (Index i = 0; i < p; ++i)
      proj[i] = lam[i] > 0.0 ? proj[i] / lam[i] : 0.0;
    return es.eigenvectors() * proj;
  }

  // Fast path: a comfortably positive-definite G needs no spectral
  // truncation. Verified by the residual check, so a wrong gate only costs
  // time, never accuracy.
  Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() == Eigen::Success) {
    const Vector& dv = ldlt.vectorD();
    const double dmax = dv.maxCoeff(), dmin = dv.minCoeff();
    if (dmin > 0.0 && dmin >= 1e-6 * dmax) {
      Vector x = ldlt.solve(b);
      const double resid = (G * x - b).norm();
      if (x.allFinite() &&
          resid <= 1e-10 * (b.norm() + G.norm() * x.norm() + 1e-300))
        return x;
    }
  }

  // Truncated Moore-Penrose solve.
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  if (es.info() != Eigen::Success)
    throw Error("solve_psd_system: eigendecomposition failed");
  const Vector& lam = es.eigenvalues();
  const double lam_max = std::max(std::abs(lam[0]), std::abs(lam[p - 1]));
  if (lam_max <= 0.0) return Vector::Zero(p);
  const double cutoff = truncation * lam_max;
  Vector proj = es.eigenvectors().transpose() * b;
  for (Index i = 0; i < p; ++i)
    proj[i] = std::abs(lam[i]) > cutoff ? proj[i] / lam[i] : 0.0;
  return es.eigenvectors() * proj;
}

Vector solve_psd_cg(const std::function<Vector(const Vector&)>& apply_gram,
                    const Vector& b, double rel_tol, Index max_iterations) {
  const Index p = b.size();
  Vector x = Vector::Zero(p);
  Vector r = b;
  const double stop = rel_tol * b.norm();
  if (b.norm() == 0.0) return x;
  if (max_iterations <= 0) max_iterations = 4 * p;

  Vector d = r;
  double rho = r.squaredNorm();
  for (Index it = 0; it < max_iterations; ++it) {
    if (std::sqrt(rho) <= stop) break;
    Vector Ad = apply_gram(d);
    const double dAd = d.dot(Ad);
    if (!(dAd > 0.0)) break;  // hit the null space; x is the best so far
    const double alpha = rho / dAd;
    x.noalias() += alpha * d;
    r.noalias() -= alpha * Ad;
    const double rho_next = r.squaredNorm();
    d = r + (rho_next / rho) * d;
    rho = rho_next;
  }
  return x;
}

AtomSolveResult solve_atom(const AtomUpdateSystem& system, double ridge,
                           double truncation) {
  AtomSolveResult out;
  if (system.empty || system.rhs.size() == 0 ||
      system.rhs.squaredNorm() == 0.0) {
    out.needs_replacement = true;
    return out;
  }
  Vector d;
  if (system.gram.size() != 0) {
    d = solve_psd_system(system.gram, system.rhs, ridge, truncation);
  } else {
    if (!system.gram_apply)
      throw Error("solve_atom: matrix-free system lacks gram_apply");
    if (ridge > 0.0) {
      const auto& base = system.gram_apply;
      auto ridged = [&base, ridge](const Vector& v) -> Vector {
        return base(v) + ridge * v;
      };
      d = solve_psd_cg(ridged, system.rhs);
    } else {
      d = solve_psd_cg(system.gram_apply, system.rhs);
    }
  }
  const double norm = d.norm();
  if (!(norm > 0.0) || !d.allFinite()) {
    out.needs_replacement = true;
    return out;
  }
  d /= norm;
  normalize_atom_sign(d);
  out.atom = std::move(d);
  return out;
}

namespace {

// c_ik = <e_i, psi_k> / ||psi_k||^2 with psi_k already in the psi cache.
// Returns false when a block's projected atom vanished.
bool refit_from_psis(int k, const AtomResiduals& residuals,
                     const std::vector<Matrix>& psis,
                     std::vector<SparseCodeBlock>& codes) {
  bool ok = true;
  for (std::size_t l = 0; l < residuals.members.size(); ++l) {
    const auto& members = residuals.members[l];
    if (members.empty()) continue;
    const auto psi_k = psis[l].col(k);
    const double nn = psi_k.squaredNorm();
    const bool degenerate = !(nn > 0.0) || !std::isfinite(nn);
    if (degenerate) ok = false;
    for (std::size_t t = 0; t < members.size(); ++t) {
      const Index i = members[t];
      const int slot = codes[l].slot_of(i, k);
      const double c =
          degenerate ? 0.0 : residuals.errors[l].col(Index(t)).dot(psi_k) / nn;
      codes[l].set_value(i, slot, c);
    }
  }
  return ok;
}

struct Replacement {
  Index block = -1;
  Index sample = -1;
  Vector atom;  // unit, sign-normalized
};

// Picks the not-yet-used sample with the largest current coding residual and
// back-projects it: d = R_l e / ||R_l e||.
std::optional<Replacement> pick_replacement(
    const std::vector<Matrix>& sketches, const std::vector<Matrix>& psis,
    const std::vector<SparseCodeBlock>& codes, const BlockMatrixAccess& access,
    std::set<std::pair<Index, Index>>& used) {
  Vector e;
  while (true) {
    double best = -1.0;
    Index best_l = -1, best_i = -1;
    for (std::size_t l = 0; l < sketches.size(); ++l) {
      const Matrix& Y = sketches[l];
      for (Index i = 0; i < Y.cols(); ++i) {
        if (used.count({Index(l), i})) continue;
        e = Y.col(i);
        const auto& C = codes[l];
        for (int t = 0; t < C.count(i); ++t)
          e.noalias() -= C.value(i, t) * psis[l].col(C.atom(i, t));
        const double r2 = e.squaredNorm();
        if (r2 > best) {
          best = r2;
          best_l = Index(l);
          best_i = i;
        }
      }
    }
    if (best_l < 0 || !(best > 0.0)) return std::nullopt;
    used.insert({best_l, best_i});

    e = sketches[std::size_t(best_l)].col(best_i);
    const auto& C = codes[std::size_t(best_l)];
    for (int t = 0; t < C.count(best_i); ++t)
      e.noalias() -=
          C.value(best_i, t) * psis[std::size_t(best_l)].col(C.atom(best_i, t));
    Vector d = access.get(best_l).apply(e);
    const double norm = d.norm();
    if (norm > 0.0 && d.allFinite()) {
      d /= norm;
      normalize_atom_sign(d);
      return Replacement{best_l, best_i, std::move(d)};
    }
    // back-projection vanished; try the next-worst sample
  }
}

double sketch_objective(const std::vector<Matrix>& sketches,
                        const std::vector<Matrix>& psis,
                        const std::vector<SparseCodeBlock>& codes) {
  double total = 0.0;
  Vector e;
  for (std::size_t l = 0; l < sketches.size(); ++l) {
    const Matrix& Y = sketches[l];
    for (Index i = 0; i < Y.cols(); ++i) {
      e = Y.col(i);
      const auto& C = codes[l];
      for (int t = 0; t < C.count(i); ++t)
        e.noalias() -= C.value(i, t) * psis[l].col(C.atom(i, t));
      total += e.squaredNorm();
    }
  }
  return total;
}

}  // namespace

bool refit_coefficients(int k, const Vector& d, const AtomResiduals& residuals,
                        const BlockMatrixAccess& access,
                        std::vector<SparseCodeBlock>& codes) {
  bool ok = true;
  for (std::size_t l = 0; l < residuals.members.size(); ++l) {
    const auto& members = residuals.members[l];
    if (members.empty()) continue;
    const Vector psi_k = access.get(Index(l)).apply_transpose(d);
    const double nn = psi_k.squaredNorm();
    const bool degenerate = !(nn > 0.0) || !std::isfinite(nn);
    if (degenerate) ok = false;
    for (std::size_t t = 0; t < members.size(); ++t) {
      const Index i = members[t];
      const int slot = codes[l].slot_of(i, k);
      const double c =
          degenerate ? 0.0 : residuals.errors[l].col(Index(t)).dot(psi_k) / nn;
      codes[l].set_value(i, slot, c);
    }
  }
  return ok;
}

TrainResult train(const SketchedDataset& data, Index K, const TrainConfig& cfg,
                  const Matrix* initial, const IterationObserver& observer) {
  if (K < 1) throw ConfigError("train: K must be >= 1");
  if (cfg.sparsity < 1) throw ConfigError("train: sparsity must be >= 1");
  if (cfg.iterations < 1) throw ConfigError("train: iterations must be >= 1");
  if (data.blocks.empty()) throw DimensionError("train: dataset has no blocks");
  const Index L = data.partition.blocks();
  if (Index(data.blocks.size()) != L)
    throw DimensionError("train: blocks disagree with partition");

  const auto t0 = std::chrono::steady_clock::now();
  const Index p = data.p;
  const bool dense_gram = p <= 2048;
  BlockMatrixAccess access(data.source, L);

  Matrix D;
  if (initial) {
    if (initial->rows() != p || initial->cols() != K)
      throw DimensionError("train: initial dictionary must be p x K");
    D = *initial;
    for (Index k = 0; k < K; ++k) {
      const double norm = D.col(k).norm();
      if (!(norm > 0.0)) throw ConfigError("train: initial atom has zero norm");
      D.col(k) /= norm;
    }
  } else {
    D = random_unit_dictionary(p, K, cfg.seed);
  }

  std::vector<Matrix> psis(static_cast<std::size_t>(L));
  std::vector<SparseCodeBlock> codes(static_cast<std::size_t>(L));
  TrainResult result;

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    // --- sparse coding on the equivalent dictionaries -------------------
    for (Index l = 0; l < L; ++l) {
      EquivalentDictionary dict =
          equivalent_dictionary(access.get(l), D, /*with_gram=*/true);
      codes[std::size_t(l)] =
          batch_omp_block(data.blocks[std::size_t(l)], dict, cfg.sparsity);
      psis[std::size_t(l)] = std::move(dict.psi);
    }
    const std::vector<SparseCodeBlock> pattern_snapshot = codes;

    // --- closed-form atom updates ----------------------------------------
    std::set<std::pair<Index, Index>> used_for_replacement;
    std::vector<char> pending_refit(std::size_t(K), 0);

    for (Index k = 0; k < K; ++k) {
      AtomResiduals res =
          residuals_for_atom(int(k), data.blocks, psis, codes);
      bool replaced = false;
      if (res.empty()) {
        replaced = true;
      } else {
        AtomUpdateSystem sys =
            build_atom_system(int(k), res, access, dense_gram);
        AtomSolveResult sol = solve_atom(sys, cfg.ridge);
        if (sol.needs_replacement) {
          replaced = true;
        } else {
          D.col(k) = sol.atom;
        }
      }
      if (replaced) {
        auto repl = pick_replacement(data.blocks, psis, codes, access,
                                     used_for_replacement);
        if (repl) D.col(k) = repl->atom;
        // else: every sample is perfectly coded; keep the old atom
      }

      for (Index l = 0; l < L; ++l)
        psis[std::size_t(l)].col(k) =
            access.get(l).apply_transpose(D.col(k));
      if (!replaced && !res.empty()) {
        if (cfg.delayed_refit)
          pending_refit[std::size_t(k)] = 1;
        else
          refit_from_psis(int(k), res, psis, codes);
      }
    }

    if (cfg.delayed_refit) {
      // Errors are rebuilt against the final dictionary so that refits of
      // later atoms see the coefficients written by earlier ones.
      for (Index k = 0; k < K; ++k) {
        if (!pending_refit[std::size_t(k)]) continue;
        AtomResiduals res =
            residuals_for_atom(int(k), data.blocks, psis, codes);
        refit_from_psis(int(k), res, psis, codes);
      }
    }

    const double objective = sketch_objective(data.blocks, psis, codes);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.history.objective.push_back(objective);
    result.history.seconds.push_back(seconds);
    if (observer) {
      bool preserved = true;
      for (Index l = 0; l < L; ++l)
        preserved = preserved && codes[std::size_t(l)].same_pattern(
                                     pattern_snapshot[std::size_t(l)]);
      observer(IterationInfo{iter, D, objective, seconds, preserved});
    }
  }

  result.dictionary = std::move(D);
  return result;
}

}  // namespace cdl
