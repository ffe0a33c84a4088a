#include "cdl/sketch.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cdl/matrix_io.hpp"
#include "cdl/rng.hpp"

namespace cdl {

double compression_factor(Index m, const ProjectionDistribution& dist) {
  if (!dist.is_sparse_bernoulli())
    throw NotApplicableError(
        "compression factor is defined only for sparse-bernoulli sketches");
  return double(m) / dist.s();
}

double compression_factor(const SketchConfig& cfg) {
  return compression_factor(cfg.m, cfg.dist);
}

ProjectionSource::ProjectionSource(ProjectionDistribution dist, Index p,
                                   Index m, std::uint64_t master_seed)
    : dist_(dist), p_(p), m_(m), master_seed_(master_seed) {
  if (p < 1 || m < 1)
    throw DimensionError("projection source: p and m must be >= 1");
}

ProjectionSource ProjectionSource::pinned(
    std::vector<ProjectionMatrix> matrices, std::uint64_t master_seed) {
  if (matrices.empty())
    throw DimensionError("pinned projection source needs at least one matrix");
  ProjectionSource src;
  src.dist_ = matrices.front().dist();
  src.p_ = matrices.front().p();
  src.m_ = matrices.front().m();
  src.master_seed_ = master_seed;
  for (const auto& R : matrices)
    if (R.p() != src.p_ || R.m() != src.m_)
      throw DimensionError("pinned projection source: shape mismatch");
  src.matrices_ = std::make_shared<const std::vector<ProjectionMatrix>>(
      std::move(matrices));
  return src;
}

ProjectionMatrix ProjectionSource::matrix_for_block(Index l) const {
  if (matrices_) return matrices_->at(std::size_t(l));
  return sample_projection(dist_, p_, m_, mix_seed(master_seed_, std::uint64_t(l)));
}

ProjectionSource ProjectionSource::materialize(Index blocks) const {
  if (matrices_) return *this;
  std::vector<ProjectionMatrix> mats;
  mats.reserve(std::size_t(blocks));
  for (Index l = 0; l < blocks; ++l) mats.push_back(matrix_for_block(l));
  ProjectionSource src = pinned(std::move(mats), master_seed_);
  src.dist_ = dist_;
  return src;
}

BlockMatrixAccess::BlockMatrixAccess(const ProjectionSource& source,
                                     Index blocks,
                                     std::size_t cache_budget_reals)
    : source_(source), blocks_(blocks) {
  if (blocks < 1) throw DimensionError("BlockMatrixAccess: no blocks");
  const bool cheap =
      source.is_pinned() || source.dist().is_sparse_bernoulli() ||
      std::size_t(source.p()) * std::size_t(source.m()) * std::size_t(blocks) <=
          cache_budget_reals;
  if (cheap) {
    cache_.reserve(std::size_t(blocks));
    for (Index l = 0; l < blocks; ++l)
      cache_.push_back(source.matrix_for_block(l));
  }
}

const ProjectionMatrix& BlockMatrixAccess::get(Index l) const {
  if (l < 0 || l >= blocks_)
    throw DimensionError("BlockMatrixAccess: block index out of range");
  if (!cache_.empty()) return cache_[std::size_t(l)];
  scratch_.emplace(source_.matrix_for_block(l));
  return *scratch_;
}

std::size_t SketchedDataset::stored_reals() const noexcept {
  std::size_t total = 0;
  for (const auto& Y : blocks) total += std::size_t(Y.size());
  return total;
}

SketchedDataset sketch_blocks(const Matrix& X, const BlockPartition& partition,
                              const ProjectionSource& source,
                              SketchStats* stats) {
  partition.validate();
  if (partition.total() != X.cols())
    throw DimensionError("sketch_blocks: partition covers " +
                         std::to_string(partition.total()) +
                         " samples but X has " + std::to_string(X.cols()));
  if (source.p() != X.rows())
    throw DimensionError("sketch_blocks: source p mismatch");

  SketchedDataset out;
  out.p = X.rows();
  out.m = source.m();
  out.partition = partition;
  out.source = source;
  out.blocks.reserve(std::size_t(partition.blocks()));
  SketchStats acc;
  for (Index l = 0; l < partition.blocks(); ++l) {
    const ProjectionMatrix R = source.matrix_for_block(l);
    const Index n_l = partition.block_size(l);
    out.blocks.push_back(
        R.sketch(X.middleCols(partition.block_begin(l), n_l)));
    acc.multiply_adds += R.sketch_cost() * std::uint64_t(n_l);
    acc.stored_reals += std::uint64_t(source.m()) * std::uint64_t(n_l);
  }
  if (stats) *stats = acc;
  return out;
}

SketchedDataset sketch_blocks(const Matrix& X, const BlockPartition& partition,
                              const SketchConfig& cfg, SketchStats* stats) {
  if (cfg.blocks != partition.blocks())
    throw DimensionError("sketch_blocks: cfg.blocks != partition.blocks()");
  return sketch_blocks(
      X, partition,
      ProjectionSource(cfg.dist, X.rows(), cfg.m, cfg.master_seed), stats);
}

namespace {

std::filesystem::path block_path(const std::filesystem::path& dir, Index l) {
  char name[32];
  std::snprintf(name, sizeof(name), "block_%06lld.cdlm",
                static_cast<long long>(l));
  return dir / name;
}

}  // namespace

void save_sketched_dataset(const SketchedDataset& data,
                           const std::filesystem::path& dir) {
  if (data.source.is_pinned())
    throw ConfigError(
        "cannot save a dataset whose projections were injected; only seeded "
        "sources can be regenerated on load");
  std::filesystem::create_directories(dir);
  std::ofstream man(dir / "manifest.txt");
  if (!man) throw IoError("cannot write manifest in " + dir.string());
  man << "p=" << data.p << "\n";
  man << "m=" << data.m << "\n";
  man << "blocks=" << data.partition.blocks() << "\n";
  man << "dist=" << data.source.dist().name() << "\n";
  man << "parameter=" << format_g17(data.source.dist().parameter()) << "\n";
  man << "master_seed=" << data.source.master_seed() << "\n";
  man << "boundaries=";
  for (std::size_t i = 0; i < data.partition.boundaries.size(); ++i)
    man << (i ? "," : "") << data.partition.boundaries[i];
  man << "\n";
  if (!man) throw IoError("manifest write failed in " + dir.string());
  man.close();
  for (Index l = 0; l < data.partition.blocks(); ++l)
    write_matrix(block_path(dir, l), data.blocks[std::size_t(l)]);
}

SketchedDataset load_sketched_dataset(const std::filesystem::path& dir) {
  std::ifstream man(dir / "manifest.txt");
  if (!man) throw IoError("cannot open manifest in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(man, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("malformed manifest line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError("manifest missing key: " + key);
    return it->second;
  };

  SketchedDataset data;
  data.p = Index(std::stoll(need("p")));
  data.m = Index(std::stoll(need("m")));
  const Index blocks = Index(std::stoll(need("blocks")));
  const auto dist =
      ProjectionDistribution::parse(need("dist"), std::stod(need("parameter")));
  const std::uint64_t seed = std::stoull(need("master_seed"));

  std::stringstream bounds(need("boundaries"));
  std::string tok;
  while (std::getline(bounds, tok, ','))
    data.partition.boundaries.push_back(Index(std::stoll(tok)));
  data.partition.validate();
  if (data.partition.blocks() != blocks)
    throw IoError("manifest boundaries disagree with block count");

  data.source = ProjectionSource(dist, data.p, data.m, seed);
  data.blocks.reserve(std::size_t(blocks));
  for (Index l = 0; l < blocks; ++l) {
    Matrix Y = read_matrix(block_path(dir, l));
    if (Y.rows() != data.m || Y.cols() != data.partition.block_size(l))
      throw IoError("block file shape disagrees with manifest: " +
                    block_path(dir, l).string());
    data.blocks.push_back(std::move(Y));
  }
  return data;
}

}  // namespace cdl
