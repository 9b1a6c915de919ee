#include "tbasis/tensor_ring.hpp"

#include <string>

namespace tbasis {

Shape TRCores::mode_sizes() const {
  Shape sizes(cores.size());
  for (std::size_t k = 0; k < cores.size(); ++k) sizes[k] = cores[k].shape()[1];
  return sizes;
}

void TRCores::validate() const {
  if (cores.empty()) throw BadConfig("a tensor ring needs at least one core");
  const std::size_t r = cores.front().shape().front();
  for (const auto& c : cores) {
    if (c.order() != 3) throw ShapeMismatch("cores must be 3-mode tensors");
    if (c.shape()[0] != r || c.shape()[2] != r) {
      throw SizeMismatch("cores must share a uniform rank");
    }
  }
  if (!adapters.empty()) {
    if (adapters.size() != cores.size()) {
      throw SizeMismatch("need one adapter per core");
    }
    for (const auto& a : adapters) {
      if (a.size() != r) throw SizeMismatch("adapter length must equal the rank");
      for (double v : a) {
        if (!(v > 0.0)) throw BadConfig("adapter entries must be positive");
      }
    }
  }
}

double tr_entry(const TRCores& tr, std::span<const std::size_t> index) {
  tr.validate();
  const std::size_t d = tr.order();
  const std::size_t r = tr.rank();
  if (index.size() != d) throw IndexOutOfRange("index order mismatch");
  for (std::size_t k = 0; k < d; ++k) {
    if (index[k] >= tr.cores[k].shape()[1]) {
      throw IndexOutOfRange("mode index " + std::to_string(index[k]) +
                            " out of range for core " + std::to_string(k));
    }
  }

  // Slice pointers C_k(:, i_k, :) for fast access inside the path loop.
  std::vector<const double*> slice(d);
  std::vector<std::size_t> nk(d);
  for (std::size_t k = 0; k < d; ++k) {
    nk[k] = tr.cores[k].shape()[1];
    slice[k] = tr.cores[k].data().data() + index[k] * r;
  }

  std::vector<std::size_t> rk(d, 0);  // rank path (r_1..r_d)
  double sum = 0.0;
  while (true) {
    double term = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t rnext = rk[(k + 1) % d];
      double f = slice[k][rk[k] * nk[k] * r + rnext];
      if (tr.has_adapters()) f *= tr.adapters[k][rk[k]];
      term *= f;
    }
    sum += term;
    std::size_t k = d;
    bool done = true;
    while (k-- > 0) {
      if (++rk[k] < r) {
        done = false;
        break;
      }
      rk[k] = 0;
    }
    if (done) break;
  }
  return sum;
}

std::vector<DenseTensor> fold_adapters(const TRCores& tr, OpCounter* counter) {
  std::vector<DenseTensor> blocks;
  blocks.reserve(tr.order());
  const std::size_t r = tr.rank();
  for (std::size_t k = 0; k < tr.order(); ++k) {
    DenseTensor c = tr.cores[k];
    if (tr.has_adapters()) {
      const std::size_t n = c.shape()[1];
      double* p = c.data().data();
      for (std::size_t a = 0; a < r; ++a) {
        const double rho = tr.adapters[k][a];
        for (std::size_t i = 0; i < n * r; ++i) p[a * n * r + i] *= rho;
      }
      if (counter) counter->multiply_adds += static_cast<std::uint64_t>(r) * n * r;
    }
    blocks.push_back(std::move(c));
  }
  return blocks;
}

namespace {

// {R, M1, R} x {R, M2, R} over the shared rank -> {R, M1*M2, R}.
DenseTensor merge_blocks(const DenseTensor& a, const DenseTensor& b, OpCounter* counter) {
  DenseTensor out = contract(a, b, {{2, 0}}, counter);
  const std::size_t r = a.shape()[0];
  return reshape(out, {r, a.shape()[1] * b.shape()[1], r});
}

// Trace over the two rank modes of a single block: out(m) = sum_r B(r, m, r).
DenseTensor trace_close(const DenseTensor& block) {
  const std::size_t r = block.shape()[0];
  const std::size_t m = block.shape()[1];
  DenseTensor out(Shape{m});
  const double* p = block.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t a = 0; a < r; ++a) acc += p[a * m * r + i * r + a];
    out[i] = acc;
  }
  return out;
}

}  // namespace

DenseTensor tr_reconstruct(const TRCores& tr) {
  tr.validate();
  std::vector<DenseTensor> blocks = fold_adapters(tr);
  DenseTensor acc = std::move(blocks.front());
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    acc = merge_blocks(acc, blocks[k], nullptr);
  }
  return reshape(trace_close(acc), tr.mode_sizes());
}

DenseTensor tr_assemble_pairwise(const TRCores& tr, OpCounter* counter) {
  tr.validate();
  std::vector<DenseTensor> blocks = fold_adapters(tr, counter);

  while (blocks.size() > 2) {
    std::vector<DenseTensor> next;
    next.reserve((blocks.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < blocks.size(); i += 2) {
      next.push_back(merge_blocks(blocks[i], blocks[i + 1], counter));
    }
    if (blocks.size() % 2 == 1) next.push_back(std::move(blocks.back()));
    blocks = std::move(next);
  }

  DenseTensor flat = [&] {
    if (blocks.size() == 1) return trace_close(blocks.front());
    // Final merge with the ring trace fused in: both rank pairs are shared,
    // costing R^2 multiply-adds per output entry instead of R^3.
    DenseTensor closed = contract(blocks[0], blocks[1], {{2, 0}, {0, 2}}, counter);
    return reshape(closed, {closed.size()});
  }();
  return reshape(flat, tr.mode_sizes());
}

std::uint64_t tr_param_count(std::span<const std::size_t> shape, std::size_t rank) {
  if (rank == 0) throw BadConfig("rank must be positive");
  std::uint64_t total = 0;
  for (std::size_t nk : shape) {
    if (nk == 0) throw BadConfig("mode sizes must be positive");
    total += static_cast<std::uint64_t>(rank) * nk * rank;
  }
  return total;
}

}  // namespace tbasis
