#include "tbasis/conv_ops.hpp"

#include <string>
#include <vector>

namespace tbasis {

const char* conv_path_name(ConvPath path) {
  switch (path) {
    case ConvPath::reference: return "reference";
    case ConvPath::decompress: return "decompress";
    case ConvPath::direct: return "direct";
  }
  return "unknown";
}

ConvDims conv_dims(const LayerPlan& plan, std::size_t width, std::size_t height,
                   std::size_t rank) {
  ConvDims dims;
  dims.width = width;
  dims.height = height;
  dims.c_in = plan.spec.c_in;
  dims.c_out = plan.spec.c_out;
  dims.kernel = plan.spec.kernel;
  dims.base = plan.base;
  dims.depth = plan.depth;
  dims.rank = rank;
  dims.core_count = plan.core_count;
  dims.spatial_core = plan.has_spatial_core();
  return dims;
}

namespace {

std::uint64_t reference_cost(const ConvDims& d) {
  const std::uint64_t wo = d.width - d.kernel + 1;
  const std::uint64_t ho = d.height - d.kernel + 1;
  return wo * ho * d.c_out * d.c_in * d.kernel * d.kernel;
}

// Mirrors the greedy pairing of tr_assemble_pairwise over core_count blocks
// whose middle modes all have size n^2, with the final merge fused with the
// ring trace.
std::uint64_t assembly_cost(std::size_t core_count, std::size_t n2, std::size_t rank) {
  const std::uint64_t r = rank;
  std::vector<std::uint64_t> mids(core_count, n2);
  std::uint64_t cost = 0;
  while (mids.size() > 2) {
    std::vector<std::uint64_t> next;
    for (std::size_t i = 0; i + 1 < mids.size(); i += 2) {
      cost += r * r * r * mids[i] * mids[i + 1];
      next.push_back(mids[i] * mids[i + 1]);
    }
    if (mids.size() % 2 == 1) next.push_back(mids.back());
    mids = std::move(next);
  }
  if (mids.size() == 2) cost += r * r * mids[0] * mids[1];
  return cost;
}

}  // namespace

OpCount flops(ConvPath path, const ConvDims& d) {
  const std::uint64_t r = d.rank;
  const std::uint64_t n = d.base;
  const std::uint64_t n2 = n * n;
  const std::uint64_t nd = ipow(d.base, d.depth);
  const std::uint64_t fold = static_cast<std::uint64_t>(d.core_count) * r * r * n2;

  OpCount count;
  count.path = path;
  switch (path) {
    case ConvPath::reference:
      count.multiply_adds = reference_cost(d);
      break;
    case ConvPath::decompress:
      count.multiply_adds = fold + assembly_cost(d.core_count, n2, d.rank) + reference_cost(d);
      break;
    case ConvPath::direct: {
      std::uint64_t total = fold;
      total += static_cast<std::uint64_t>(d.width) * d.height * nd * n * r * r;  // first core
      total += static_cast<std::uint64_t>(d.depth - 1) * d.width * d.height * nd * n * r * r * r;
      if (d.spatial_core) {
        const std::uint64_t wo = d.width - d.kernel + 1;
        const std::uint64_t ho = d.height - d.kernel + 1;
        total += wo * ho * nd * d.kernel * d.kernel * r * r;
      }
      count.multiply_adds = total;
      break;
    }
  }
  return count;
}

DenseTensor conv2d_reference(const DenseTensor& x, const DenseTensor& w,
                             OpCounter* counter) {
  if (x.order() != 3) throw ShapeMismatch("input must be W x H x C");
  if (w.order() != 4 || w.shape()[2] != w.shape()[3]) {
    throw ShapeMismatch("weight must be C_out x C_in x K x K");
  }
  const std::size_t iw = x.shape()[0], ih = x.shape()[1], ci = x.shape()[2];
  const std::size_t co = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != ci) throw ShapeMismatch("input channels do not match the weight");
  if (iw < k || ih < k) throw ShapeMismatch("input spatial dims smaller than the kernel");

  const std::size_t wo = iw - k + 1, ho = ih - k + 1;
  DenseTensor y(Shape{wo, ho, co});
  const double* px = x.data().data();
  const double* pw = w.data().data();
  double* py = y.data().data();
  for (std::size_t a = 0; a < wo; ++a) {
    for (std::size_t b = 0; b < ho; ++b) {
      for (std::size_t i = 0; i < co; ++i) {
        double acc = 0.0;
        const double* wrow = pw + i * ci * k * k;
        for (std::size_t j = 0; j < ci; ++j) {
          for (std::size_t p = 0; p < k; ++p) {
            const double* xrow = px + ((a + p) * ih + b) * ci + j;
            const double* wq = wrow + j * k * k + p * k;
            for (std::size_t q = 0; q < k; ++q) {
              acc += wq[q] * xrow[q * ci];
            }
          }
        }
        py[(a * ho + b) * co + i] = acc;
      }
    }
  }
  if (counter) {
    counter->multiply_adds +=
        static_cast<std::uint64_t>(wo) * ho * co * ci * k * k;
  }
  return y;
}

DenseTensor decompress_weight(const TBasis& basis, const LayerParams& params,
                              OpCounter* counter) {
  const TRCores tr = synth_layer(basis, params);
  const DenseTensor tens = tr_assemble_pairwise(tr, counter);
  const DenseTensor env = untensorize(tens, params.plan);
  return crop_from_envelope(env, params.plan);
}

DenseTensor conv2d_decompress(const DenseTensor& x, const TBasis& basis,
                              const LayerParams& params, OpCounter* counter) {
  const LayerPlan& plan = params.plan;
  if (x.order() != 3) throw ShapeMismatch("input must be W x H x C");
  if (x.shape()[2] != plan.spec.c_in) {
    throw ShapeMismatch("input channels do not match the layer");
  }
  DenseTensor w = decompress_weight(basis, params, counter);
  if (plan.spec.kind == LayerKind::linear) {
    w = reshape(w, {plan.spec.c_out, plan.spec.c_in, 1, 1});
  }
  return conv2d_reference(x, w, counter);
}

DenseTensor conv2d_direct(const DenseTensor& x, const TBasis& basis,
                          const LayerParams& params, OpCounter* counter) {
  const LayerPlan& plan = params.plan;
  if (x.order() != 3) throw ShapeMismatch("input must be W x H x C");
  if (x.shape()[2] != plan.spec.c_in) {
    throw ShapeMismatch("input channels do not match the layer");
  }
  const std::size_t k = plan.spec.kernel;
  const std::size_t iw = x.shape()[0], ih = x.shape()[1];
  if (plan.has_spatial_core() && (iw < k || ih < k)) {
    throw ShapeMismatch("input spatial dims smaller than the kernel");
  }

  const std::size_t n = plan.base;
  const std::size_t d = plan.depth;
  const std::size_t r = basis.rank;
  const std::size_t nd = ipow(n, d);

  const TRCores tr = synth_layer(basis, params);
  const std::vector<DenseTensor> cores = fold_adapters(tr, counter);

  // Zero-pad the channels to n^d.
  std::vector<double> xp(iw * ih * nd, 0.0);
  {
    const std::size_t ci = x.shape()[2];
    const double* px = x.data().data();
    for (std::size_t a = 0; a < iw * ih; ++a) {
      for (std::size_t c = 0; c < ci; ++c) xp[a * nd + c] = px[a * ci + c];
    }
  }

  // Running buffer holds Y_k(w, h, I, J, r_1, r_{k+1}) with I the merged
  // output digits (size n^k) and J the remaining input digits (size n^{d-k}).
  std::vector<double> cur(iw * ih * nd * r * r, 0.0);
  {
    // First core: sum over j_1 only, no incoming rank index.
    const double* c0 = cores[0].data().data();
    const std::size_t q = nd / n;  // n^{d-1}
    for (std::size_t a = 0; a < iw * ih; ++a) {
      const double* xrow = &xp[a * nd];
      double* yrow = &cur[a * nd * r * r];
      for (std::size_t i1 = 0; i1 < n; ++i1) {
        for (std::size_t jrest = 0; jrest < q; ++jrest) {
          double* slot = yrow + (i1 * q + jrest) * r * r;
          for (std::size_t r1 = 0; r1 < r; ++r1) {
            for (std::size_t r2 = 0; r2 < r; ++r2) {
              double acc = 0.0;
              for (std::size_t j1 = 0; j1 < n; ++j1) {
                acc += c0[(r1 * n * n + i1 * n + j1) * r + r2] * xrow[j1 * q + jrest];
              }
              slot[r1 * r + r2] = acc;
            }
          }
        }
      }
    }
    if (counter) {
      counter->multiply_adds += static_cast<std::uint64_t>(iw) * ih * nd * r * r * n;
    }
  }

  std::vector<double> nxt(cur.size(), 0.0);
  for (std::size_t step = 1; step < d; ++step) {
    const double* ck = cores[step].data().data();
    const std::size_t p_prev = ipow(n, step);      // merged output digits so far
    const std::size_t q_next = ipow(n, d - step - 1);
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (std::size_t a = 0; a < iw * ih; ++a) {
      const double* yin = &cur[a * nd * r * r];
      double* yout = &nxt[a * nd * r * r];
      for (std::size_t big = 0; big < p_prev; ++big) {
        for (std::size_t ik = 0; ik < n; ++ik) {
          for (std::size_t jrest = 0; jrest < q_next; ++jrest) {
            double* slot = yout + ((big * n + ik) * q_next + jrest) * r * r;
            for (std::size_t r1 = 0; r1 < r; ++r1) {
              for (std::size_t rn = 0; rn < r; ++rn) {
                double acc = 0.0;
                for (std::size_t jk = 0; jk < n; ++jk) {
                  const double* ysrc =
                      yin + ((big * n + jk) * q_next + jrest) * r * r + r1 * r;
                  const double* crow = ck + (ik * n + jk) * r + rn;
                  for (std::size_t rk = 0; rk < r; ++rk) {
                    acc += crow[rk * n * n * r] * ysrc[rk];
                  }
                }
                slot[r1 * r + rn] = acc;
              }
            }
          }
        }
      }
    }
    std::swap(cur, nxt);
    if (counter) {
      counter->multiply_adds +=
          static_cast<std::uint64_t>(iw) * ih * nd * r * r * n * r;
    }
  }

  // cur now holds Y_d(w, h, I, r_1, r_{d+1}) over all n^d output digits.
  DenseTensor out;
  if (plan.has_spatial_core()) {
    const double* cs = cores[d].data().data();
    const std::size_t wo = iw - k + 1, ho = ih - k + 1;
    DenseTensor padded(Shape{wo, ho, nd});
    double* py = padded.data().data();
    for (std::size_t a = 0; a < wo; ++a) {
      for (std::size_t b = 0; b < ho; ++b) {
        for (std::size_t big = 0; big < nd; ++big) {
          double acc = 0.0;
          for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t q = 0; q < k; ++q) {
              const double* ysrc =
                  &cur[(((a + p) * ih + (b + q)) * nd + big) * r * r];
              const double* crow = cs + (p * n + q) * r;
              for (std::size_t rs = 0; rs < r; ++rs) {
                for (std::size_t r1 = 0; r1 < r; ++r1) {
                  acc += crow[rs * n * n * r + r1] * ysrc[r1 * r + rs];
                }
              }
            }
          }
          py[(a * ho + b) * nd + big] = acc;
        }
      }
    }
    if (counter) {
      counter->multiply_adds +=
          static_cast<std::uint64_t>(wo) * ho * nd * k * k * r * r;
    }
    out = std::move(padded);
  } else {
    // Ring closure only: trace over r_1.
    DenseTensor traced(Shape{iw, ih, nd});
    double* py = traced.data().data();
    for (std::size_t a = 0; a < iw * ih; ++a) {
      for (std::size_t big = 0; big < nd; ++big) {
        const double* ysrc = &cur[(a * nd + big) * r * r];
        double acc = 0.0;
        for (std::size_t r1 = 0; r1 < r; ++r1) acc += ysrc[r1 * r + r1];
        py[a * nd + big] = acc;
      }
    }
    out = std::move(traced);
  }

  // Crop the padded output channels.
  const std::size_t co = plan.spec.c_out;
  const std::size_t ow = out.shape()[0], oh = out.shape()[1];
  DenseTensor y(Shape{ow, oh, co});
  for (std::size_t a = 0; a < ow * oh; ++a) {
    for (std::size_t c = 0; c < co; ++c) y[a * co + c] = out[a * nd + c];
  }
  return y;
}

}  // namespace tbasis
