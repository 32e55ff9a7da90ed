#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mvc/errors.hpp"
#include "mvc/numcore.hpp"

namespace mvc::num {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Array& a, std::size_t rows, std::size_t cols) {
  return MapC(a.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
Map view(Array& a, std::size_t rows, std::size_t cols) {
  return Map(a.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw DimensionError("operands recorded on different tapes");
}

void accumulate(Array& dst, const Array& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void require_rank(const Array& a, std::size_t rank, const char* op) {
  if (a.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(a.shape()));
}

struct ConvGeometry {
  std::size_t batch, cin, h, w, cout, kh, kw, oh, ow;
  int stride, pad;
  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& k, int stride, int padding) {
  if (in.size() != 3 && in.size() != 4)
    throw DimensionError("conv2d: input must be C×H×W or B×C×H×W, got " + shape_string(in));
  if (k.size() != 4) throw DimensionError("conv2d: kernels must be C_out×C_in×kh×kw, got " + shape_string(k));
  if (stride < 1) throw DimensionError("conv2d: stride must be ≥ 1");
  if (padding < 0) throw DimensionError("conv2d: padding must be ≥ 0");
  const std::size_t off = in.size() == 4 ? 1 : 0;
  ConvGeometry g{};
  g.batch = off ? in[0] : 1;
  g.cin = in[off];
  g.h = in[off + 1];
  g.w = in[off + 2];
  g.cout = k[0];
  g.kh = k[2];
  g.kw = k[3];
  g.stride = stride;
  g.pad = padding;
  if (k[1] != g.cin)
    throw DimensionError("conv2d: input " + shape_string(in) + " has " + std::to_string(g.cin) +
                         " channels but kernels " + shape_string(k) + " expect " + std::to_string(k[1]));
  const std::size_t ph = g.h + 2 * static_cast<std::size_t>(padding);
  const std::size_t pw = g.w + 2 * static_cast<std::size_t>(padding);
  if (g.kh > ph || g.kw > pw)
    throw DimensionError("conv2d: kernel " + shape_string(k) + " larger than padded input " + shape_string(in));
  g.oh = (ph - g.kh) / static_cast<std::size_t>(stride) + 1;
  g.ow = (pw - g.kw) / static_cast<std::size_t>(stride) + 1;
  return g;
}

// cols[(c·kh + i)·kw + j][b·P + oy·ow + ox] = input[b][c][oy·s − p + i][ox·s − p + j]
void im2col(const double* in, const ConvGeometry& g, double* cols) {
  const std::size_t P = g.pixels();
  const std::size_t BP = g.batch * P;
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* row = cols + ((c * g.kh + i) * g.kw + j) * BP;
        for (std::size_t b = 0; b < g.batch; ++b) {
          const double* plane = in + (b * g.cin + c) * g.h * g.w;
          double* dst = row + b * P;
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(i);
            double* drow = dst + oy * g.ow;
            if (iy < 0 || iy >= static_cast<long>(g.h)) {
              std::fill(drow, drow + g.ow, 0.0);
              continue;
            }
            const double* srow = plane + static_cast<std::size_t>(iy) * g.w;
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(j);
              drow[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : srow[ix];
            }
          }
        }
      }
}

void col2im(const double* cols, const ConvGeometry& g, double* in_grad) {
  const std::size_t P = g.pixels();
  const std::size_t BP = g.batch * P;
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t i = 0; i < g.kh; ++i)
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* row = cols + ((c * g.kh + i) * g.kw + j) * BP;
        for (std::size_t b = 0; b < g.batch; ++b) {
          double* plane = in_grad + (b * g.cin + c) * g.h * g.w;
          const double* src = row + b * P;
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(i);
            if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
            double* drow = plane + static_cast<std::size_t>(iy) * g.w;
            const double* srow = src + oy * g.ow;
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(j);
              if (ix >= 0 && ix < static_cast<long>(g.w)) drow[ix] += srow[ox];
            }
          }
        }
      }
}

// out[C_out × B·P] ↔ y[B × C_out × P]
void channel_major_to_batch_major(const double* src, const ConvGeometry& g, double* dst) {
  const std::size_t P = g.pixels();
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t b = 0; b < g.batch; ++b)
      std::copy_n(src + co * g.batch * P + b * P, P, dst + (b * g.cout + co) * P);
}

void batch_major_to_channel_major(const double* src, const ConvGeometry& g, double* dst) {
  const std::size_t P = g.pixels();
  for (std::size_t co = 0; co < g.cout; ++co)
    for (std::size_t b = 0; b < g.batch; ++b)
      std::copy_n(src + (b * g.cout + co) * P, P, dst + co * g.batch * P + b * P);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  const Array& A = a.value();
  const Array& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
    throw DimensionError("matmul: incompatible shapes " + shape_string(A.shape()) + " and " +
                         shape_string(B.shape()));
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Array out({m, n});
  view(out, m, n).noalias() = view(A, m, k) * view(B, k, n);
  const bool rg = a.requires_grad() || b.requires_grad();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), rg, [ia, ib, m, k, n](Tape& t, const Array& g) {
    if (t.requires_grad(ia)) {
      Array& ga = t.grad_buffer(ia);
      view(ga, m, k).noalias() += view(g, m, n) * view(t.value(ib), k, n).transpose();
    }
    if (t.requires_grad(ib)) {
      Array& gb = t.grad_buffer(ib);
      view(gb, k, n).noalias() += view(t.value(ia), m, k).transpose() * view(g, m, n);
    }
  });
}

Var transpose(const Var& a) {
  const Array& A = a.value();
  require_rank(A, 2, "transpose");
  const std::size_t m = A.dim(0), n = A.dim(1);
  Array out({n, m});
  view(out, n, m) = view(A, m, n).transpose();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), a.requires_grad(), [ia, m, n](Tape& t, const Array& g) {
    view(t.grad_buffer(ia), m, n) += view(g, n, m).transpose();
  });
}

Var add(const Var& a, const Var& b) {
  require_same_tape(a, b);
  if (a.shape() != b.shape())
    throw DimensionError("add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Array out = a.value();
  accumulate(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), a.requires_grad() || b.requires_grad(), [ia, ib](Tape& t, const Array& g) {
    if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad_buffer(ib), g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  if (a.shape() != b.shape())
    throw DimensionError("mul: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), a.requires_grad() || b.requires_grad(), [ia, ib](Tape& t, const Array& g) {
    if (t.requires_grad(ia)) {
      Array& ga = t.grad_buffer(ia);
      const Array& vb = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.requires_grad(ib)) {
      Array& gb = t.grad_buffer(ib);
      const Array& va = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Array out = a.value();
  for (auto& v : out.values()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), a.requires_grad(), [ia, factor](Tape& t, const Array& g) {
    Array& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape().record(Array::scalar(s), a.requires_grad(), [ia](Tape& t, const Array& g) {
    Array& ga = t.grad_buffer(ia);
    for (auto& v : ga.values()) v += g[0];
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  require_same_tape(x, bias);
  const Array& X = x.value();
  require_rank(X, 2, "add_row_bias");
  if (bias.value().rank() != 1 || bias.value().dim(0) != X.dim(1))
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(X.shape()));
  const std::size_t rows = X.dim(0), cols = X.dim(1);
  Array out = X;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias.value()[c];
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), x.requires_grad() || bias.requires_grad(),
                         [ix, ib, rows, cols](Tape& t, const Array& g) {
                           if (t.requires_grad(ix)) accumulate(t.grad_buffer(ix), g);
                           if (t.requires_grad(ib)) {
                             Array& gb = t.grad_buffer(ib);
                             for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
                           }
                         });
}

Var add_channel_bias(const Var& x, const Var& bias) {
  require_same_tape(x, bias);
  const Array& X = x.value();
  require_rank(X, 4, "add_channel_bias");
  const std::size_t B = X.dim(0), C = X.dim(1), P = X.dim(2) * X.dim(3);
  if (bias.value().rank() != 1 || bias.value().dim(0) != C)
    throw DimensionError("add_channel_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(X.shape()));
  Array out = X;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double v = bias.value()[c];
      double* p = out.data() + (b * C + c) * P;
      for (std::size_t i = 0; i < P; ++i) p[i] += v;
    }
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape().record(std::move(out), x.requires_grad() || bias.requires_grad(),
                         [ix, ib, B, C, P](Tape& t, const Array& g) {
                           if (t.requires_grad(ix)) accumulate(t.grad_buffer(ix), g);
                           if (t.requires_grad(ib)) {
                             Array& gb = t.grad_buffer(ib);
                             for (std::size_t b = 0; b < B; ++b)
                               for (std::size_t c = 0; c < C; ++c) {
                                 const double* p = g.data() + (b * C + c) * P;
                                 double s = 0.0;
                                 for (std::size_t i = 0; i < P; ++i) s += p[i];
                                 gb[c] += s;
                               }
                           }
                         });
}

Var relu(const Var& x) {
  Array out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), x.requires_grad(), [ix](Tape& t, const Array& g) {
    Array& gx = t.grad_buffer(ix);
    const Array& xv = t.value(ix);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Var channel_normalize(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  const Array& X = x.value();
  require_rank(X, 4, "channel_normalize");
  const std::size_t B = X.dim(0), C = X.dim(1), P = X.dim(2) * X.dim(3);
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
    throw DimensionError("channel_normalize: affine parameters must have shape [" + std::to_string(C) + "]");
  const double M = static_cast<double>(B * P);
  auto xhat = std::make_shared<Array>(X.shape());
  std::vector<double> inv_std(C);
  Array out(X.shape());
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < P; ++i) mean += X[(b * C + c) * P + i];
    mean /= M;
    double var = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < P; ++i) {
        const double d = X[(b * C + c) * P + i] - mean;
        var += d * d;
      }
    var /= M;
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    const double gm = gamma.value()[c], bt = beta.value()[c];
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < P; ++i) {
        const std::size_t k = (b * C + c) * P + i;
        (*xhat)[k] = (X[k] - mean) * inv_std[c];
        out[k] = gm * (*xhat)[k] + bt;
      }
  }
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape().record(std::move(out), rg,
                         [ix, ig, ib, B, C, P, M, xhat, inv_std = std::move(inv_std)](Tape& t, const Array& g) {
                           for (std::size_t c = 0; c < C; ++c) {
                             double sum_g = 0.0, sum_gx = 0.0;
                             for (std::size_t b = 0; b < B; ++b)
                               for (std::size_t i = 0; i < P; ++i) {
                                 const std::size_t k = (b * C + c) * P + i;
                                 sum_g += g[k];
                                 sum_gx += g[k] * (*xhat)[k];
                               }
                             if (t.requires_grad(ig)) t.grad_buffer(ig)[c] += sum_gx;
                             if (t.requires_grad(ib)) t.grad_buffer(ib)[c] += sum_g;
                             if (t.requires_grad(ix)) {
                               Array& gx = t.grad_buffer(ix);
                               const double s = t.value(ig)[c] * inv_std[c] / M;
                               for (std::size_t b = 0; b < B; ++b)
                                 for (std::size_t i = 0; i < P; ++i) {
                                   const std::size_t k = (b * C + c) * P + i;
                                   gx[k] += s * (M * g[k] - sum_g - (*xhat)[k] * sum_gx);
                                 }
                             }
                           }
                         });
}

Var conv2d(const Var& input, const Var& kernels, int stride, int padding) {
  require_same_tape(input, kernels);
  const ConvGeometry g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
  const std::size_t K = g.patch(), BP = g.batch * g.pixels();
  auto cols = std::make_shared<std::vector<double>>(K * BP);
  im2col(input.value().data(), g, cols->data());

  std::vector<double> out_cm(g.cout * BP);
  Map(out_cm.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(BP)).noalias() =
      view(kernels.value(), g.cout, K) * MapC(cols->data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(BP));

  Shape out_shape = input.value().rank() == 4 ? Shape{g.batch, g.cout, g.oh, g.ow} : Shape{g.cout, g.oh, g.ow};
  Array out(out_shape);
  channel_major_to_batch_major(out_cm.data(), g, out.data());

  const bool rg = input.requires_grad() || kernels.requires_grad();
  if (!rg) cols.reset();
  const std::size_t ii = input.id(), ik = kernels.id();
  return input.tape().record(std::move(out), rg, [ii, ik, g, cols](Tape& t, const Array& grad) {
    const std::size_t K = g.patch(), BP = g.batch * g.pixels();
    std::vector<double> g_cm(g.cout * BP);
    batch_major_to_channel_major(grad.data(), g, g_cm.data());
    MapC G(g_cm.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(BP));
    if (t.requires_grad(ik)) {
      view(t.grad_buffer(ik), g.cout, K).noalias() +=
          G * MapC(cols->data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(BP)).transpose();
    }
    if (t.requires_grad(ii)) {
      std::vector<double> dcols(K * BP);
      Map(dcols.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(BP)).noalias() =
          view(t.value(ik), g.cout, K).transpose() * G;
      col2im(dcols.data(), g, t.grad_buffer(ii).data());
    }
  });
}

Var global_mean_pool(const Var& x) {
  const Array& X = x.value();
  require_rank(X, 4, "global_mean_pool");
  const std::size_t B = X.dim(0), C = X.dim(1), P = X.dim(2) * X.dim(3);
  Array out({B, C});
  for (std::size_t i = 0; i < B * C; ++i) {
    double s = 0.0;
    const double* p = X.data() + i * P;
    for (std::size_t k = 0; k < P; ++k) s += p[k];
    out[i] = s / static_cast<double>(P);
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), x.requires_grad(), [ix, B, C, P](Tape& t, const Array& g) {
    Array& gx = t.grad_buffer(ix);
    const double inv = 1.0 / static_cast<double>(P);
    for (std::size_t i = 0; i < B * C; ++i) {
      double* p = gx.data() + i * P;
      for (std::size_t k = 0; k < P; ++k) p[k] += g[i] * inv;
    }
  });
}

Var l2_normalize(const Var& x) {
  const Array& X = x.value();
  if (X.rank() != 1 && X.rank() != 2)
    throw DimensionError("l2_normalize: expected vector or matrix, got " + shape_string(X.shape()));
  const std::size_t rows = X.rank() == 2 ? X.dim(0) : 1;
  const std::size_t d = X.rank() == 2 ? X.dim(1) : X.dim(0);
  Array out = X;
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < d; ++c) ss += X[r * d + c] * X[r * d + c];
    const double n = std::sqrt(ss);
    if (!(n > kNormEpsilon))
      throw DegenerateVectorError("l2_normalize: row " + std::to_string(r) + " has norm " + std::to_string(n));
    norms[r] = n;
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] /= n;
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), x.requires_grad(), [ix, rows, d, norms = std::move(norms)](Tape& t, const Array& g) {
    Array& gx = t.grad_buffer(ix);
    const Array& xv = t.value(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = norms[r];
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += (xv[r * d + c] / n) * g[r * d + c];
      for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += (g[r * d + c] - (xv[r * d + c] / n) * dot) / n;
    }
  });
}

Var softmax_cross_entropy(const Var& logits, int label) {
  const Array& L = logits.value();
  require_rank(L, 1, "softmax_cross_entropy");
  const std::size_t C = L.dim(0);
  if (label < 0 || static_cast<std::size_t>(label) >= C)
    throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                     std::to_string(C) + ")");
  const double mx = *std::max_element(L.values().begin(), L.values().end());
  double z = 0.0;
  for (double v : L.values()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  const double loss = lse - L[static_cast<std::size_t>(label)];
  const std::size_t il = logits.id();
  return logits.tape().record(Array::scalar(loss), logits.requires_grad(), [il, label, lse](Tape& t, const Array& g) {
    Array& gl = t.grad_buffer(il);
    const Array& lv = t.value(il);
    for (std::size_t c = 0; c < lv.size(); ++c) {
      const double p = std::exp(lv[c] - lse);
      gl[c] += g[0] * (p - (static_cast<int>(c) == label ? 1.0 : 0.0));
    }
  });
}

Var cross_entropy_rows(const Var& logits, std::span<const int> labels, bool exclude_diagonal) {
  const Array& L = logits.value();
  require_rank(L, 2, "cross_entropy_rows");
  const std::size_t R = L.dim(0), C = L.dim(1);
  if (labels.size() != R)
    throw DimensionError("cross_entropy_rows: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(R) + " rows");
  if (exclude_diagonal && R != C) throw DimensionError("cross_entropy_rows: diagonal exclusion needs a square input");
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<double> lse(R);
  double total = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    const int y = lab[r];
    if (y < 0 || static_cast<std::size_t>(y) >= C || (exclude_diagonal && static_cast<std::size_t>(y) == r))
      throw IndexError("cross_entropy_rows: invalid label " + std::to_string(y) + " for row " + std::to_string(r));
    const double* row = L.data() + r * C;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c)
      if (!(exclude_diagonal && c == r)) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      if (!(exclude_diagonal && c == r)) z += std::exp(row[c] - mx);
    lse[r] = mx + std::log(z);
    total += lse[r] - row[y];
  }
  const double inv = 1.0 / static_cast<double>(R);
  const std::size_t il = logits.id();
  return logits.tape().record(
      Array::scalar(total * inv), logits.requires_grad(),
      [il, R, C, inv, exclude_diagonal, lab = std::move(lab), lse = std::move(lse)](Tape& t, const Array& g) {
        Array& gl = t.grad_buffer(il);
        const Array& lv = t.value(il);
        const double s = g[0] * inv;
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t c = 0; c < C; ++c) {
            if (exclude_diagonal && c == r) continue;
            const double p = std::exp(lv[r * C + c] - lse[r]);
            gl[r * C + c] += s * (p - (static_cast<int>(c) == lab[r] ? 1.0 : 0.0));
          }
      });
}

// ---- plain-value conveniences ------------------------------------------------

Array matmul(const Array& a, const Array& b) {
  Tape t;
  return matmul(t.constant(a), t.constant(b)).value();
}

Array conv2d(const Array& input, const Array& kernels, int stride, int padding) {
  Tape t;
  return conv2d(t.constant(input), t.constant(kernels), stride, padding).value();
}

Array relu(const Array& x) {
  Tape t;
  return relu(t.constant(x)).value();
}

Array l2_normalize(const Array& x) {
  Tape t;
  return l2_normalize(t.constant(x)).value();
}

double softmax_cross_entropy(const Array& logits, int label) {
  Tape t;
  return softmax_cross_entropy(t.constant(logits), label).value().item();
}

}  // namespace mvc::num
