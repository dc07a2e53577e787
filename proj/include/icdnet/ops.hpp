// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "icdnet/autodiff.hpp"
#include "icdnet/error.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/tensor.hpp"

// Differentiable operations over Graph nodes. Each op computes its forward
// value eagerly and records a closure that accumulates parent gradients.

namespace icdnet {

namespace detail {

inline Graph& graph_of(const Var& v) {
  if (!v.valid()) throw Error("operation on an unbound Var");
  return *v.graph();
}

inline void same_graph(const Var& a, const Var& b) {
  if (a.graph() != b.graph()) throw Error("operands belong to different graphs");
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  detail::same_graph(a, b);
  Graph& g = detail::graph_of(a);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.cols() != vb.rows() || vb.rank() != 2) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_str(va.shape()) + " x " +
                         shape_str(vb.shape()));
  }
  Tensor out({va.rows(), vb.cols()});
  out.mat().noalias() = va.mat() * vb.mat();
  std::size_t ia = a.id(), ib = b.id();
  return g.record(std::move(out), {a, b}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& dc = gr.grad(self);
    if (gr.requires_grad(ia)) gr.grad(ia).mat().noalias() += dc.mat() * gr.value(ib).mat().transpose();
    if (gr.requires_grad(ib)) gr.grad(ib).mat().noalias() += gr.value(ia).mat().transpose() * dc.mat();
  });
}

enum class Activation { Tanh, Sigmoid, Relu };

inline Var elementwise(Activation op, const Var& x) {
  Graph& g = detail::graph_of(x);
  const Tensor& vx = x.value();
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    double v = vx[i];
    switch (op) {
      case Activation::Tanh: out[i] = std::tanh(v); break;
      case Activation::Sigmoid: out[i] = detail::sigmoid(v); break;
      case Activation::Relu: out[i] = v > 0.0 ? v : 0.0; break;
    }
  }
  std::size_t ix = x.id();
  return g.record(std::move(out), {x}, [ix, op](Graph& gr, std::size_t self) {
    const Tensor& y = gr.value(self);
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < y.size(); ++i) {
      switch (op) {
        case Activation::Tanh: dx[i] += dy[i] * (1.0 - y[i] * y[i]); break;
        case Activation::Sigmoid: dx[i] += dy[i] * y[i] * (1.0 - y[i]); break;
        case Activation::Relu: dx[i] += y[i] > 0.0 ? dy[i] : 0.0; break;
      }
    }
  });
}

inline Var tanh(const Var& x) { return elementwise(Activation::Tanh, x); }
inline Var sigmoid(const Var& x) { return elementwise(Activation::Sigmoid, x); }
inline Var relu(const Var& x) { return elementwise(Activation::Relu, x); }

inline Var add(const Var& a, const Var& b) {
  detail::same_graph(a, b);
  detail::require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& vb = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  std::size_t ia = a.id(), ib = b.id();
  return detail::graph_of(a).record(std::move(out), {a, b}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    for (std::size_t id : {ia, ib}) {
      if (!gr.requires_grad(id)) continue;
      Tensor& dp = gr.grad(id);
      for (std::size_t i = 0; i < d.size(); ++i) dp[i] += d[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::same_graph(a, b);
  detail::require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& vb = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  std::size_t ia = a.id(), ib = b.id();
  return detail::graph_of(a).record(std::move(out), {a, b}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    if (gr.requires_grad(ia)) {
      Tensor& da = gr.grad(ia);
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& db = gr.grad(ib);
      for (std::size_t i = 0; i < d.size(); ++i) db[i] -= d[i];
    }
  });
}

/// Hadamard product.
inline Var mul(const Var& a, const Var& b) {
  detail::same_graph(a, b);
  detail::require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& vb = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  std::size_t ia = a.id(), ib = b.id();
  return detail::graph_of(a).record(std::move(out), {a, b}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    if (gr.requires_grad(ia)) {
      Tensor& da = gr.grad(ia);
      const Tensor& vb = gr.value(ib);
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * vb[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& db = gr.grad(ib);
      const Tensor& va = gr.value(ia);
      for (std::size_t i = 0; i < d.size(); ++i) db[i] += d[i] * va[i];
    }
  });
}

inline Var scale(const Var& x, double s) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= s;
  std::size_t ix = x.id();
  return detail::graph_of(x).record(std::move(out), {x}, [ix, s](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < d.size(); ++i) dx[i] += s * d[i];
  });
}

/// x[r x c] + b[c], b broadcast over rows.
inline Var add_bias(const Var& x, const Var& b) {
  detail::same_graph(x, b);
  const Tensor& vx = x.value();
  const Tensor& vb = b.value();
  if (vb.size() != vx.cols()) {
    throw DimensionError("add_bias: bias " + shape_str(vb.shape()) + " does not match " +
                         shape_str(vx.shape()));
  }
  Tensor out = vx;
  const std::size_t r = vx.rows(), c = vx.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += vb[j];
  std::size_t ix = x.id(), ib = b.id();
  return detail::graph_of(x).record(std::move(out), {x, b}, [ix, ib, r, c](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    if (gr.requires_grad(ix)) {
      Tensor& dx = gr.grad(ix);
      for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& db = gr.grad(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) db[j] += d[i * c + j];
    }
  });
}

inline Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  std::size_t ix = x.id();
  return detail::graph_of(x).record(Tensor::scalar(s), {x}, [ix](Graph& gr, std::size_t self) {
    double d = gr.grad(self)[0];
    for (double& v : gr.grad(ix).values()) v += d;
  });
}

inline Var reshape(const Var& x, Shape shape) {
  if (shape_numel(shape) != x.value().size()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::size_t ix = x.id();
  return detail::graph_of(x).record(x.value().reshaped(std::move(shape)), {x},
                                    [ix](Graph& gr, std::size_t self) {
                                      const Tensor& d = gr.grad(self);
                                      Tensor& dx = gr.grad(ix);
                                      for (std::size_t i = 0; i < d.size(); ++i) dx[i] += d[i];
                                    });
}

/// Rows [begin, end) of a matrix.
inline Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  const Tensor& vx = x.value();
  if (begin >= end || end > vx.rows()) {
    throw IndexError("slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of range for " + shape_str(vx.shape()));
  }
  const std::size_t c = vx.cols();
  Tensor out({end - begin, c},
             std::vector<double>(vx.values().begin() + static_cast<std::ptrdiff_t>(begin * c),
                                 vx.values().begin() + static_cast<std::ptrdiff_t>(end * c)));
  std::size_t ix = x.id();
  return detail::graph_of(x).record(std::move(out), {x}, [ix, begin, c](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < d.size(); ++i) dx[begin * c + i] += d[i];
  });
}

inline Var row(const Var& x, std::size_t r) { return slice_rows(x, r, r + 1); }

/// Columns [begin, end) of a matrix.
inline Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  const Tensor& vx = x.value();
  if (begin >= end || end > vx.cols()) {
    throw IndexError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of range for " + shape_str(vx.shape()));
  }
  const std::size_t r = vx.rows(), c = vx.cols(), w = end - begin;
  Tensor out({r, w});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = vx[i * c + begin + j];
  std::size_t ix = x.id();
  return detail::graph_of(x).record(std::move(out), {x}, [ix, begin, r, c, w](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) dx[i * c + begin + j] += d[i * w + j];
  });
}

/// Side-by-side concatenation of matrices with equal row counts.
inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Graph& g = detail::graph_of(parts.front());
  const std::size_t r = parts.front().value().rows();
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    detail::same_graph(parts.front(), p);
    if (p.value().rows() != r) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.value().cols());
    ids.push_back(p.id());
    total += p.value().cols();
  }
  Tensor out({r, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + off + j] = v[i * widths[k] + j];
    off += widths[k];
  }
  bool req = false;
  for (std::size_t id : ids) req = req || g.requires_grad(id);
  auto fn = [ids, widths, r, total](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.requires_grad(ids[k])) {
        Tensor& dp = gr.grad(ids[k]);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) dp[i * widths[k] + j] += d[i * total + o + j];
      }
      o += widths[k];
    }
  };
  if (!req) return g.constant(std::move(out));
  return g.record_sink(std::move(out), std::move(fn));
}

/// Vertical concatenation of matrices with equal column counts.
inline Var stack_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("stack_rows: no inputs");
  Graph& g = detail::graph_of(parts.front());
  const std::size_t c = parts.front().value().cols();
  std::vector<std::size_t> sizes, ids;
  std::vector<double> data;
  bool req = false;
  for (const Var& p : parts) {
    detail::same_graph(parts.front(), p);
    if (p.value().cols() != c) throw DimensionError("stack_rows: column counts differ");
    sizes.push_back(p.value().size());
    ids.push_back(p.id());
    req = req || g.requires_grad(p.id());
    data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  }
  const std::size_t r = data.size() / c;
  Tensor out({r, c}, std::move(data));
  if (!req) return g.constant(std::move(out));
  return g.record_sink(std::move(out), [ids, sizes](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad(self);
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (gr.requires_grad(ids[k])) {
        Tensor& dp = gr.grad(ids[k]);
        for (std::size_t i = 0; i < sizes[k]; ++i) dp[i] += d[o + i];
      }
      o += sizes[k];
    }
  });
}

/// Row-wise softmax over the first `valid` columns; columns at or beyond
/// `valid` get exactly zero weight, as if their score were -inf.
inline Var masked_softmax_rows(const Var& x, std::size_t valid) {
  const Tensor& vx = x.value();
  const std::size_t r = vx.rows(), c = vx.cols();
  if (valid == 0 || valid > c) {
    throw IndexError("softmax: valid length " + std::to_string(valid) + " outside [1," +
                     std::to_string(c) + "]");
  }
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const double* in = &vx[i * c];
    double* y = &out[i * c];
    double mx = in[0];
    for (std::size_t j = 1; j < valid; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < valid; ++j) {
      y[j] = std::exp(in[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < valid; ++j) y[j] /= z;
  }
  std::size_t ix = x.id();
  return detail::graph_of(x).record(std::move(out), {x}, [ix, r, c, valid](Graph& gr, std::size_t self) {
    const Tensor& y = gr.value(self);
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < valid; ++j) dot += y[i * c + j] * dy[i * c + j];
      for (std::size_t j = 0; j < valid; ++j) dx[i * c + j] += y[i * c + j] * (dy[i * c + j] - dot);
    }
  });
}

inline Var softmax_rows(const Var& x) { return masked_softmax_rows(x, x.value().cols()); }

/// Valid 1-D convolution over a [T x d] sequence. Window t is the flattened
/// slice input[t .. t+k), which in row-major storage is contiguous, so the
/// im2col matrix is a strided view of the input.
inline Var conv1d_windows(const Var& input, const Var& filters, const Var& bias, std::size_t k) {
  detail::same_graph(input, filters);
  detail::same_graph(input, bias);
  const Tensor& in = input.value();
  const Tensor& w = filters.value();
  const Tensor& b = bias.value();
  const std::size_t T = in.rows(), d = in.cols();
  if (k == 0) throw ConfigError("conv1d_windows: window size must be >= 1");
  if (T < k) {
    throw DimensionError("conv1d_windows: sequence too short: length " + std::to_string(T) +
                         " < window " + std::to_string(k));
  }
  if (w.rank() != 2 || w.rows() != k * d) {
    throw DimensionError("conv1d_windows: filters " + shape_str(w.shape()) + " do not match window " +
                         std::to_string(k) + " x width " + std::to_string(d));
  }
  const std::size_t F = w.cols();
  if (b.size() != F) throw DimensionError("conv1d_windows: bias " + shape_str(b.shape()) + " vs " + std::to_string(F) + " filters");
  const std::size_t n = T - k + 1;
  using Strided = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
  Strided windows(in.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k * d),
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(d)));
  Tensor out({n, F});
  out.mat().noalias() = windows * w.mat();
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t f = 0; f < F; ++f) out[t * F + f] += b[f];
  std::size_t ii = input.id(), iw = filters.id(), ib = bias.id();
  return detail::graph_of(input).record(
      std::move(out), {input, filters, bias}, [ii, iw, ib, n, k, d, F](Graph& gr, std::size_t self) {
        const Tensor& dy = gr.grad(self);
        const Tensor& vin = gr.value(ii);
        Strided win(vin.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k * d),
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(d)));
        if (gr.requires_grad(iw)) gr.grad(iw).mat().noalias() += win.transpose() * dy.mat();
        if (gr.requires_grad(ib)) {
          Tensor& db = gr.grad(ib);
          for (std::size_t t = 0; t < n; ++t)
            for (std::size_t f = 0; f < F; ++f) db[f] += dy[t * F + f];
        }
        if (gr.requires_grad(ii)) {
          RowMatrix dwin = dy.mat() * gr.value(iw).mat().transpose();
          Tensor& din = gr.grad(ii);
          for (std::size_t t = 0; t < n; ++t) {
            double* dst = &din[t * d];
            const double* src = dwin.data() + t * k * d;
            for (std::size_t j = 0; j < k * d; ++j) dst[j] += src[j];
          }
        }
      });
}

/// Column-wise maximum of a [T x F] matrix, as a rank-1 [F] tensor. The
/// gradient goes to the first maximal row of each column.
inline Var max_over_time(const Var& x) {
  const Tensor& vx = x.value();
  if (vx.empty()) throw DimensionError("max_over_time: empty input");
  const std::size_t T = vx.rows(), F = vx.cols();
  Tensor out({F});
  std::vector<std::size_t> arg(F, 0);
  for (std::size_t f = 0; f < F; ++f) {
    double best = vx[f];
    for (std::size_t t = 1; t < T; ++t) {
      if (vx[t * F + f] > best) {
        best = vx[t * F + f];
        arg[f] = t;
      }
    }
    out[f] = best;
  }
  std::size_t ix = x.id();
  return detail::graph_of(x).record(std::move(out), {x}, [ix, F, arg = std::move(arg)](Graph& gr, std::size_t self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t f = 0; f < F; ++f) dx[arg[f] * F + f] += dy[f];
  });
}

/// Inverted dropout. Identity in inference mode or at rate 0.
inline Var dropout(const Var& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const Tensor& vx = x.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(vx.size());
  Tensor out(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = vx[i] * mask[i];
  }
  std::size_t ix = x.id();
  return detail::graph_of(x).record(std::move(out), {x}, [ix, mask = std::move(mask)](Graph& gr, std::size_t self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
  });
}

inline void validate_binary_targets(const Tensor& targets) {
  for (double t : targets.values()) {
    if (t != 0.0 && t != 1.0) {
      throw ValidationError("multilabel targets must be 0 or 1, got " + std::to_string(t));
    }
  }
}

/// Sum over cells of the per-cell sigmoid cross-entropy, in the stable form
/// max(z,0) - z*y + log1p(exp(-|z|)).
inline Var sigmoid_cross_entropy_sum(const Var& logits, const Tensor& targets) {
  const Tensor& z = logits.value();
  if (z.size() != targets.size() || z.cols() != targets.cols()) {
    throw DimensionError("cross entropy: logits " + shape_str(z.shape()) + " vs targets " +
                         shape_str(targets.shape()));
  }
  validate_binary_targets(targets);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double zi = z[i], yi = targets[i];
    loss += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
  }
  std::size_t iz = logits.id();
  return detail::graph_of(logits).record(Tensor::scalar(loss), {logits},
                                         [iz, targets](Graph& gr, std::size_t self) {
                                           double d = gr.grad(self)[0];
                                           const Tensor& zv = gr.value(iz);
                                           Tensor& dz = gr.grad(iz);
                                           for (std::size_t i = 0; i < zv.size(); ++i)
                                             dz[i] += d * (detail::sigmoid(zv[i]) - targets[i]);
                                         });
}

/// Mean over all B*C cells of independent per-class sigmoid cross-entropy.
inline Var multilabel_cross_entropy(const Var& logits, const Tensor& targets) {
  Var s = sigmoid_cross_entropy_sum(logits, targets);
  return scale(s, 1.0 / static_cast<double>(targets.size()));
}

/// lambda * sum of squares over parameters marked for decay.
inline double l2_value(const ParameterSet& params, double lambda) {
  if (lambda < 0.0) throw ConfigError("l2 lambda must be >= 0");
  double s = 0.0;
  for (const auto& p : params.all()) {
    if (!p.decay) continue;
    for (double w : p.value.values()) s += w * w;
  }
  return lambda * s;
}

inline Var l2_penalty(Graph& g, ParameterSet& params, double lambda) {
  double v = l2_value(params, lambda);
  std::vector<Parameter*> targets;
  for (auto& p : params.all())
    if (p.decay) targets.push_back(&p);
  return g.record_sink(Tensor::scalar(v), [targets, lambda](Graph& gr, std::size_t self) {
    double d = gr.grad(self)[0];
    for (Parameter* p : targets)
      for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += d * 2.0 * lambda * p->value[i];
  });
}

/// Row gather from an embedding matrix. Id 0 (PAD) yields a zero row and
/// never receives gradient.
inline Var embed(std::span<const std::int32_t> ids, const Var& table) {
  const Tensor& E = table.value();
  const std::size_t V = E.rows(), d = E.cols();
  if (ids.empty()) throw DimensionError("embed: empty id sequence");
  Tensor out({ids.size(), d});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto id = ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= V) {
      throw IndexError("embed: id " + std::to_string(id) + " outside vocabulary of " + std::to_string(V));
    }
    if (id == 0) continue;
    std::copy_n(&E[static_cast<std::size_t>(id) * d], d, &out[t * d]);
  }
  std::size_t ie = table.id();
  std::vector<std::int32_t> idv(ids.begin(), ids.end());
  return detail::graph_of(table).record(std::move(out), {table}, [ie, d, idv = std::move(idv)](Graph& gr, std::size_t self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dE = gr.grad(ie);
    for (std::size_t t = 0; t < idv.size(); ++t) {
      if (idv[t] == 0) continue;
      double* dst = &dE[static_cast<std::size_t>(idv[t]) * d];
      for (std::size_t j = 0; j < d; ++j) dst[j] += dy[t * d + j];
    }
  });
}

}  // namespace icdnet
