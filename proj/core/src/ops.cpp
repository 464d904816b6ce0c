#include "setgen/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "setgen/errors.hpp"

namespace setgen::ops {

namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

Tensor make_op(const char* name, Shape shape, std::vector<double> value,
               std::initializer_list<Tensor> parents, Backward backward) {
  if (debug_checks()) {
    for (double v : value) {
      if (!std::isfinite(v)) {
        throw NumericsError(std::string("non-finite value produced by ") + name);
      }
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = name;
  for (const Tensor& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Tensor& p : parents) node->parents.push_back(p.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor make_op(const char* name, Shape shape, std::vector<double> value,
               const std::vector<Tensor>& parents, Backward backward) {
  if (debug_checks()) {
    for (double v : value) {
      if (!std::isfinite(v)) {
        throw NumericsError(std::string("non-finite value produced by ") + name);
      }
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = name;
  for (const Tensor& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Tensor& p : parents) node->parents.push_back(p.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Accumulate into parent k if it takes gradients.
template <typename F>
void push(Node& self, std::size_t k, F&& body) {
  Node& parent = *self.parents[k];
  if (!parent.requires_grad) return;
  body(parent.grad_buffer());
}

void require_rank2(const Tensor& x, const char* what) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(what) + " needs a rank-2 tensor, got " +
                     shape_string(x.shape()));
  }
}

// Right-aligned broadcasting over padded rank-3 shapes.
struct Broadcast {
  Shape out;
  std::array<std::size_t, 3> dims{};
  std::array<std::size_t, 3> a_stride{};
  std::array<std::size_t, 3> b_stride{};
};

std::array<std::size_t, 3> padded(const Shape& s) {
  std::array<std::size_t, 3> p{1, 1, 1};
  for (std::size_t i = 0; i < s.size(); ++i) p[3 - s.size() + i] = s[i];
  return p;
}

std::array<std::size_t, 3> strides_for(const std::array<std::size_t, 3>& d,
                                       const std::array<std::size_t, 3>& out) {
  std::array<std::size_t, 3> st{d[1] * d[2], d[2], 1};
  for (std::size_t i = 0; i < 3; ++i) {
    if (d[i] == 1 && out[i] != 1) st[i] = 0;
  }
  return st;
}

Broadcast broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
  const auto pa = padded(a);
  const auto pb = padded(b);
  Broadcast bc;
  for (std::size_t i = 0; i < 3; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_string(a) +
                       " with " + shape_string(b));
    }
    bc.dims[i] = std::max(pa[i], pb[i]);
  }
  const std::size_t rank = std::max(a.size(), b.size());
  for (std::size_t i = 3 - rank; i < 3; ++i) bc.out.push_back(bc.dims[i]);
  bc.a_stride = strides_for(pa, bc.dims);
  bc.b_stride = strides_for(pb, bc.dims);
  return bc;
}

template <typename F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  std::size_t o = 0;
  for (std::size_t i = 0; i < bc.dims[0]; ++i) {
    for (std::size_t j = 0; j < bc.dims[1]; ++j) {
      std::size_t ai = i * bc.a_stride[0] + j * bc.a_stride[1];
      std::size_t bi = i * bc.b_stride[0] + j * bc.b_stride[1];
      for (std::size_t k = 0; k < bc.dims[2]; ++k, ++o) {
        f(o, ai, bi);
        ai += bc.a_stride[2];
        bi += bc.b_stride[2];
      }
    }
  }
}

enum class Binary { add, sub, mul, div };

Tensor binary(const Tensor& a, const Tensor& b, Binary kind, const char* name) {
  const Broadcast bc = broadcast_shapes(a.shape(), b.shape(), name);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(shape_numel(bc.out));
  for_each_broadcast(bc, [&](std::size_t o, std::size_t ai, std::size_t bi) {
    switch (kind) {
      case Binary::add: out[o] = av[ai] + bv[bi]; break;
      case Binary::sub: out[o] = av[ai] - bv[bi]; break;
      case Binary::mul: out[o] = av[ai] * bv[bi]; break;
      case Binary::div: out[o] = av[ai] / bv[bi]; break;
    }
  });
  return make_op(name, bc.out, std::move(out), {a, b}, [bc, kind](Node& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    push(self, 0, [&](std::vector<double>& ga) {
      for_each_broadcast(bc, [&](std::size_t o, std::size_t ai, std::size_t bi) {
        switch (kind) {
          case Binary::add:
          case Binary::sub: ga[ai] += g[o]; break;
          case Binary::mul: ga[ai] += g[o] * bv[bi]; break;
          case Binary::div: ga[ai] += g[o] / bv[bi]; break;
        }
      });
    });
    push(self, 1, [&](std::vector<double>& gb) {
      for_each_broadcast(bc, [&](std::size_t o, std::size_t ai, std::size_t bi) {
        switch (kind) {
          case Binary::add: gb[bi] += g[o]; break;
          case Binary::sub: gb[bi] -= g[o]; break;
          case Binary::mul: gb[bi] += g[o] * av[ai]; break;
          case Binary::div: gb[bi] -= g[o] * av[ai] / (bv[bi] * bv[bi]); break;
        }
      });
    });
  });
}

// Elementwise unary op with derivative expressed from (input, output).
template <typename F, typename D>
Tensor unary(const Tensor& x, const char* name, F f, D df) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_op(name, x.shape(), std::move(out), {x}, [df](Node& self) {
    const auto& xv = self.parents[0]->value;
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < xv.size(); ++i) {
        gx[i] += self.grad[i] * df(xv[i], self.value[i]);
      }
    });
  });
}

// Extreme value along one axis of a rank-2 tensor with equal-split ties.
Tensor extreme(const Tensor& x, bool over_rows, bool take_max, const char* name) {
  require_rank2(x, name);
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (n == 0 || c == 0) throw ShapeError(std::string(name) + " of an empty tensor");
  const auto xv = x.data();
  const std::size_t outer = over_rows ? c : n;
  const std::size_t inner = over_rows ? n : c;
  auto index = [=](std::size_t o, std::size_t i) { return over_rows ? i * c + o : o * c + i; };
  std::vector<double> out(outer);
  for (std::size_t o = 0; o < outer; ++o) {
    double best = xv[index(o, 0)];
    for (std::size_t i = 1; i < inner; ++i) {
      const double v = xv[index(o, i)];
      if (take_max ? v > best : v < best) best = v;
    }
    out[o] = best;
  }
  Shape shape = over_rows ? Shape{1, c} : Shape{n, 1};
  return make_op(name, shape, std::move(out), {x}, [outer, inner, index](Node& self) {
    const auto& xv = self.parents[0]->value;
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t o = 0; o < outer; ++o) {
        std::size_t ties = 0;
        for (std::size_t i = 0; i < inner; ++i) ties += xv[index(o, i)] == self.value[o];
        const double share = self.grad[o] / static_cast<double>(ties);
        for (std::size_t i = 0; i < inner; ++i) {
          if (xv[index(o, i)] == self.value[o]) gx[index(o, i)] += share;
        }
      }
    });
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::div, "div"); }

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  const Broadcast bc = broadcast_shapes(shape, x.shape(), "broadcast_to");
  if (bc.out != shape) {
    throw ShapeError("broadcast_to: " + shape_string(x.shape()) + " does not expand to " +
                     shape_string(shape));
  }
  const auto xv = x.data();
  std::vector<double> out(shape_numel(shape));
  for_each_broadcast(bc, [&](std::size_t o, std::size_t, std::size_t xi) { out[o] = xv[xi]; });
  return make_op("broadcast", shape, std::move(out), {x}, [bc](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for_each_broadcast(bc, [&](std::size_t o, std::size_t, std::size_t xi) {
        gx[xi] += self.grad[o];
      });
    });
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary(
      x, "add_scalar", [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const double* av = a.data().data();
  const double* bv = b.data().data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      const double* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return make_op("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0]->value.data();
    const double* bv = self.parents[1]->value.data();
    push(self, 0, [&](std::vector<double>& ga) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += s;
        }
      }
    });
    push(self, 1, [&](std::vector<double>& gb) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double s = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * g[i * n + j];
        }
      }
    });
  });
}

Tensor transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  const auto xv = x.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  return make_op("transpose", {c, r}, std::move(out), {x}, [r, c](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[j * r + i];
    });
  });
}

Tensor reshape(const Tensor& x, const Shape& shape) {
  if (shape.size() > 3 || shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_op("reshape", shape, std::move(out), {x}, [](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    });
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  require_rank2(x, "gather_rows");
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  std::vector<std::size_t> idx(index.begin(), index.end());
  const auto xv = x.data();
  std::vector<double> out(idx.size() * c);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) throw ShapeError("gather_rows: index out of range");
    std::copy_n(xv.begin() + idx[r] * c, c, out.begin() + r * c);
  }
  const std::size_t rows = idx.size();
  return make_op("gather_rows", {rows, c}, std::move(out), {x},
                 [idx = std::move(idx), c](Node& self) {
                   push(self, 0, [&](std::vector<double>& gx) {
                     for (std::size_t r = 0; r < idx.size(); ++r)
                       for (std::size_t j = 0; j < c; ++j) gx[idx[r] * c + j] += self.grad[r * c + j];
                   });
                 });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t c = parts[0].cols();
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != c) throw ShapeError("concat_rows: column mismatch");
    offsets.push_back(out.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
    rows += p.rows();
  }
  return make_op("concat_rows", {rows, c}, std::move(out),
                 std::vector<Tensor>(parts.begin(), parts.end()),
                 [offsets](Node& self) {
                   for (std::size_t k = 0; k < self.parents.size(); ++k) {
                     push(self, k, [&](std::vector<double>& gp) {
                       for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[offsets[k] + i];
                     });
                   }
                 });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != r) throw ShapeError("concat_cols: row mismatch");
    offsets.push_back(total);
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].data();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(pv.begin() + i * widths[k], widths[k], out.begin() + i * total + offsets[k]);
  }
  return make_op("concat_cols", {r, total}, std::move(out),
                 std::vector<Tensor>(parts.begin(), parts.end()),
                 [offsets, widths, r, total](Node& self) {
                   for (std::size_t k = 0; k < self.parents.size(); ++k) {
                     push(self, k, [&](std::vector<double>& gp) {
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < widths[k]; ++j)
                           gp[i * widths[k] + j] += self.grad[i * total + offsets[k] + j];
                     });
                   }
                 });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_cols");
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (begin > end || end > c) throw ShapeError("slice_cols: bad range");
  const std::size_t w = end - begin;
  const auto xv = x.data();
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(xv.begin() + i * c + begin, w, out.begin() + i * w);
  return make_op("slice_cols", {r, w}, std::move(out), {x}, [r, c, w, begin](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) gx[i * c + begin + j] += self.grad[i * w + j];
    });
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  if (begin > end || end > x.rows()) throw ShapeError("slice_rows: bad range");
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return gather_rows(x, idx);
}

Tensor relu(const Tensor& x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid",
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
  return unary(
      x, "softplus",
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x) {
  return unary(
      x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(const Tensor& x) {
  return unary(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor neg(const Tensor& x) {
  return unary(
      x, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      x, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

namespace {

std::size_t last_dim(const Tensor& x, const char* name) {
  if (x.rank() == 0) throw ShapeError(std::string(name) + " needs rank >= 1");
  const std::size_t d = x.shape().back();
  if (d == 0) throw ShapeError(std::string(name) + " over an empty axis");
  return d;
}

}  // namespace

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t d = last_dim(x, "softmax_lastdim");
  const std::size_t groups = x.numel() / d;
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const double* in = xv.data() + g * d;
    double* o = out.data() + g * d;
    const double m = *std::max_element(in, in + d);
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += (o[i] = std::exp(in[i] - m));
    for (std::size_t i = 0; i < d; ++i) o[i] /= z;
  }
  return make_op("softmax_lastdim", x.shape(), std::move(out), {x}, [groups, d](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t g = 0; g < groups; ++g) {
        const double* y = self.value.data() + g * d;
        const double* gy = self.grad.data() + g * d;
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += gy[i] * y[i];
        for (std::size_t i = 0; i < d; ++i) gx[g * d + i] += y[i] * (gy[i] - dot);
      }
    });
  });
}

Tensor log_softmax_lastdim(const Tensor& x) {
  const std::size_t d = last_dim(x, "log_softmax_lastdim");
  const std::size_t groups = x.numel() / d;
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const double* in = xv.data() + g * d;
    double* o = out.data() + g * d;
    const double m = *std::max_element(in, in + d);
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += std::exp(in[i] - m);
    const double lz = m + std::log(z);
    for (std::size_t i = 0; i < d; ++i) o[i] = in[i] - lz;
  }
  return make_op("log_softmax_lastdim", x.shape(), std::move(out), {x}, [groups, d](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t g = 0; g < groups; ++g) {
        const double* y = self.value.data() + g * d;
        const double* gy = self.grad.data() + g * d;
        double total = 0.0;
        for (std::size_t i = 0; i < d; ++i) total += gy[i];
        for (std::size_t i = 0; i < d; ++i) gx[g * d + i] += gy[i] - std::exp(y[i]) * total;
      }
    });
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_op("sum", {}, {s}, {x}, [](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (double& g : gx) g += self.grad[0];
    });
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor sum_rows(const Tensor& x) {
  require_rank2(x, "sum_rows");
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  const auto xv = x.data();
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += xv[i * c + j];
  return make_op("sum_rows", {1, c}, std::move(out), {x}, [n, c](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[j];
    });
  });
}

Tensor sum_cols(const Tensor& x) {
  require_rank2(x, "sum_cols");
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  const auto xv = x.data();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += xv[i * c + j];
  return make_op("sum_cols", {n, 1}, std::move(out), {x}, [n, c](Node& self) {
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[i];
    });
  });
}

Tensor mean_rows(const Tensor& x) {
  require_rank2(x, "mean_rows");
  if (x.rows() == 0) throw ShapeError("mean_rows over zero rows");
  return scale(sum_rows(x), 1.0 / static_cast<double>(x.rows()));
}

Tensor mean_cols(const Tensor& x) {
  require_rank2(x, "mean_cols");
  if (x.cols() == 0) throw ShapeError("mean_cols over zero columns");
  return scale(sum_cols(x), 1.0 / static_cast<double>(x.cols()));
}

Tensor max_rows(const Tensor& x) { return extreme(x, true, true, "max_rows"); }
Tensor min_rows(const Tensor& x) { return extreme(x, true, false, "min_rows"); }
Tensor max_cols(const Tensor& x) { return extreme(x, false, true, "max_cols"); }
Tensor min_cols(const Tensor& x) { return extreme(x, false, false, "min_cols"); }

Tensor std_rows(const Tensor& x) {
  require_rank2(x, "std_rows");
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (n == 0) throw ShapeError("std_rows over zero rows");
  const auto xv = x.data();
  std::vector<double> mu(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) mu[j] += xv[i * c + j];
  for (double& m : mu) m /= static_cast<double>(n);
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xv[i * c + j] - mu[j];
      out[j] += d * d;
    }
  for (double& v : out) v = std::sqrt(v / static_cast<double>(n));
  return make_op("std_rows", {1, c}, std::move(out), {x}, [n, c, mu](Node& self) {
    const auto& xv = self.parents[0]->value;
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t j = 0; j < c; ++j) {
        const double s = self.value[j];
        if (s <= 0.0) continue;
        const double k = self.grad[j] / (static_cast<double>(n) * s);
        for (std::size_t i = 0; i < n; ++i) gx[i * c + j] += k * (xv[i * c + j] - mu[j]);
      }
    });
  });
}

Tensor pairwise_sqdist(const Tensor& x, const Tensor& y) {
  require_rank2(x, "pairwise_sqdist");
  require_rank2(y, "pairwise_sqdist");
  const std::size_t n = x.rows();
  const std::size_t m = y.rows();
  const std::size_t d = x.cols();
  if (y.cols() != d) {
    throw ShapeError("pairwise_sqdist: dims " + shape_string(x.shape()) + " vs " +
                     shape_string(y.shape()));
  }
  const auto xv = x.data();
  const auto yv = y.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      out[i * m + j] = squared_distance(xv.subspan(i * d, d), yv.subspan(j * d, d));
  return make_op("pairwise_sqdist", {n, m}, std::move(out), {x, y}, [n, m, d](Node& self) {
    const auto& xv = self.parents[0]->value;
    const auto& yv = self.parents[1]->value;
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double g = 2.0 * self.grad[i * m + j];
          for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += g * (xv[i * d + k] - yv[j * d + k]);
        }
    });
    push(self, 1, [&](std::vector<double>& gy) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          const double g = 2.0 * self.grad[i * m + j];
          for (std::size_t k = 0; k < d; ++k) gy[j * d + k] -= g * (xv[i * d + k] - yv[j * d + k]);
        }
    });
  });
}

Tensor pairwise_dist(const Tensor& x) {
  require_rank2(x, "pairwise_dist");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const auto xv = x.data();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::sqrt(squared_distance(xv.subspan(i * d, d), xv.subspan(j * d, d)));
      out[i * n + j] = v;
      out[j * n + i] = v;
    }
  return make_op("pairwise_dist", {n, n}, std::move(out), {x}, [n, d](Node& self) {
    const auto& xv = self.parents[0]->value;
    push(self, 0, [&](std::vector<double>& gx) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double dist = self.value[i * n + j];
          if (i == j || dist <= 0.0) continue;
          const double g = self.grad[i * n + j] / dist;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = xv[i * d + k] - xv[j * d + k];
            gx[i * d + k] += g * diff;
            gx[j * d + k] -= g * diff;
          }
        }
    });
  });
}

}  // namespace setgen::ops
