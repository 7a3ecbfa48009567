#include "eegart/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace eegart::nn {

namespace detail {
bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

namespace {

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                ", got " + shape_str(s));
  }
}

template <typename T>
Node<T>* parent(Node<T>& self, std::size_t i) {
  Node<T>* p = self.parents[i].get();
  return (p && p->requires_grad) ? p : nullptr;
}

template <typename T>
T sigmoid_scalar(T v) {
  return v >= T{0} ? T{1} / (T{1} + std::exp(-v)) : std::exp(v) / (T{1} + std::exp(v));
}

// Maps padded coordinate to a source index, or -1 for a zero pad.
inline std::ptrdiff_t source_index(std::ptrdiff_t p, std::ptrdiff_t length, PadMode mode) {
  if (p >= 0 && p < length) return p;
  if (mode == PadMode::zeros) return -1;
  p %= length;
  return p < 0 ? p + length : p;
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opt) {
  if (opt.stride == 0) throw std::invalid_argument("conv1d: stride must be positive");
  const std::size_t padded = length + opt.pad_left + opt.pad_right;
  if (padded < kernel) {
    throw std::invalid_argument("conv1d: kernel " + std::to_string(kernel) +
                                " longer than padded input " + std::to_string(padded));
  }
  return (padded - kernel) / opt.stride + 1;
}

template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const Conv1dOptions& opt) {
  require_rank(x.shape(), 3, "conv1d input");
  require_rank(w.shape(), 3, "conv1d weight");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t K = w.dim(0), S = w.dim(2);
  if (w.dim(1) != C) {
    throw std::invalid_argument("conv1d: input " + shape_str(x.shape()) + " vs weight " +
                                shape_str(w.shape()));
  }
  if (b.defined() && b.value().size() != K) {
    throw std::invalid_argument("conv1d: bias shape " + shape_str(b.shape()));
  }
  if (opt.pad_mode == PadMode::circular && (opt.pad_left > L || opt.pad_right > L)) {
    throw std::invalid_argument("conv1d: circular padding wider than input");
  }
  const std::size_t Lo = conv1d_output_length(L, S, opt);
  const std::size_t CS = C * S;

  // col[(c*S + s) * Lo + o] = padded input at o*stride + s.
  auto build_col = [=](const T* xb, std::vector<T>& col) {
    col.assign(CS * Lo, T{0});
    for (std::size_t c = 0; c < C; ++c) {
      const T* xc = xb + c * L;
      for (std::size_t s = 0; s < S; ++s) {
        T* row = col.data() + (c * S + s) * Lo;
        for (std::size_t o = 0; o < Lo; ++o) {
          const auto p = static_cast<std::ptrdiff_t>(o * opt.stride + s) -
                         static_cast<std::ptrdiff_t>(opt.pad_left);
          const auto src = source_index(p, static_cast<std::ptrdiff_t>(L), opt.pad_mode);
          if (src >= 0) row[o] = xc[src];
        }
      }
    }
  };

  Tensor<T> y({B, K, Lo});
  const T* W = w.value().ptr();
  std::vector<T> col;
  for (std::size_t bi = 0; bi < B; ++bi) {
    build_col(x.value().ptr() + bi * C * L, col);
    T* yb = y.ptr() + bi * K * Lo;
    for (std::size_t k = 0; k < K; ++k) {
      T* yk = yb + k * Lo;
      const T bias = b.defined() ? b.value()[k] : T{0};
      std::fill(yk, yk + Lo, bias);
      const T* wk = W + k * CS;
      for (std::size_t cs = 0; cs < CS; ++cs) {
        const T wv = wk[cs];
        const T* cr = col.data() + cs * Lo;
        for (std::size_t o = 0; o < Lo; ++o) yk[o] += wv * cr[o];
      }
    }
  }

  return make_op<T>(std::move(y), {x, w, b}, [=](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    Node<T>* nw = parent(self, 1);
    Node<T>* nb = self.parents.size() > 2 ? parent(self, 2) : nullptr;
    const T* gy = self.grad.ptr();
    const T* xv = self.parents[0]->value.ptr();
    const T* Wv = self.parents[1]->value.ptr();
    std::vector<T> col, colT, dcol;
    for (std::size_t bi = 0; bi < B; ++bi) {
      const T* gyb = gy + bi * K * Lo;
      if (nb) {
        T* db = nb->grad.ptr();
        for (std::size_t k = 0; k < K; ++k) {
          T acc{0};
          for (std::size_t o = 0; o < Lo; ++o) acc += gyb[k * Lo + o];
          db[k] += acc;
        }
      }
      if (nw) {
        build_col(xv + bi * C * L, col);
        colT.assign(Lo * CS, T{0});
        for (std::size_t cs = 0; cs < CS; ++cs)
          for (std::size_t o = 0; o < Lo; ++o) colT[o * CS + cs] = col[cs * Lo + o];
        T* dW = nw->grad.ptr();
        for (std::size_t k = 0; k < K; ++k) {
          T* dwk = dW + k * CS;
          for (std::size_t o = 0; o < Lo; ++o) {
            const T g = gyb[k * Lo + o];
            if (g == T{0}) continue;
            const T* ct = colT.data() + o * CS;
            for (std::size_t cs = 0; cs < CS; ++cs) dwk[cs] += g * ct[cs];
          }
        }
      }
      if (nx) {
        dcol.assign(CS * Lo, T{0});
        for (std::size_t k = 0; k < K; ++k) {
          const T* gk = gyb + k * Lo;
          for (std::size_t cs = 0; cs < CS; ++cs) {
            const T wv = Wv[k * CS + cs];
            T* dr = dcol.data() + cs * Lo;
            for (std::size_t o = 0; o < Lo; ++o) dr[o] += wv * gk[o];
          }
        }
        T* dx = nx->grad.ptr() + bi * C * L;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t s = 0; s < S; ++s) {
            const T* dr = dcol.data() + (c * S + s) * Lo;
            for (std::size_t o = 0; o < Lo; ++o) {
              const auto p = static_cast<std::ptrdiff_t>(o * opt.stride + s) -
                             static_cast<std::ptrdiff_t>(opt.pad_left);
              const auto src = source_index(p, static_cast<std::ptrdiff_t>(L), opt.pad_mode);
              if (src >= 0) dx[c * L + src] += dr[o];
            }
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  require_rank(x.shape(), 2, "linear input");
  require_rank(w.shape(), 2, "linear weight");
  const std::size_t N = x.dim(0), F = x.dim(1), O = w.dim(0);
  if (w.dim(1) != F) {
    throw std::invalid_argument("linear: input " + shape_str(x.shape()) + " vs weight " +
                                shape_str(w.shape()));
  }
  if (b.defined() && b.value().size() != O) throw std::invalid_argument("linear: bias shape");
  Tensor<T> y({N, O});
  const T* X = x.value().ptr();
  const T* W = w.value().ptr();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      T acc = b.defined() ? b.value()[o] : T{0};
      const T* xr = X + n * F;
      const T* wr = W + o * F;
      for (std::size_t f = 0; f < F; ++f) acc += xr[f] * wr[f];
      y[n * O + o] = acc;
    }
  }
  return make_op<T>(std::move(y), {x, w, b}, [=](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    Node<T>* nw = parent(self, 1);
    Node<T>* nb = self.parents.size() > 2 ? parent(self, 2) : nullptr;
    const T* gy = self.grad.ptr();
    const T* Xv = self.parents[0]->value.ptr();
    const T* Wv = self.parents[1]->value.ptr();
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t o = 0; o < O; ++o) {
        const T g = gy[n * O + o];
        if (nb) nb->grad[o] += g;
        if (g == T{0}) continue;
        if (nx) {
          T* dx = nx->grad.ptr() + n * F;
          const T* wr = Wv + o * F;
          for (std::size_t f = 0; f < F; ++f) dx[f] += g * wr[f];
        }
        if (nw) {
          T* dw = nw->grad.ptr() + o * F;
          const T* xr = Xv + n * F;
          for (std::size_t f = 0; f < F; ++f) dw[f] += g * xr[f];
        }
      }
    }
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  double momentum, double eps) {
  const auto& s = x.shape();
  if (s.size() != 2 && s.size() != 3) {
    throw std::invalid_argument("batch_norm: expected [B,C] or [B,C,L], got " + shape_str(s));
  }
  const std::size_t B = s[0], C = s[1], L = s.size() == 3 ? s[2] : 1;
  if (gamma.value().size() != C || beta.value().size() != C || running_mean.size() != C ||
      running_var.size() != C) {
    throw std::invalid_argument("batch_norm: parameter size does not match channels");
  }
  const std::size_t count = B * L;
  const T* X = x.value().ptr();
  Tensor<T> y(s);
  std::vector<T> inv_std(C);
  Tensor<T> xhat(s);

  for (std::size_t c = 0; c < C; ++c) {
    double mean, var;
    if (training) {
      double acc = 0.0;
      for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t l = 0; l < L; ++l) acc += X[(bi * C + c) * L + l];
      mean = acc / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t l = 0; l < L; ++l) {
          const double d = X[(bi * C + c) * L + l] - mean;
          sq += d * d;
        }
      var = sq / static_cast<double>(count);
      const double unbiased = count > 1 ? var * count / static_cast<double>(count - 1) : var;
      running_mean[c] = static_cast<T>(momentum * running_mean[c] + (1.0 - momentum) * mean);
      running_var[c] = static_cast<T>(momentum * running_var[c] + (1.0 - momentum) * unbiased);
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const T inv = static_cast<T>(1.0 / std::sqrt(var + eps));
    inv_std[c] = inv;
    const T g = gamma.value()[c], be = beta.value()[c], m = static_cast<T>(mean);
    for (std::size_t bi = 0; bi < B; ++bi) {
      const std::size_t base = (bi * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) {
        const T h = (X[base + l] - m) * inv;
        xhat[base + l] = h;
        y[base + l] = g * h + be;
      }
    }
  }

  return make_op<T>(std::move(y), {x, gamma, beta},
                    [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    Node<T>* ng = parent(self, 1);
    Node<T>* nbeta = parent(self, 2);
    const T* gy = self.grad.ptr();
    const T* G = self.parents[1]->value.ptr();
    const T n = static_cast<T>(count);
    for (std::size_t c = 0; c < C; ++c) {
      T sum_g{0}, sum_gh{0};
      for (std::size_t bi = 0; bi < B; ++bi) {
        const std::size_t base = (bi * C + c) * L;
        for (std::size_t l = 0; l < L; ++l) {
          sum_g += gy[base + l];
          sum_gh += gy[base + l] * xhat[base + l];
        }
      }
      if (ng) ng->grad[c] += sum_gh;
      if (nbeta) nbeta->grad[c] += sum_g;
      if (!nx) continue;
      T* dx = nx->grad.ptr();
      if (training) {
        const T k = G[c] * inv_std[c] / n;
        for (std::size_t bi = 0; bi < B; ++bi) {
          const std::size_t base = (bi * C + c) * L;
          for (std::size_t l = 0; l < L; ++l)
            dx[base + l] += k * (n * gy[base + l] - sum_g - xhat[base + l] * sum_gh);
        }
      } else {
        const T k = G[c] * inv_std[c];
        for (std::size_t bi = 0; bi < B; ++bi) {
          const std::size_t base = (bi * C + c) * L;
          for (std::size_t l = 0; l < L; ++l) dx[base + l] += k * gy[base + l];
        }
      }
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.storage()) v = v > T{0} ? v : T{0};
  return make_op<T>(std::move(y), {x}, [](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    const T* X = self.parents[0]->value.ptr();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (X[i] > T{0}) nx->grad[i] += self.grad[i];
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.storage()) v = sigmoid_scalar(v);
  return make_op<T>(std::move(y), {x}, [](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T s = self.value[i];
      nx->grad[i] += self.grad[i] * s * (T{1} - s);
    }
  });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.storage()) v = std::tanh(v);
  return make_op<T>(std::move(y), {x}, [](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T t = self.value[i];
      nx->grad[i] += self.grad[i] * (T{1} - t * t);
    }
  });
}

template <typename T>
Var<T> max_pool1d(const Var<T>& x, std::size_t size) {
  require_rank(x.shape(), 3, "max_pool1d");
  if (size == 0) throw std::invalid_argument("max_pool1d: size must be positive");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t Lo = L / size;
  if (Lo == 0) throw std::invalid_argument("max_pool1d: pool wider than input");
  Tensor<T> y({B, C, Lo});
  std::vector<std::uint32_t> arg(B * C * Lo);
  const T* X = x.value().ptr();
  for (std::size_t r = 0; r < B * C; ++r) {
    for (std::size_t o = 0; o < Lo; ++o) {
      std::size_t best = o * size;
      for (std::size_t k = 1; k < size; ++k) {
        const std::size_t i = o * size + k;
        if (X[r * L + i] > X[r * L + best]) best = i;
      }
      y[r * Lo + o] = X[r * L + best];
      arg[r * Lo + o] = static_cast<std::uint32_t>(best);
    }
  }
  return make_op<T>(std::move(y), {x}, [=, arg = std::move(arg)](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t r = 0; r < B * C; ++r)
      for (std::size_t o = 0; o < Lo; ++o)
        nx->grad[r * L + arg[r * Lo + o]] += self.grad[r * Lo + o];
  });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double rate, bool training, Rng* rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  if (!rng) throw std::invalid_argument("dropout: training mode needs a random generator");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.value().size());
  for (auto& m : mask) m = rng->uniform() >= rate ? keep_scale : T{0};
  Tensor<T> y = x.value();
  for (std::size_t i = 0; i < mask.size(); ++i) y[i] *= mask[i];
  return make_op<T>(std::move(y), {x}, [mask = std::move(mask)](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) nx->grad[i] += self.grad[i] * mask[i];
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return make_op<T>(std::move(y), {a, b}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k)
      if (Node<T>* n = parent(self, k))
        for (std::size_t i = 0; i < self.grad.size(); ++i) n->grad[i] += self.grad[i];
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || sa.empty() || sa.size() > 3) {
    throw std::invalid_argument("mul: unsupported shapes " + shape_str(sa) + " and " +
                                shape_str(sb));
  }
  // Pad to rank 3 and derive broadcast strides for b.
  std::size_t da[3] = {1, 1, 1}, db[3] = {1, 1, 1};
  const std::size_t off = 3 - sa.size();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    da[off + i] = sa[i];
    db[off + i] = sb[i];
    if (sb[i] != sa[i] && sb[i] != 1) {
      throw std::invalid_argument("mul: cannot broadcast " + shape_str(sb) + " to " +
                                  shape_str(sa));
    }
  }
  const std::size_t s2 = db[2] == 1 ? 0 : 1;
  const std::size_t s1 = db[1] == 1 ? 0 : db[2];
  const std::size_t s0 = db[0] == 1 ? 0 : db[1] * db[2];
  Tensor<T> y(sa);
  const T* A = a.value().ptr();
  const T* Bv = b.value().ptr();
  for (std::size_t i = 0; i < da[0]; ++i)
    for (std::size_t j = 0; j < da[1]; ++j)
      for (std::size_t k = 0; k < da[2]; ++k) {
        const std::size_t ia = (i * da[1] + j) * da[2] + k;
        y[ia] = A[ia] * Bv[i * s0 + j * s1 + k * s2];
      }
  return make_op<T>(std::move(y), {a, b}, [=](Node<T>& self) {
    Node<T>* na = parent(self, 0);
    Node<T>* nb = parent(self, 1);
    const T* Av = self.parents[0]->value.ptr();
    const T* Bw = self.parents[1]->value.ptr();
    for (std::size_t i = 0; i < da[0]; ++i)
      for (std::size_t j = 0; j < da[1]; ++j)
        for (std::size_t k = 0; k < da[2]; ++k) {
          const std::size_t ia = (i * da[1] + j) * da[2] + k;
          const std::size_t ib = i * s0 + j * s1 + k * s2;
          const T g = self.grad[ia];
          if (na) na->grad[ia] += g * Bw[ib];
          if (nb) nb->grad[ib] += g * Av[ia];
        }
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, double factor) {
  const T f = static_cast<T>(factor);
  Tensor<T> y = x.value();
  for (auto& v : y.storage()) v *= f;
  return make_op<T>(std::move(y), {x}, [f](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) nx->grad[i] += f * self.grad[i];
  });
}

namespace {
struct AxisSplit {
  std::size_t outer, n, inner;
};
AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw std::invalid_argument(std::string(op) + ": axis out of range for " + shape_str(s));
  }
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}
}  // namespace

template <typename T>
Var<T> mean_axis(const Var<T>& x, std::size_t axis) {
  const auto sp = split_axis(x.shape(), axis, "mean_axis");
  Shape out = x.shape();
  out[axis] = 1;
  Tensor<T> y(out);
  const T* X = x.value().ptr();
  const T inv_n = T{1} / static_cast<T>(sp.n);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      T acc{0};
      for (std::size_t a = 0; a < sp.n; ++a) acc += X[(o * sp.n + a) * sp.inner + i];
      y[o * sp.inner + i] = acc * inv_n;
    }
  return make_op<T>(std::move(y), {x}, [=](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const T g = self.grad[o * sp.inner + i] * inv_n;
        for (std::size_t a = 0; a < sp.n; ++a) nx->grad[(o * sp.n + a) * sp.inner + i] += g;
      }
  });
}

template <typename T>
Var<T> max_axis(const Var<T>& x, std::size_t axis) {
  const auto sp = split_axis(x.shape(), axis, "max_axis");
  Shape out = x.shape();
  out[axis] = 1;
  Tensor<T> y(out);
  std::vector<std::uint32_t> arg(sp.outer * sp.inner);
  const T* X = x.value().ptr();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < sp.n; ++a)
        if (X[(o * sp.n + a) * sp.inner + i] > X[(o * sp.n + best) * sp.inner + i]) best = a;
      y[o * sp.inner + i] = X[(o * sp.n + best) * sp.inner + i];
      arg[o * sp.inner + i] = static_cast<std::uint32_t>(best);
    }
  return make_op<T>(std::move(y), {x}, [=, arg = std::move(arg)](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t i = 0; i < sp.inner; ++i)
        nx->grad[(o * sp.n + arg[o * sp.inner + i]) * sp.inner + i] += self.grad[o * sp.inner + i];
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs, std::size_t axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& s0 = xs.front().shape();
  const auto base = split_axis(s0, axis, "concat");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& v : xs) {
    const auto sp = split_axis(v.shape(), axis, "concat");
    if (v.shape().size() != s0.size() || sp.outer != base.outer || sp.inner != base.inner) {
      throw std::invalid_argument("concat: incompatible shapes " + shape_str(s0) + " and " +
                                  shape_str(v.shape()));
    }
    widths.push_back(sp.n);
    total += sp.n;
  }
  Shape out = s0;
  out[axis] = total;
  Tensor<T> y(out);
  const std::size_t inner = base.inner;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const T* X = xs[k].value().ptr();
    for (std::size_t o = 0; o < base.outer; ++o)
      std::copy(X + o * widths[k] * inner, X + (o + 1) * widths[k] * inner,
                y.ptr() + (o * total + offset) * inner);
    offset += widths[k];
  }
  return make_op<T>(std::move(y), xs, [=](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (Node<T>* n = parent(self, k)) {
        for (std::size_t o = 0; o < base.outer; ++o) {
          const T* g = self.grad.ptr() + (o * total + off) * inner;
          T* d = n->grad.ptr() + o * widths[k] * inner;
          for (std::size_t i = 0; i < widths[k] * inner; ++i) d[i] += g[i];
        }
      }
      off += widths[k];
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> y = x.value().reshaped(std::move(shape));
  return make_op<T>(std::move(y), {x}, [](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) nx->grad[i] += self.grad[i];
  });
}

template <typename T>
Var<T> transpose12(const Var<T>& x) {
  require_rank(x.shape(), 3, "transpose12");
  const std::size_t A = x.dim(0), Bd = x.dim(1), C = x.dim(2);
  Tensor<T> y({A, C, Bd});
  const T* X = x.value().ptr();
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < Bd; ++b)
      for (std::size_t c = 0; c < C; ++c) y[(a * C + c) * Bd + b] = X[(a * Bd + b) * C + c];
  return make_op<T>(std::move(y), {x}, [=](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < Bd; ++b)
        for (std::size_t c = 0; c < C; ++c)
          nx->grad[(a * Bd + b) * C + c] += self.grad[(a * C + c) * Bd + b];
  });
}

template <typename T>
Var<T> softmax(const Var<T>& x) {
  require_rank(x.shape(), 2, "softmax");
  const std::size_t N = x.dim(0), K = x.dim(1);
  Tensor<T> y(x.shape());
  const T* X = x.value().ptr();
  for (std::size_t n = 0; n < N; ++n) {
    T mx = X[n * K];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, X[n * K + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(static_cast<double>(X[n * K + k] - mx));
    for (std::size_t k = 0; k < K; ++k)
      y[n * K + k] = static_cast<T>(std::exp(static_cast<double>(X[n * K + k] - mx)) / z);
  }
  return make_op<T>(std::move(y), {x}, [=](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t n = 0; n < N; ++n) {
      T dot{0};
      for (std::size_t k = 0; k < K; ++k) dot += self.grad[n * K + k] * self.value[n * K + k];
      for (std::size_t k = 0; k < K; ++k)
        nx->grad[n * K + k] += self.value[n * K + k] * (self.grad[n * K + k] - dot);
    }
  });
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  require_rank(logits.shape(), 2, "softmax_cross_entropy");
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  if (labels.size() != N) throw std::invalid_argument("softmax_cross_entropy: label count");
  if (N == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  const T* X = logits.value().ptr();
  std::vector<T> probs(N * K);
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= K) {
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    }
    double mx = X[n * K];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(X[n * K + k]));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(X[n * K + k] - mx);
    for (std::size_t k = 0; k < K; ++k) probs[n * K + k] = static_cast<T>(std::exp(X[n * K + k] - mx) / z);
    loss += std::log(z) + mx - X[n * K + static_cast<std::size_t>(label)];
  }
  Tensor<T> y({1}, {static_cast<T>(loss / static_cast<double>(N))});
  std::vector<int> lab(labels.begin(), labels.end());
  return make_op<T>(std::move(y), {logits},
                    [=, probs = std::move(probs), lab = std::move(lab)](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    const T g = self.grad[0] / static_cast<T>(N);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k) {
        const T target = static_cast<std::size_t>(lab[n]) == k ? T{1} : T{0};
        nx->grad[n * K + k] += g * (probs[n * K + k] - target);
      }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().data()) acc += v;
  return make_op<T>(Tensor<T>({1}, {static_cast<T>(acc)}), {x}, [](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (auto& g : nx->grad.storage()) g += self.grad[0];
  });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights) {
  if (weights.shape() != x.shape()) throw std::invalid_argument("weighted_sum: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += x.value()[i] * weights[i];
  return make_op<T>(Tensor<T>({1}, {static_cast<T>(acc)}), {x}, [weights](Node<T>& self) {
    Node<T>* nx = parent(self, 0);
    for (std::size_t i = 0; i < weights.size(); ++i) nx->grad[i] += self.grad[0] * weights[i];
  });
}

template <typename T>
Var<T> bilstm(const Var<T>& x, const Var<T>& w_ih_fwd, const Var<T>& w_hh_fwd,
              const Var<T>& b_fwd, const Var<T>& w_ih_bwd, const Var<T>& w_hh_bwd,
              const Var<T>& b_bwd) {
  require_rank(x.shape(), 3, "bilstm");
  const std::size_t B = x.dim(0), Tn = x.dim(1), D = x.dim(2);
  if (Tn == 0) throw std::invalid_argument("bilstm: empty sequence");
  const std::size_t H = w_hh_fwd.dim(1);
  const Var<T>* wih[2] = {&w_ih_fwd, &w_ih_bwd};
  const Var<T>* whh[2] = {&w_hh_fwd, &w_hh_bwd};
  const Var<T>* bias[2] = {&b_fwd, &b_bwd};
  for (int d = 0; d < 2; ++d) {
    if (wih[d]->shape() != Shape{4 * H, D} || whh[d]->shape() != Shape{4 * H, H} ||
        bias[d]->value().size() != 4 * H) {
      throw std::invalid_argument("bilstm: parameter shapes do not match input " +
                                  shape_str(x.shape()) + " and hidden size " + std::to_string(H));
    }
  }

  // Per (direction, batch, step): activated gates [4H], cell state and tanh(cell) [H].
  const std::size_t n_steps = 2 * B * Tn;
  std::vector<T> gates(n_steps * 4 * H), cells(n_steps * H), tcells(n_steps * H);
  Tensor<T> y({B, Tn, 2 * H});
  const T* X = x.value().ptr();
  std::vector<T> h(H), c(H), z(4 * H);
  for (std::size_t d = 0; d < 2; ++d) {
    const T* Wi = wih[d]->value().ptr();
    const T* Wh = whh[d]->value().ptr();
    const T* bb = bias[d]->value().ptr();
    for (std::size_t bi = 0; bi < B; ++bi) {
      std::fill(h.begin(), h.end(), T{0});
      std::fill(c.begin(), c.end(), T{0});
      for (std::size_t step = 0; step < Tn; ++step) {
        const std::size_t t = d == 0 ? step : Tn - 1 - step;
        const T* xt = X + (bi * Tn + t) * D;
        for (std::size_t r = 0; r < 4 * H; ++r) {
          T acc = bb[r];
          for (std::size_t k = 0; k < D; ++k) acc += Wi[r * D + k] * xt[k];
          for (std::size_t k = 0; k < H; ++k) acc += Wh[r * H + k] * h[k];
          z[r] = acc;
        }
        const std::size_t idx = (d * B + bi) * Tn + t;
        T* g = gates.data() + idx * 4 * H;
        for (std::size_t j = 0; j < H; ++j) {
          g[j] = sigmoid_scalar(z[j]);
          g[H + j] = sigmoid_scalar(z[H + j]);
          g[2 * H + j] = std::tanh(z[2 * H + j]);
          g[3 * H + j] = sigmoid_scalar(z[3 * H + j]);
          c[j] = g[H + j] * c[j] + g[j] * g[2 * H + j];
          const T tc = std::tanh(c[j]);
          cells[idx * H + j] = c[j];
          tcells[idx * H + j] = tc;
          h[j] = g[3 * H + j] * tc;
          y[(bi * Tn + t) * 2 * H + d * H + j] = h[j];
        }
      }
    }
  }

  return make_op<T>(
      std::move(y), {x, w_ih_fwd, w_hh_fwd, b_fwd, w_ih_bwd, w_hh_bwd, b_bwd},
      [=, gates = std::move(gates), cells = std::move(cells),
       tcells = std::move(tcells)](Node<T>& self) {
        Node<T>* nx = parent(self, 0);
        const T* Xv = self.parents[0]->value.ptr();
        const T* Yv = self.value.ptr();
        const T* gy = self.grad.ptr();
        std::vector<T> dh(H), dc(H), dz(4 * H), dh_prev(H);
        for (std::size_t d = 0; d < 2; ++d) {
          Node<T>* nwi = parent(self, 1 + 3 * d);
          Node<T>* nwh = parent(self, 2 + 3 * d);
          Node<T>* nb = parent(self, 3 + 3 * d);
          const T* Wi = self.parents[1 + 3 * d]->value.ptr();
          const T* Wh = self.parents[2 + 3 * d]->value.ptr();
          for (std::size_t bi = 0; bi < B; ++bi) {
            std::fill(dh_prev.begin(), dh_prev.end(), T{0});
            std::fill(dc.begin(), dc.end(), T{0});
            for (std::size_t step = Tn; step-- > 0;) {
              const std::size_t t = d == 0 ? step : Tn - 1 - step;
              const std::size_t idx = (d * B + bi) * Tn + t;
              const bool has_prev = step > 0;
              const std::size_t t_prev = d == 0 ? t - 1 : t + 1;
              const std::size_t idx_prev = has_prev ? (d * B + bi) * Tn + t_prev : 0;
              const T* g = gates.data() + idx * 4 * H;
              for (std::size_t j = 0; j < H; ++j) {
                dh[j] = gy[(bi * Tn + t) * 2 * H + d * H + j] + dh_prev[j];
                const T i_g = g[j], f_g = g[H + j], c_g = g[2 * H + j], o_g = g[3 * H + j];
                const T tc = tcells[idx * H + j];
                const T c_prev = has_prev ? cells[idx_prev * H + j] : T{0};
                const T d_o = dh[j] * tc;
                const T d_c = dh[j] * o_g * (T{1} - tc * tc) + dc[j];
                dz[j] = d_c * c_g * i_g * (T{1} - i_g);
                dz[H + j] = d_c * c_prev * f_g * (T{1} - f_g);
                dz[2 * H + j] = d_c * i_g * (T{1} - c_g * c_g);
                dz[3 * H + j] = d_o * o_g * (T{1} - o_g);
                dc[j] = d_c * f_g;
              }
              const T* xt = Xv + (bi * Tn + t) * D;
              const T* hp = has_prev ? Yv + (bi * Tn + t_prev) * 2 * H + d * H : nullptr;
              std::fill(dh_prev.begin(), dh_prev.end(), T{0});
              for (std::size_t r = 0; r < 4 * H; ++r) {
                const T gr = dz[r];
                if (nb) nb->grad[r] += gr;
                if (gr == T{0}) continue;
                if (nwi) {
                  T* dw = nwi->grad.ptr() + r * D;
                  for (std::size_t k = 0; k < D; ++k) dw[k] += gr * xt[k];
                }
                if (nwh && hp) {
                  T* dw = nwh->grad.ptr() + r * H;
                  for (std::size_t k = 0; k < H; ++k) dw[k] += gr * hp[k];
                }
                if (nx) {
                  T* dx = nx->grad.ptr() + (bi * Tn + t) * D;
                  const T* wr = Wi + r * D;
                  for (std::size_t k = 0; k < D; ++k) dx[k] += gr * wr[k];
                }
                const T* wr = Wh + r * H;
                for (std::size_t k = 0; k < H; ++k) dh_prev[k] += gr * wr[k];
              }
            }
          }
        }
      });
}

#define EEGART_INSTANTIATE_OPS(T)                                                                 \
  template Var<T> conv1d<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Conv1dOptions&);   \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                         \
  template Var<T> batch_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, Tensor<T>&,          \
                                Tensor<T>&, bool, double, double);                                \
  template Var<T> relu<T>(const Var<T>&);                                                         \
  template Var<T> sigmoid<T>(const Var<T>&);                                                      \
  template Var<T> tanh<T>(const Var<T>&);                                                         \
  template Var<T> max_pool1d<T>(const Var<T>&, std::size_t);                                      \
  template Var<T> dropout<T>(const Var<T>&, double, bool, Rng*);                                  \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                           \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                           \
  template Var<T> scale<T>(const Var<T>&, double);                                                \
  template Var<T> mean_axis<T>(const Var<T>&, std::size_t);                                       \
  template Var<T> max_axis<T>(const Var<T>&, std::size_t);                                        \
  template Var<T> concat<T>(const std::vector<Var<T>>&, std::size_t);                             \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                               \
  template Var<T> transpose12<T>(const Var<T>&);                                                  \
  template Var<T> softmax<T>(const Var<T>&);                                                      \
  template Var<T> softmax_cross_entropy<T>(const Var<T>&, std::span<const int>);                  \
  template Var<T> sum<T>(const Var<T>&);                                                          \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);                               \
  template Var<T> bilstm<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&,           \
                            const Var<T>&, const Var<T>&, const Var<T>&);

EEGART_INSTANTIATE_OPS(float)
EEGART_INSTANTIATE_OPS(double)

}  // namespace eegart::nn
