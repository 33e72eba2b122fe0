#include "har/nn/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>

namespace har::nn {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

template <typename T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename T>
void require_rank(const char* op, const Var<T>& a, std::size_t rank) {
  if (a.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_string(a.shape()));
  }
}

template <typename T>
Node<T>& parent(Node<T>& self, std::size_t i) {
  return *self.parents[i];
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(out), {a, b},
                        [](Node<T>& self) {
                          for (std::size_t p = 0; p < 2; ++p) {
                            if (parent(self, p).requires_grad) parent(self, p).accumulate(self.grad.values());
                          }
                        },
                        "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result<T>(std::move(out), {a, b},
                        [](Node<T>& self) {
                          if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad.values());
                          if (parent(self, 1).requires_grad) {
                            auto& g = parent(self, 1).ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                          }
                        },
                        "sub");
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(std::move(out), {a, b},
                        [](Node<T>& self) {
                          auto& pa = parent(self, 0);
                          auto& pb = parent(self, 1);
                          if (pa.requires_grad) {
                            auto& g = pa.ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
                          }
                          if (pb.requires_grad) {
                            auto& g = pb.ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
                          }
                        },
                        "mul");
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  return make_result<T>(std::move(out), {a},
                        [s](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
                        },
                        "scale");
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + s;
  return make_result<T>(std::move(out), {a},
                        [](Node<T>& self) { parent(self, 0).accumulate(self.grad.values()); }, "add_scalar");
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] > T{0} ? a.value()[i] : T{0};
  return make_result<T>(std::move(out), {a},
                        [](Node<T>& self) {
                          auto& p = parent(self, 0);
                          auto& g = p.ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (p.value[i] > T{0}) g[i] += self.grad[i];
                          }
                        },
                        "relu");
}

template <typename T>
Var<T> square(const Var<T>& a) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * a.value()[i];
  return make_result<T>(std::move(out), {a},
                        [](Node<T>& self) {
                          auto& p = parent(self, 0);
                          auto& g = p.ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += T{2} * p.value[i] * self.grad[i];
                        },
                        "square");
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  double acc = 0.0;
  for (T v : a.value().values()) acc += static_cast<double>(v);
  return make_result<T>(Tensor<T>::scalar(static_cast<T>(acc)), {a},
                        [](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          const T s = self.grad[0];
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += s;
                        },
                        "sum");
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  double acc = 0.0;
  for (T v : a.value().values()) acc += static_cast<double>(v);
  const std::size_t n = a.size();
  return make_result<T>(Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n))), {a},
                        [n](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          const T s = self.grad[0] / static_cast<T>(n);
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += s;
                        },
                        "mean");
}

template <typename T>
Var<T> row_sum(const Var<T>& a) {
  require_rank("row_sum", a, 2);
  const std::size_t n = a.shape()[0], d = a.shape()[1];
  Tensor<T> out(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += static_cast<double>(a.value()[i * d + j]);
    out[i] = static_cast<T>(acc);
  }
  return make_result<T>(std::move(out), {a},
                        [n, d](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[i];
                          }
                        },
                        "row_sum");
}

template <typename T>
Var<T> row_l2_norm(const Var<T>& a) {
  require_rank("row_l2_norm", a, 2);
  const std::size_t n = a.shape()[0], d = a.shape()[1];
  Tensor<T> out(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = a.value()[i * d + j];
      acc += v * v;
    }
    out[i] = static_cast<T>(std::sqrt(acc));
  }
  return make_result<T>(std::move(out), {a},
                        [n, d](Node<T>& self) {
                          auto& p = parent(self, 0);
                          auto& g = p.ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            const T norm = self.value[i];
                            if (norm == T{0}) continue;
                            const T s = self.grad[i] / norm;
                            for (std::size_t j = 0; j < d; ++j) g[i * d + j] += s * p.value[i * d + j];
                          }
                        },
                        "row_l2_norm");
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dims differ " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor<T> out(Shape{n, m});
  // Row by row through aligned scratch: a batched GEMM rounds differently
  // depending on where a row falls in its register blocks, and each row's
  // result must not depend on its batch neighbours.
  CMapRM<T> bm(b.value().data(), k, m);
  Eigen::Matrix<T, 1, Eigen::Dynamic> xr(k), yr(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(a.value().data() + i * k, a.value().data() + (i + 1) * k, xr.data());
    yr.noalias() = xr * bm;
    std::copy(yr.data(), yr.data() + m, out.data() + i * m);
  }
  return make_result<T>(std::move(out), {a, b},
                        [n, k, m](Node<T>& self) {
                          auto& pa = parent(self, 0);
                          auto& pb = parent(self, 1);
                          CMapRM<T> dc(self.grad.data(), n, m);
                          if (pa.requires_grad) {
                            MapRM<T>(pa.ensure_grad().data(), n, k).noalias() +=
                                dc * CMapRM<T>(pb.value.data(), k, m).transpose();
                          }
                          if (pb.requires_grad) {
                            MapRM<T>(pb.ensure_grad().data(), k, m).noalias() +=
                                CMapRM<T>(pa.value.data(), n, k).transpose() * dc;
                          }
                        },
                        "matmul");
}

template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
  require_rank("add_bias", x, 2);
  const std::size_t n = x.shape()[0], m = x.shape()[1];
  if (bias.size() != m) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " does not match " + shape_string(x.shape()));
  }
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = x.value()[i * m + j] + bias.value()[j];
  }
  return make_result<T>(std::move(out), {x, bias},
                        [n, m](Node<T>& self) {
                          if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad.values());
                          if (parent(self, 1).requires_grad) {
                            auto& g = parent(self, 1).ensure_grad();
                            for (std::size_t i = 0; i < n; ++i) {
                              for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
                            }
                          }
                        },
                        "add_bias");
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return make_result<T>(std::move(out), {a},
                        [](Node<T>& self) { parent(self, 0).accumulate(self.grad.values()); }, "reshape");
}

template <typename T>
Var<T> concat_rows(const Var<T>& a, const Var<T>& b) {
  if (a.shape().empty() || b.shape().empty() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1, b.shape().end())) {
    throw ShapeError("concat_rows: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  Shape s = a.shape();
  s[0] += b.shape()[0];
  Tensor<T> out(s);
  std::copy(a.value().values().begin(), a.value().values().end(), out.data());
  std::copy(b.value().values().begin(), b.value().values().end(), out.data() + a.size());
  const std::size_t na = a.size();
  return make_result<T>(std::move(out), {a, b},
                        [na](Node<T>& self) {
                          auto g = self.grad.values();
                          if (parent(self, 0).requires_grad) parent(self, 0).accumulate(g.subspan(0, na));
                          if (parent(self, 1).requires_grad) parent(self, 1).accumulate(g.subspan(na));
                        },
                        "concat_rows");
}

template <typename T>
Var<T> slice_rows(const Var<T>& a, std::size_t begin, std::size_t end) {
  if (a.shape().empty() || begin > end || end > a.shape()[0]) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for shape " + shape_string(a.shape()));
  }
  Shape s = a.shape();
  s[0] = end - begin;
  const std::size_t row = a.shape()[0] ? a.size() / a.shape()[0] : 0;
  Tensor<T> out(s);
  std::copy(a.value().data() + begin * row, a.value().data() + end * row, out.data());
  const std::size_t offset = begin * row;
  return make_result<T>(std::move(out), {a},
                        [offset](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
                        },
                        "slice_rows");
}

template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, Conv1dGeometry geom) {
  require_rank("conv1d", x, 3);
  require_rank("conv1d", weight, 3);
  const std::size_t n = x.shape()[0], c = x.shape()[1], len = x.shape()[2];
  const std::size_t f = weight.shape()[0], k = weight.shape()[2];
  if (weight.shape()[1] != c) {
    throw ShapeError("conv1d: input " + shape_string(x.shape()) + " has " + std::to_string(c) +
                     " channels but weight " + shape_string(weight.shape()) + " expects " +
                     std::to_string(weight.shape()[1]));
  }
  if (bias.size() != f) throw ShapeError("conv1d: bias " + shape_string(bias.shape()) + " vs filters " + std::to_string(f));
  if (geom.dilation == 0) throw ShapeError("conv1d: dilation must be >= 1");
  const std::size_t span = geom.dilation * (k - 1);
  if (len + geom.pad_left + geom.pad_right < span + 1) {
    throw ShapeError("conv1d: input " + shape_string(x.shape()) + " shorter than receptive field " +
                     std::to_string(span + 1));
  }
  const std::size_t lout = len + geom.pad_left + geom.pad_right - span;
  const std::size_t ck = c * k, cols = n * lout;

  // col[(ci*K + kk), b*lout + t] = x[b, ci, t + kk*d - pad_left]
  Tensor<T> col(Shape{ck, cols});
  const T* xv = x.value().data();
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      T* dst = col.data() + (ci * k + kk) * cols;
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kk * geom.dilation) -
                                   static_cast<std::ptrdiff_t>(geom.pad_left);
      for (std::size_t b = 0; b < n; ++b) {
        const T* src = xv + (b * c + ci) * len;
        for (std::size_t t = 0; t < lout; ++t) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) + shift;
          dst[b * lout + t] = (s >= 0 && s < static_cast<std::ptrdiff_t>(len)) ? src[s] : T{0};
        }
      }
    }
  }
  // One product per sample (see matmul) on an aligned copy of its columns.
  CMapRM<T> wm(weight.value().data(), f, ck);
  MatRM<T> colb(ck, lout), prod(f, lout);
  Tensor<T> out(Shape{n, f, lout});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t r = 0; r < ck; ++r) {
      std::copy(col.data() + r * cols + b * lout, col.data() + r * cols + (b + 1) * lout, colb.data() + r * lout);
    }
    prod.noalias() = wm * colb;
    for (std::size_t fi = 0; fi < f; ++fi) {
      const T bv = bias.value()[fi];
      T* dst = out.data() + (b * f + fi) * lout;
      const T* src = prod.data() + fi * lout;
      for (std::size_t t = 0; t < lout; ++t) dst[t] = src[t] + bv;
    }
  }

  return make_result<T>(
      std::move(out), {x, weight, bias},
      [col = std::move(col), n, c, len, f, k, lout, ck, cols, geom](Node<T>& self) {
        MatRM<T> dmat(f, cols);
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t fi = 0; fi < f; ++fi) {
            const T* src = self.grad.data() + (b * f + fi) * lout;
            std::copy(src, src + lout, dmat.data() + fi * cols + b * lout);
          }
        }
        auto& px = parent(self, 0);
        auto& pw = parent(self, 1);
        auto& pb = parent(self, 2);
        if (pw.requires_grad) {
          MapRM<T>(pw.ensure_grad().data(), f, ck).noalias() += dmat * CMapRM<T>(col.data(), ck, cols).transpose();
        }
        if (pb.requires_grad) {
          auto& g = pb.ensure_grad();
          for (std::size_t fi = 0; fi < f; ++fi) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += dmat(fi, j);
            g[fi] += static_cast<T>(acc);
          }
        }
        if (px.requires_grad) {
          MatRM<T> dcol = CMapRM<T>(pw.value.data(), f, ck).transpose() * dmat;
          auto& g = px.ensure_grad();
          for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t kk = 0; kk < k; ++kk) {
              const T* src = dcol.data() + (ci * k + kk) * cols;
              const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kk * geom.dilation) -
                                           static_cast<std::ptrdiff_t>(geom.pad_left);
              for (std::size_t b = 0; b < n; ++b) {
                T* dst = g.data() + (b * c + ci) * len;
                for (std::size_t t = 0; t < lout; ++t) {
                  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) + shift;
                  if (s >= 0 && s < static_cast<std::ptrdiff_t>(len)) dst[s] += src[b * lout + t];
                }
              }
            }
          }
        }
      },
      "conv1d");
}

namespace {

struct BnLayout {
  std::size_t n, d, l;
};

template <typename T>
BnLayout bn_layout(const char* op, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const auto& s = x.shape();
  if (s.size() != 2 && s.size() != 3) {
    throw ShapeError(std::string(op) + ": expected [N,D] or [N,D,L], got " + shape_string(s));
  }
  BnLayout lay{s[0], s[1], s.size() == 3 ? s[2] : 1};
  if (gamma.size() != lay.d || beta.size() != lay.d) {
    throw ShapeError(std::string(op) + ": affine params " + shape_string(gamma.shape()) + " do not match input " +
                     shape_string(s));
  }
  return lay;
}

}  // namespace

template <typename T>
Var<T> batch_norm_train(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps,
                        std::vector<double>* batch_mean, std::vector<double>* batch_var) {
  const BnLayout lay = bn_layout("batch_norm", x, gamma, beta);
  const std::size_t count = lay.n * lay.l;
  if (count == 0) throw ShapeError("batch_norm: empty batch");
  std::vector<double> mu(lay.d, 0.0), var(lay.d, 0.0);
  const T* xv = x.value().data();
  for (std::size_t b = 0; b < lay.n; ++b) {
    for (std::size_t j = 0; j < lay.d; ++j) {
      const T* row = xv + (b * lay.d + j) * lay.l;
      for (std::size_t t = 0; t < lay.l; ++t) mu[j] += row[t];
    }
  }
  for (auto& m : mu) m /= static_cast<double>(count);
  for (std::size_t b = 0; b < lay.n; ++b) {
    for (std::size_t j = 0; j < lay.d; ++j) {
      const T* row = xv + (b * lay.d + j) * lay.l;
      for (std::size_t t = 0; t < lay.l; ++t) {
        const double dv = row[t] - mu[j];
        var[j] += dv * dv;
      }
    }
  }
  for (auto& v : var) v /= static_cast<double>(count);

  std::vector<T> inv_std(lay.d);
  for (std::size_t j = 0; j < lay.d; ++j) inv_std[j] = static_cast<T>(1.0 / std::sqrt(var[j] + eps));
  Tensor<T> xhat(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t b = 0; b < lay.n; ++b) {
    for (std::size_t j = 0; j < lay.d; ++j) {
      const std::size_t base = (b * lay.d + j) * lay.l;
      const T m = static_cast<T>(mu[j]);
      for (std::size_t t = 0; t < lay.l; ++t) {
        const T h = (xv[base + t] - m) * inv_std[j];
        xhat[base + t] = h;
        out[base + t] = gamma.value()[j] * h + beta.value()[j];
      }
    }
  }
  if (batch_mean) *batch_mean = mu;
  if (batch_var) *batch_var = var;

  return make_result<T>(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), lay, count](Node<T>& self) {
        auto& px = parent(self, 0);
        auto& pg = parent(self, 1);
        auto& pbeta = parent(self, 2);
        std::vector<double> sum_dy(lay.d, 0.0), sum_dy_xhat(lay.d, 0.0);
        for (std::size_t b = 0; b < lay.n; ++b) {
          for (std::size_t j = 0; j < lay.d; ++j) {
            const std::size_t base = (b * lay.d + j) * lay.l;
            for (std::size_t t = 0; t < lay.l; ++t) {
              sum_dy[j] += self.grad[base + t];
              sum_dy_xhat[j] += static_cast<double>(self.grad[base + t]) * xhat[base + t];
            }
          }
        }
        if (pg.requires_grad) {
          auto& g = pg.ensure_grad();
          for (std::size_t j = 0; j < lay.d; ++j) g[j] += static_cast<T>(sum_dy_xhat[j]);
        }
        if (pbeta.requires_grad) {
          auto& g = pbeta.ensure_grad();
          for (std::size_t j = 0; j < lay.d; ++j) g[j] += static_cast<T>(sum_dy[j]);
        }
        if (px.requires_grad) {
          auto& g = px.ensure_grad();
          const double inv_count = 1.0 / static_cast<double>(count);
          for (std::size_t j = 0; j < lay.d; ++j) {
            const double gam = pg.value[j];
            // dxhat = dy * gamma, so the sums scale by gamma as well.
            const double s1 = sum_dy[j] * gam;
            const double s2 = sum_dy_xhat[j] * gam;
            const double k = inv_std[j];
            for (std::size_t b = 0; b < lay.n; ++b) {
              const std::size_t base = (b * lay.d + j) * lay.l;
              for (std::size_t t = 0; t < lay.l; ++t) {
                const double dxh = self.grad[base + t] * gam;
                g[base + t] += static_cast<T>(k * (dxh - inv_count * s1 - xhat[base + t] * inv_count * s2));
              }
            }
          }
        }
      },
      "batch_norm");
}

template <typename T>
Var<T> batch_norm_eval(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, const Tensor<T>& running_mean,
                       const Tensor<T>& running_var, T eps) {
  const BnLayout lay = bn_layout("batch_norm_eval", x, gamma, beta);
  std::vector<T> inv_std(lay.d);
  for (std::size_t j = 0; j < lay.d; ++j) {
    inv_std[j] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[j]) + eps));
  }
  Tensor<T> xhat(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t b = 0; b < lay.n; ++b) {
    for (std::size_t j = 0; j < lay.d; ++j) {
      const std::size_t base = (b * lay.d + j) * lay.l;
      for (std::size_t t = 0; t < lay.l; ++t) {
        const T h = (x.value()[base + t] - running_mean[j]) * inv_std[j];
        xhat[base + t] = h;
        out[base + t] = gamma.value()[j] * h + beta.value()[j];
      }
    }
  }
  return make_result<T>(std::move(out), {x, gamma, beta},
                        [xhat = std::move(xhat), inv_std = std::move(inv_std), lay](Node<T>& self) {
                          auto& px = parent(self, 0);
                          auto& pg = parent(self, 1);
                          auto& pbeta = parent(self, 2);
                          for (std::size_t b = 0; b < lay.n; ++b) {
                            for (std::size_t j = 0; j < lay.d; ++j) {
                              const std::size_t base = (b * lay.d + j) * lay.l;
                              for (std::size_t t = 0; t < lay.l; ++t) {
                                const T dy = self.grad[base + t];
                                if (px.requires_grad) px.ensure_grad()[base + t] += dy * pg.value[j] * inv_std[j];
                                if (pg.requires_grad) pg.ensure_grad()[j] += dy * xhat[base + t];
                                if (pbeta.requires_grad) pbeta.ensure_grad()[j] += dy;
                              }
                            }
                          }
                        },
                        "batch_norm_eval");
}

template <typename T>
Var<T> dropout(const Var<T>& x, T rate, std::mt19937_64& rng) {
  if (!(rate >= T{0} && rate < T{1})) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (rate == T{0}) return x;
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  const T inv_keep = T{1} / (T{1} - rate);
  Tensor<T> mask(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = keep(rng) ? inv_keep : T{0};
    out[i] = x.value()[i] * mask[i];
  }
  return make_result<T>(std::move(out), {x},
                        [mask = std::move(mask)](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
                        },
                        "dropout");
}

template <typename T>
Var<T> max_pool1d(const Var<T>& x, std::size_t width, std::size_t stride) {
  require_rank("max_pool1d", x, 3);
  if (width == 0 || stride == 0) throw ShapeError("max_pool1d: width and stride must be >= 1");
  const std::size_t n = x.shape()[0], c = x.shape()[1], len = x.shape()[2];
  if (len < width) {
    throw ShapeError("max_pool1d: input " + shape_string(x.shape()) + " shorter than pool width " +
                     std::to_string(width));
  }
  const std::size_t lout = (len - width) / stride + 1;
  Tensor<T> out(Shape{n, c, lout});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t row = 0; row < n * c; ++row) {
    const T* src = x.value().data() + row * len;
    for (std::size_t t = 0; t < lout; ++t) {
      std::size_t best = t * stride;
      for (std::size_t w = 1; w < width; ++w) {
        if (src[t * stride + w] > src[best]) best = t * stride + w;
      }
      out[row * lout + t] = src[best];
      argmax[row * lout + t] = row * len + best;
    }
  }
  return make_result<T>(std::move(out), {x},
                        [argmax = std::move(argmax)](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += self.grad[i];
                        },
                        "max_pool1d");
}

template <typename T>
Var<T> global_max_pool(const Var<T>& x) {
  require_rank("global_max_pool", x, 3);
  const std::size_t n = x.shape()[0], c = x.shape()[1], len = x.shape()[2];
  if (len == 0) throw ShapeError("global_max_pool: zero-length input " + shape_string(x.shape()));
  Tensor<T> out(Shape{n, c});
  std::vector<std::size_t> argmax(n * c);
  for (std::size_t row = 0; row < n * c; ++row) {
    const T* src = x.value().data() + row * len;
    std::size_t best = 0;
    for (std::size_t t = 1; t < len; ++t) {
      if (src[t] > src[best]) best = t;
    }
    out[row] = src[best];
    argmax[row] = row * len + best;
  }
  return make_result<T>(std::move(out), {x},
                        [argmax = std::move(argmax)](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += self.grad[i];
                        },
                        "global_max_pool");
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  require_rank("softmax_cross_entropy", logits, 2);
  const std::size_t n = logits.shape()[0], m = logits.shape()[1];
  if (labels.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                     shape_string(logits.shape()));
  }
  if (n == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  Tensor<T> probs(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= m) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(m) + ")");
    }
    const T* z = logits.value().data() + i * m;
    double zmax = z[0];
    for (std::size_t j = 1; j < m; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
    double se = 0.0;
    for (std::size_t j = 0; j < m; ++j) se += std::exp(z[j] - zmax);
    const double lse = zmax + std::log(se);
    total += lse - z[labels[i]];
    for (std::size_t j = 0; j < m; ++j) probs[i * m + j] = static_cast<T>(std::exp(z[j] - lse));
  }
  std::vector<int> lab(labels.begin(), labels.end());
  return make_result<T>(Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(n))), {logits},
                        [probs = std::move(probs), lab = std::move(lab), n, m](Node<T>& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          const T s = self.grad[0] / static_cast<T>(n);
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < m; ++j) {
                              const T onehot = static_cast<int>(j) == lab[i] ? T{1} : T{0};
                              g[i * m + j] += s * (probs[i * m + j] - onehot);
                            }
                          }
                        },
                        "softmax_cross_entropy");
}

#define HAR_INSTANTIATE_OPS(T)                                                                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                        \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                                        \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                        \
  template Var<T> scale(const Var<T>&, T);                                                                  \
  template Var<T> add_scalar(const Var<T>&, T);                                                             \
  template Var<T> relu(const Var<T>&);                                                                      \
  template Var<T> square(const Var<T>&);                                                                    \
  template Var<T> sum(const Var<T>&);                                                                       \
  template Var<T> mean(const Var<T>&);                                                                      \
  template Var<T> row_sum(const Var<T>&);                                                                   \
  template Var<T> row_l2_norm(const Var<T>&);                                                               \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                                     \
  template Var<T> add_bias(const Var<T>&, const Var<T>&);                                                   \
  template Var<T> reshape(const Var<T>&, Shape);                                                            \
  template Var<T> concat_rows(const Var<T>&, const Var<T>&);                                                \
  template Var<T> slice_rows(const Var<T>&, std::size_t, std::size_t);                                     \
  template Var<T> conv1d(const Var<T>&, const Var<T>&, const Var<T>&, Conv1dGeometry);                      \
  template Var<T> batch_norm_train(const Var<T>&, const Var<T>&, const Var<T>&, T, std::vector<double>*,    \
                                   std::vector<double>*);                                                   \
  template Var<T> batch_norm_eval(const Var<T>&, const Var<T>&, const Var<T>&, const Tensor<T>&,            \
                                  const Tensor<T>&, T);                                                     \
  template Var<T> dropout(const Var<T>&, T, std::mt19937_64&);                                              \
  template Var<T> max_pool1d(const Var<T>&, std::size_t, std::size_t);                                      \
  template Var<T> global_max_pool(const Var<T>&);                                                           \
  template Var<T> softmax_cross_entropy(const Var<T>&, std::span<const int>);

HAR_INSTANTIATE_OPS(float)
HAR_INSTANTIATE_OPS(double)

#undef HAR_INSTANTIATE_OPS

}  // namespace har::nn
