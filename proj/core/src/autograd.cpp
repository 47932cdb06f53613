// Copyright (C) 2026 the amodalseg authors
// SPDX-License-Identifier: Apache-2.0
//
#include "amodal/autograd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace amodal {

Mask Tensor::channel_as_mask(int c) const {
  Mask m(dims[1], dims[2]);
  const size_t off = static_cast<size_t>(c) * dims[1] * dims[2];
  std::copy(data.begin() + off, data.begin() + off + dims[1] * dims[2],
            m.data().begin());
  return m;
}

Tensor Tensor::from_mask(const Mask& m) {
  Tensor t(1, m.height(), m.width());
  t.data = m.data();
  return t;
}

namespace nn {

namespace {

thread_local bool g_grad_enabled = true;

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using CMapRowMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

std::shared_ptr<Node> make_node(Tensor value,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool req = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) req = req || p->requires_grad;
  }
  n->requires_grad = req;
  if (req) n->parents = std::move(parents);
  return n;
}

void check_same_dims(const Var& a, const Var& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": dimension mismatch");
  }
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

Var Var::leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Var(n);
}

Var add(const Var& a, const Var& b) {
  check_same_dims(a, b, "add");
  Tensor out = a.value();
  for (int i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
  auto n = make_node(std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i)
          pa->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i)
          pb->grad[i] += self->grad[i];
      }
    };
  }
  return Var(n);
}

Var sub(const Var& a, const Var& b) {
  check_same_dims(a, b, "sub");
  Tensor out = a.value();
  for (int i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
  auto n = make_node(std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i)
          pa->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i)
          pb->grad[i] -= self->grad[i];
      }
    };
  }
  return Var(n);
}

Var mul(const Var& a, const Var& b) {
  check_same_dims(a, b, "mul");
  Tensor out = a.value();
  for (int i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
  auto n = make_node(std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i)
          pa->grad[i] += self->grad[i] * pb->value.data[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i)
          pb->grad[i] += self->grad[i] * pa->value.data[i];
      }
    };
  }
  return Var(n);
}

Var scale(const Var& a, double k) {
  Tensor out = a.value();
  for (double& v : out.data) v *= k;
  auto n = make_node(std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, k] {
      pa->ensure_grad();
      for (size_t i = 0; i < self->grad.size(); ++i)
        pa->grad[i] += k * self->grad[i];
    };
  }
  return Var(n);
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  auto n = make_node(std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
      pa->ensure_grad();
      for (size_t i = 0; i < self->grad.size(); ++i) {
        if (pa->value.data[i] > 0.0) pa->grad[i] += self->grad[i];
      }
    };
  }
  return Var(n);
}

Var sigmoid(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  auto n = make_node(std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
      pa->ensure_grad();
      for (size_t i = 0; i < self->grad.size(); ++i) {
        const double s = self->value.data[i];
        pa->grad[i] += self->grad[i] * s * (1.0 - s);
      }
    };
  }
  return Var(n);
}

Var mul_mask(const Var& f, const Var& m) {
  if (m.dims()[0] != 1 || m.dims()[1] != f.dims()[1] ||
      m.dims()[2] != f.dims()[2]) {
    throw ShapeError("mul_mask: mask must be (1,H,W) matching the feature");
  }
  const int c = f.dims()[0];
  const int hw = f.dims()[1] * f.dims()[2];
  Tensor out = f.value();
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < hw; ++i)
      out.data[static_cast<size_t>(ch) * hw + i] *= m.value().data[i];
  }
  auto n = make_node(std::move(out), {f.node(), m.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pf = f.node().get();
    Node* pm = m.node().get();
    n->backward = [self, pf, pm, c, hw] {
      if (pf->requires_grad) {
        pf->ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
          for (int i = 0; i < hw; ++i) {
            const size_t k = static_cast<size_t>(ch) * hw + i;
            pf->grad[k] += self->grad[k] * pm->value.data[i];
          }
        }
      }
      if (pm->requires_grad) {
        pm->ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
          for (int i = 0; i < hw; ++i) {
            const size_t k = static_cast<size_t>(ch) * hw + i;
            pm->grad[i] += self->grad[k] * pf->value.data[k];
          }
        }
      }
    };
  }
  return Var(n);
}

Var concat_channels(const Var& a, const Var& b) {
  if (a.dims()[1] != b.dims()[1] || a.dims()[2] != b.dims()[2]) {
    throw ShapeError("concat_channels: spatial dims mismatch");
  }
  Tensor out(a.dims()[0] + b.dims()[0], a.dims()[1], a.dims()[2]);
  std::copy(a.value().data.begin(), a.value().data.end(), out.data.begin());
  std::copy(b.value().data.begin(), b.value().data.end(),
            out.data.begin() + a.size());
  auto n = make_node(std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    const size_t na = a.size();
    n->backward = [self, pa, pb, na] {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < na; ++i) pa->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = na; i < self->grad.size(); ++i)
          pb->grad[i - na] += self->grad[i];
      }
    };
  }
  return Var(n);
}

Var pad_channels(const Var& a, int extra) {
  if (extra == 0) return a;
  Tensor out(a.dims()[0] + extra, a.dims()[1], a.dims()[2]);
  std::copy(a.value().data.begin(), a.value().data.end(), out.data.begin());
  auto n = make_node(std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    const size_t na = a.size();
    n->backward = [self, pa, na] {
      pa->ensure_grad();
      for (size_t i = 0; i < na; ++i) pa->grad[i] += self->grad[i];
    };
  }
  return Var(n);
}

Var slice(const Var& a, int offset, int len) {
  if (offset < 0 || len < 0 || offset + len > a.size()) {
    throw ShapeError("slice: range out of bounds");
  }
  Tensor out(len, 1, 1);
  std::copy(a.value().data.begin() + offset,
            a.value().data.begin() + offset + len, out.data.begin());
  auto n = make_node(std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, offset, len] {
      pa->ensure_grad();
      for (int i = 0; i < len; ++i) pa->grad[offset + i] += self->grad[i];
    };
  }
  return Var(n);
}

Var reshape(const Var& a, int c, int h, int w) {
  if (c * h * w != a.size()) throw ShapeError("reshape: element count changed");
  Tensor out = a.value();
  out.dims = {c, h, w};
  auto n = make_node(std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
      pa->ensure_grad();
      for (size_t i = 0; i < self->grad.size(); ++i)
        pa->grad[i] += self->grad[i];
    };
  }
  return Var(n);
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const int cin = x.dims()[0];
  const int h = x.dims()[1];
  const int wd = x.dims()[2];
  const int cout = w.dims()[0];
  if (w.dims()[1] % cin != 0) throw ShapeError("conv2d: weight/input mismatch");
  const int k2 = w.dims()[1] / cin;
  const int k = static_cast<int>(std::lround(std::sqrt(double(k2))));
  if (k * k != k2) throw ShapeError("conv2d: kernel must be square");
  if (b.size() != cout) throw ShapeError("conv2d: bias size mismatch");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  const int npix = oh * ow;

  // im2col: one column per output pixel, rows ordered (cin, ky, kx).
  auto cols = std::make_shared<Eigen::MatrixXd>(cin * k2, npix);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const int col = oy * ow + ox;
      double* dst = cols->col(col).data();
      for (int c = 0; c < cin; ++c) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - pad + kx;
            *dst++ = (iy >= 0 && iy < h && ix >= 0 && ix < wd)
                         ? x.value().at(c, iy, ix)
                         : 0.0;
          }
        }
      }
    }
  }

  Tensor out(cout, oh, ow);
  {
    CMapRowMat wm(w.value().data.data(), cout, cin * k2);
    MapRowMat ym(out.data.data(), cout, npix);
    ym.noalias() = wm * (*cols);
    for (int c = 0; c < cout; ++c) ym.row(c).array() += b.value().data[c];
  }

  auto n = make_node(std::move(out), {x.node(), w.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* px = x.node().get();
    Node* pw = w.node().get();
    Node* pb = b.node().get();
    n->backward = [self, px, pw, pb, cols, cin, h, wd, cout, k, k2, stride,
                   pad, oh, ow, npix] {
      CMapRowMat dy(self->grad.data(), cout, npix);
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int c = 0; c < cout; ++c) pb->grad[c] += dy.row(c).sum();
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
        MapRowMat dw(pw->grad.data(), cout, cin * k2);
        dw.noalias() += dy * cols->transpose();
      }
      if (px->requires_grad) {
        px->ensure_grad();
        CMapRowMat wm(pw->value.data.data(), cout, cin * k2);
        Eigen::MatrixXd dcols = wm.transpose() * dy;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const int col = oy * ow + ox;
            const double* src = dcols.col(col).data();
            for (int c = 0; c < cin; ++c) {
              for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * stride - pad + ky;
                for (int kx = 0; kx < k; ++kx) {
                  const int ix = ox * stride - pad + kx;
                  const double g = *src++;
                  if (iy >= 0 && iy < h && ix >= 0 && ix < wd) {
                    px->grad[(static_cast<size_t>(c) * h + iy) * wd + ix] += g;
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return Var(n);
}

Var deconv2x2(const Var& x, const Var& w, const Var& b) {
  const int cin = x.dims()[0];
  const int h = x.dims()[1];
  const int wd = x.dims()[2];
  if (w.dims()[0] != cin || w.dims()[1] % 4 != 0) {
    throw ShapeError("deconv2x2: weight shape mismatch");
  }
  const int cout = w.dims()[1] / 4;
  if (b.size() != cout) throw ShapeError("deconv2x2: bias size mismatch");
  const int npix = h * wd;

  // y4 rows are (cout, dy, dx) sub-grids; kernel 2 stride 2 means the four
  // sub-grids tile the 2x upsampled output without overlap.
  Eigen::MatrixXd y4(cout * 4, npix);
  {
    CMapRowMat wm(w.value().data.data(), cin, cout * 4);
    CMapRowMat xm(x.value().data.data(), cin, npix);
    y4.noalias() = wm.transpose() * xm;
  }
  Tensor out(cout, 2 * h, 2 * wd);
  for (int co = 0; co < cout; ++co) {
    const double bias = b.value().data[co];
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const int row = (co * 2 + dy) * 2 + dx;
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < wd; ++xx) {
            out.at(co, 2 * y + dy, 2 * xx + dx) =
                y4(row, y * wd + xx) + bias;
          }
        }
      }
    }
  }

  auto n = make_node(std::move(out), {x.node(), w.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* px = x.node().get();
    Node* pw = w.node().get();
    Node* pb = b.node().get();
    n->backward = [self, px, pw, pb, cin, h, wd, cout, npix] {
      Eigen::MatrixXd dy4(cout * 4, npix);
      const Tensor& g = self->value;  // dims only
      for (int co = 0; co < cout; ++co) {
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int row = (co * 2 + dy) * 2 + dx;
            for (int y = 0; y < h; ++y) {
              for (int xx = 0; xx < wd; ++xx) {
                dy4(row, y * wd + xx) =
                    self->grad[(static_cast<size_t>(co) * g.dims[1] +
                                (2 * y + dy)) *
                                   g.dims[2] +
                               (2 * xx + dx)];
              }
            }
          }
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int co = 0; co < cout; ++co) {
          pb->grad[co] += dy4.middleRows(co * 4, 4).sum();
        }
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
        CMapRowMat xm(px->value.data.data(), cin, npix);
        MapRowMat dw(pw->grad.data(), cin, cout * 4);
        dw.noalias() += xm * dy4.transpose();
      }
      if (px->requires_grad) {
        px->ensure_grad();
        CMapRowMat wm(pw->value.data.data(), cin, cout * 4);
        MapRowMat dx(px->grad.data(), cin, npix);
        dx.noalias() += wm * dy4;
      }
    };
  }
  return Var(n);
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const int in = x.size();
  const int out_n = w.dims()[0];
  if (w.dims()[1] != in || b.size() != out_n) {
    throw ShapeError("linear: weight shape mismatch");
  }
  Tensor out(out_n, 1, 1);
  {
    CMapRowMat wm(w.value().data.data(), out_n, in);
    CMapVec xv(x.value().data.data(), in);
    MapVec yv(out.data.data(), out_n);
    CMapVec bv(b.value().data.data(), out_n);
    yv.noalias() = wm * xv + bv;
  }
  auto n = make_node(std::move(out), {x.node(), w.node(), b.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* px = x.node().get();
    Node* pw = w.node().get();
    Node* pb = b.node().get();
    n->backward = [self, px, pw, pb, in, out_n] {
      CMapVec dy(self->grad.data(), out_n);
      if (pb->requires_grad) {
        pb->ensure_grad();
        MapVec db(pb->grad.data(), out_n);
        db += dy;
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
        MapRowMat dw(pw->grad.data(), out_n, in);
        CMapVec xv(px->value.data.data(), in);
        dw.noalias() += dy * xv.transpose();
      }
      if (px->requires_grad) {
        px->ensure_grad();
        CMapRowMat wm(pw->value.data.data(), out_n, in);
        MapVec dx(px->grad.data(), in);
        dx.noalias() += wm.transpose() * dy;
      }
    };
  }
  return Var(n);
}

namespace {

struct LerpAxis {
  std::vector<int> i0, i1;
  std::vector<double> f;
};

LerpAxis corner_aligned_axis(int out_n, int in_n) {
  LerpAxis ax;
  ax.i0.resize(out_n);
  ax.i1.resize(out_n);
  ax.f.resize(out_n);
  for (int i = 0; i < out_n; ++i) {
    double s = (out_n <= 1 || in_n <= 1)
                   ? 0.5 * (in_n - 1)
                   : static_cast<double>(i) * (in_n - 1) / (out_n - 1);
    int lo = std::clamp(static_cast<int>(std::floor(s)), 0, in_n - 1);
    ax.i0[i] = lo;
    ax.i1[i] = std::min(lo + 1, in_n - 1);
    ax.f[i] = std::clamp(s - lo, 0.0, 1.0);
  }
  return ax;
}

}  // namespace

Var bilinear_resize(const Var& x, int out_h, int out_w) {
  const int c = x.dims()[0];
  const int h = x.dims()[1];
  const int w = x.dims()[2];
  if (out_h == h && out_w == w) return x;
  auto ay = std::make_shared<LerpAxis>(corner_aligned_axis(out_h, h));
  auto axx = std::make_shared<LerpAxis>(corner_aligned_axis(out_w, w));
  Tensor out(c, out_h, out_w);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      for (int xx = 0; xx < out_w; ++xx) {
        const double fy = ay->f[y], fx = axx->f[xx];
        out.at(ch, y, xx) =
            x.value().at(ch, ay->i0[y], axx->i0[xx]) * (1 - fy) * (1 - fx) +
            x.value().at(ch, ay->i0[y], axx->i1[xx]) * (1 - fy) * fx +
            x.value().at(ch, ay->i1[y], axx->i0[xx]) * fy * (1 - fx) +
            x.value().at(ch, ay->i1[y], axx->i1[xx]) * fy * fx;
      }
    }
  }
  auto n = make_node(std::move(out), {x.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* px = x.node().get();
    n->backward = [self, px, ay, axx, c, h, w, out_h, out_w] {
      px->ensure_grad();
      for (int ch = 0; ch < c; ++ch) {
        const size_t in_off = static_cast<size_t>(ch) * h * w;
        for (int y = 0; y < out_h; ++y) {
          for (int xx = 0; xx < out_w; ++xx) {
            const double g =
                self->grad[(static_cast<size_t>(ch) * out_h + y) * out_w + xx];
            const double fy = ay->f[y], fx = axx->f[xx];
            px->grad[in_off + ay->i0[y] * w + axx->i0[xx]] +=
                g * (1 - fy) * (1 - fx);
            px->grad[in_off + ay->i0[y] * w + axx->i1[xx]] += g * (1 - fy) * fx;
            px->grad[in_off + ay->i1[y] * w + axx->i0[xx]] += g * fy * (1 - fx);
            px->grad[in_off + ay->i1[y] * w + axx->i1[xx]] += g * fy * fx;
          }
        }
      }
    };
  }
  return Var(n);
}

Var roi_align(const Var& fmap, const BoundingBox& box, int out_h, int out_w,
              double spatial_scale) {
  const int c = fmap.dims()[0];
  const int h = fmap.dims()[1];
  const int w = fmap.dims()[2];
  struct Sample {
    int y0, y1, x0, x1;
    double fy, fx;
  };
  auto samples = std::make_shared<std::vector<Sample>>();
  samples->reserve(static_cast<size_t>(out_h) * out_w);
  const double bh = box.height() * spatial_scale;
  const double bw = box.width() * spatial_scale;
  for (int i = 0; i < out_h; ++i) {
    // Bin centers inside the box; feature cell (r,c) has center (r+0.5,c+0.5).
    const double sy = box.y_min * spatial_scale + (i + 0.5) * bh / out_h - 0.5;
    for (int j = 0; j < out_w; ++j) {
      const double sx =
          box.x_min * spatial_scale + (j + 0.5) * bw / out_w - 0.5;
      Sample s;
      s.y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
      s.x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
      s.y1 = std::min(s.y0 + 1, h - 1);
      s.x1 = std::min(s.x0 + 1, w - 1);
      s.fy = std::clamp(sy - s.y0, 0.0, 1.0);
      s.fx = std::clamp(sx - s.x0, 0.0, 1.0);
      samples->push_back(s);
    }
  }
  Tensor out(c, out_h, out_w);
  for (int ch = 0; ch < c; ++ch) {
    for (size_t k = 0; k < samples->size(); ++k) {
      const Sample& s = (*samples)[k];
      out.data[static_cast<size_t>(ch) * samples->size() + k] =
          fmap.value().at(ch, s.y0, s.x0) * (1 - s.fy) * (1 - s.fx) +
          fmap.value().at(ch, s.y0, s.x1) * (1 - s.fy) * s.fx +
          fmap.value().at(ch, s.y1, s.x0) * s.fy * (1 - s.fx) +
          fmap.value().at(ch, s.y1, s.x1) * s.fy * s.fx;
    }
  }
  auto n = make_node(std::move(out), {fmap.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pf = fmap.node().get();
    n->backward = [self, pf, samples, c, h, w] {
      pf->ensure_grad();
      for (int ch = 0; ch < c; ++ch) {
        const size_t in_off = static_cast<size_t>(ch) * h * w;
        for (size_t k = 0; k < samples->size(); ++k) {
          const Sample& s = (*samples)[k];
          const double g =
              self->grad[static_cast<size_t>(ch) * samples->size() + k];
          pf->grad[in_off + s.y0 * w + s.x0] += g * (1 - s.fy) * (1 - s.fx);
          pf->grad[in_off + s.y0 * w + s.x1] += g * (1 - s.fy) * s.fx;
          pf->grad[in_off + s.y1 * w + s.x0] += g * s.fy * (1 - s.fx);
          pf->grad[in_off + s.y1 * w + s.x1] += g * s.fy * s.fx;
        }
      }
    };
  }
  return Var(n);
}

Var bce_with_logits_mean(const Var& logits, const Tensor& target) {
  if (logits.dims() != target.dims) {
    throw ShapeError("bce_with_logits_mean: target dims mismatch");
  }
  const int n_elems = logits.size();
  double loss = 0.0;
  for (int i = 0; i < n_elems; ++i) {
    const double z = logits.value().data[i];
    const double t = target.data[i];
    loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= n_elems;
  Tensor out(1, 1, 1);
  out.data[0] = loss;
  auto n = make_node(std::move(out), {logits.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pl = logits.node().get();
    auto tgt = std::make_shared<Tensor>(target);
    n->backward = [self, pl, tgt, n_elems] {
      pl->ensure_grad();
      const double g = self->grad[0] / n_elems;
      for (int i = 0; i < n_elems; ++i) {
        const double s = 1.0 / (1.0 + std::exp(-pl->value.data[i]));
        pl->grad[i] += g * (s - tgt->data[i]);
      }
    };
  }
  return Var(n);
}

Var softmax_cross_entropy(const Var& logits, int label) {
  const int n_cls = logits.size();
  if (label < 0 || label >= n_cls) {
    throw ShapeError("softmax_cross_entropy: label out of range");
  }
  double m = logits.value().data[0];
  for (int i = 1; i < n_cls; ++i) m = std::max(m, logits.value().data[i]);
  double sum = 0.0;
  for (int i = 0; i < n_cls; ++i)
    sum += std::exp(logits.value().data[i] - m);
  const double lse = m + std::log(sum);
  Tensor out(1, 1, 1);
  out.data[0] = lse - logits.value().data[label];
  auto n = make_node(std::move(out), {logits.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pl = logits.node().get();
    n->backward = [self, pl, label, n_cls] {
      pl->ensure_grad();
      double mm = pl->value.data[0];
      for (int i = 1; i < n_cls; ++i) mm = std::max(mm, pl->value.data[i]);
      double ssum = 0.0;
      for (int i = 0; i < n_cls; ++i) ssum += std::exp(pl->value.data[i] - mm);
      const double g = self->grad[0];
      for (int i = 0; i < n_cls; ++i) {
        const double p = std::exp(pl->value.data[i] - mm) / ssum;
        pl->grad[i] += g * (p - (i == label ? 1.0 : 0.0));
      }
    };
  }
  return Var(n);
}

Var smooth_l1_sum(const Var& pred, const Tensor& target) {
  if (pred.dims() != target.dims) {
    throw ShapeError("smooth_l1_sum: target dims mismatch");
  }
  const int n_elems = pred.size();
  double loss = 0.0;
  for (int i = 0; i < n_elems; ++i) {
    const double d = pred.value().data[i] - target.data[i];
    loss += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  Tensor out(1, 1, 1);
  out.data[0] = loss;
  auto n = make_node(std::move(out), {pred.node()});
  if (n->requires_grad) {
    Node* self = n.get();
    Node* pp = pred.node().get();
    auto tgt = std::make_shared<Tensor>(target);
    n->backward = [self, pp, tgt, n_elems] {
      pp->ensure_grad();
      const double g = self->grad[0];
      for (int i = 0; i < n_elems; ++i) {
        const double d = pp->value.data[i] - tgt->data[i];
        pp->grad[i] += g * (std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0));
      }
    };
  }
  return Var(n);
}

Var cosine_gap(const Var& a, const Var& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_gap: size mismatch");
  const int n_elems = a.size();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (int i = 0; i < n_elems; ++i) {
    dot += a.value().data[i] * b.value().data[i];
    na2 += a.value().data[i] * a.value().data[i];
    nb2 += b.value().data[i] * b.value().data[i];
  }
  Tensor out(1, 1, 1);
  const bool degenerate = na2 == 0.0 || nb2 == 0.0;
  const double na = std::sqrt(na2);
  const double nb = std::sqrt(nb2);
  const double cosv = degenerate ? 1.0 : dot / (na * nb);
  out.data[0] = degenerate ? 0.0 : 1.0 - cosv;
  auto n = make_node(std::move(out), {a.node(), b.node()});
  if (n->requires_grad && !degenerate) {
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb, na, nb, cosv, n_elems] {
      const double g = self->grad[0];
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int i = 0; i < n_elems; ++i) {
          pa->grad[i] += g * (cosv * pa->value.data[i] / (na * na) -
                              pb->value.data[i] / (na * nb));
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int i = 0; i < n_elems; ++i) {
          pb->grad[i] += g * (cosv * pb->value.data[i] / (nb * nb) -
                              pa->value.data[i] / (na * nb));
        }
      }
    };
  }
  return Var(n);
}

Var weighted_sum(const std::vector<Var>& terms,
                 const std::vector<double>& weights) {
  if (terms.size() != weights.size()) {
    throw ShapeError("weighted_sum: terms/weights size mismatch");
  }
  Tensor out(1, 1, 1);
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(terms.size());
  for (size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].size() != 1) {
      throw ShapeError("weighted_sum: all terms must be scalars");
    }
    out.data[0] += weights[i] * terms[i].scalar();
    parents.push_back(terms[i].node());
  }
  auto n = make_node(std::move(out), parents);
  if (n->requires_grad) {
    Node* self = n.get();
    auto ws = std::make_shared<std::vector<double>>(weights);
    std::vector<Node*> ps;
    for (const auto& t : terms) ps.push_back(t.node().get());
    n->backward = [self, ws, ps] {
      for (size_t i = 0; i < ps.size(); ++i) {
        if (ps[i]->requires_grad) {
          ps[i]->ensure_grad();
          ps[i]->grad[0] += (*ws)[i] * self->grad[0];
        }
      }
    };
  }
  return Var(n);
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw Error("backward: loss must be a defined scalar");
  }
  if (!loss.node()->requires_grad) {
    throw Error("backward: loss does not depend on any trainable input");
  }
  // Reverse post-order over the parent DAG = valid topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node().get(), 0});
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward();
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  double m = logits.empty() ? 0.0 : logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace nn
}  // namespace amodal
