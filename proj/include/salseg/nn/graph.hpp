#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "salseg/core/errors.hpp"
#include "salseg/core/rng.hpp"
#include "salseg/nn/tensor.hpp"

namespace salseg {

// Static computation graph with explicit reverse-mode gradients. The graph is
// assembled once per network; spatial shapes are fixed at build time and only
// the batch dimension varies between calls. Ops run in insertion order on
// forward and in reverse order on backward, accumulating into input
// gradients, so fan-out (skip connections) needs no special casing.
template <typename S>
class Net {
 public:
  using Var = int;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;  // column-major
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  struct Param {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;
  };

  struct Shape {
    int c = 0, h = 0, w = 0;
  };

  // --- construction -------------------------------------------------------

  Var add_input(const std::string& name, int c, int h, int w) {
    const Var id = add_var(name, {c, h, w});
    inputs_.push_back(id);
    return id;
  }

  Var conv(const std::string& name, Var in, int out_channels, int ksize, Rng& rng) {
    if (ksize != 1 && ksize != 3) throw ValidationError("conv: kernel must be 1 or 3");
    const Shape s = shape(in);
    auto* w = add_param(name + ".w", out_channels, s.c, ksize, ksize);
    auto* b = add_param(name + ".b", out_channels, 1, 1, 1);
    xavier_normal(*w, s.c * ksize * ksize, out_channels * ksize * ksize, rng);
    const Var out = add_var(name, {out_channels, s.h, s.w});
    ops_.push_back(std::make_unique<Conv>(in, out, ksize, w, b));
    return out;
  }

  Var relu(const std::string& name, Var in) {
    const Var out = add_var(name, shape(in));
    ops_.push_back(std::make_unique<Relu>(in, out));
    return out;
  }

  Var sigmoid(const std::string& name, Var in) {
    const Var out = add_var(name, shape(in));
    ops_.push_back(std::make_unique<Sigmoid>(in, out));
    return out;
  }

  Var maxpool2(const std::string& name, Var in) {
    const Shape s = shape(in);
    if (s.h % 2 != 0 || s.w % 2 != 0) throw ValidationError("maxpool2: odd spatial size");
    const Var out = add_var(name, {s.c, s.h / 2, s.w / 2});
    ops_.push_back(std::make_unique<MaxPool2>(in, out));
    return out;
  }

  Var upsample2(const std::string& name, Var in) {
    const Shape s = shape(in);
    const Var out = add_var(name, {s.c, s.h * 2, s.w * 2});
    ops_.push_back(std::make_unique<Upsample2>(in, out));
    return out;
  }

  Var concat(const std::string& name, Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.h != sb.h || sa.w != sb.w) throw ValidationError("concat: spatial shapes differ");
    const Var out = add_var(name, {sa.c + sb.c, sa.h, sa.w});
    ops_.push_back(std::make_unique<Concat>(a, b, out));
    return out;
  }

  Var add(const std::string& name, Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.c != sb.c || sa.h != sb.h || sa.w != sb.w) {
      throw ValidationError("add: shapes differ");
    }
    const Var out = add_var(name, sa);
    ops_.push_back(std::make_unique<Add>(a, b, out));
    return out;
  }

  // Broadcast-multiplies a one-channel gate over every channel of x.
  // The gate op supports a constant override used by tests.
  Var gate(const std::string& name, Var alpha, Var x) {
    const Shape sa = shape(alpha), sx = shape(x);
    if (sa.c != 1 || sa.h != sx.h || sa.w != sx.w) {
      throw ValidationError("gate: alpha must be one channel with matching spatial shape");
    }
    const Var out = add_var(name, sx);
    auto op = std::make_unique<Gate>(alpha, x, out);
    gates_[name] = op.get();
    ops_.push_back(std::move(op));
    return out;
  }

  void set_gate_override(const std::string& name, std::optional<S> value) {
    const auto it = gates_.find(name);
    if (it == gates_.end()) throw ValidationError("unknown gate: " + name);
    it->second->override_value = value;
  }

  // --- execution ----------------------------------------------------------

  void forward() {
    for (const Var v : inputs_) {
      const Shape s = shape(v);
      const auto& t = vals_[v];
      if (t.c != s.c || t.h != s.h || t.w != s.w || t.n <= 0) {
        throw ValidationError("input '" + names_[v] + "' has wrong shape or was not set");
      }
    }
    for (auto& op : ops_) op->forward(*this);
  }

  // Accumulates parameter gradients for d(loss)/d(value(out)) = seed.
  void backward(Var out, const Tensor<S>& seed) {
    if (!seed.same_shape(vals_[out])) throw ValidationError("backward: seed shape mismatch");
    for (std::size_t i = 0; i < vals_.size(); ++i) {
      grads_[i].ensure_shape(vals_[i].n, vals_[i].c, vals_[i].h, vals_[i].w);
      grads_[i].fill(S{0});
    }
    grads_[out].v = seed.v;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)->backward(*this);
  }

  void zero_param_grads() {
    for (auto& p : params_) p->grad.fill(S{0});
  }

  // --- access -------------------------------------------------------------

  Tensor<S>& value(Var v) { return vals_[v]; }
  const Tensor<S>& value(Var v) const { return vals_[v]; }
  Tensor<S>& grad(Var v) { return grads_[v]; }
  Shape shape(Var v) const { return shapes_[v]; }
  const std::string& name(Var v) const { return names_[v]; }

  Var find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return static_cast<Var>(i);
    }
    throw ValidationError("unknown variable: " + name);
  }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p->value.size();
    return total;
  }

 private:
  struct Op {
    virtual ~Op() = default;
    virtual void forward(Net& net) = 0;
    virtual void backward(Net& net) = 0;
  };

  Var add_var(const std::string& name, Shape s) {
    names_.push_back(name);
    shapes_.push_back(s);
    vals_.emplace_back();
    grads_.emplace_back();
    return static_cast<Var>(names_.size() - 1);
  }

  Param* add_param(const std::string& name, int n, int c, int h, int w) {
    auto p = std::make_unique<Param>();
    p->name = name;
    p->value.reshape(n, c, h, w);
    p->grad.reshape(n, c, h, w);
    params_.push_back(std::move(p));
    return params_.back().get();
  }

  static void xavier_normal(Param& p, int fan_in, int fan_out, Rng& rng) {
    const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
    for (auto& v : p.value.v) v = static_cast<S>(rng.normal(0.0, stddev));
  }

  // --- conv ---------------------------------------------------------------

  struct Conv final : Op {
    Var in, out;
    int k, pad;
    Param* weight;  // [cout][cin][k][k]; maps as (cin*k*k) x cout column-major
    Param* bias;    // [cout]

    Conv(Var in_, Var out_, int k_, Param* w_, Param* b_)
        : in(in_), out(out_), k(k_), pad(k_ / 2), weight(w_), bias(b_) {}

    void forward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      Tensor<S>& y = net.value(out);
      const int cout = weight->value.n, cin = weight->value.c;
      y.ensure_shape(x.n, cout, x.h, x.w);
      const auto hw = static_cast<Eigen::Index>(x.plane_size());
      const Eigen::Index q = static_cast<Eigen::Index>(cin) * k * k;
      CMapM wm(weight->value.v.data(), q, cout);
      Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> bv(bias->value.v.data(), cout);
      for (int s = 0; s < x.n; ++s) {
        MapM ym(y.plane(s, 0), hw, cout);
        if (k == 1) {
          CMapM xm(x.plane(s, 0), hw, cin);
          ym.noalias() = xm * wm;
        } else {
          net.build_col(x, s, k, pad, net.scratch_a_);
          CMapM col(net.scratch_a_.data(), hw, q);
          ym.noalias() = col * wm;
        }
        ym.rowwise() += bv;
      }
    }

    void backward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& dx = net.grad(in);
      const int cout = weight->value.n, cin = weight->value.c;
      const auto hw = static_cast<Eigen::Index>(x.plane_size());
      const Eigen::Index q = static_cast<Eigen::Index>(cin) * k * k;
      CMapM wm(weight->value.v.data(), q, cout);
      MapM dwm(weight->grad.v.data(), q, cout);
      Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>> dbv(bias->grad.v.data(), cout);
      for (int s = 0; s < x.n; ++s) {
        CMapM dym(dy.plane(s, 0), hw, cout);
        dbv += dym.colwise().sum();
        if (k == 1) {
          CMapM xm(x.plane(s, 0), hw, cin);
          dwm.noalias() += xm.transpose() * dym;
          MapM dxm(dx.plane(s, 0), hw, cin);
          dxm.noalias() += dym * wm.transpose();
        } else {
          net.build_col(x, s, k, pad, net.scratch_a_);
          CMapM col(net.scratch_a_.data(), hw, q);
          dwm.noalias() += col.transpose() * dym;
          net.scratch_b_.resize(static_cast<std::size_t>(hw) * q);
          MapM dcol(net.scratch_b_.data(), hw, q);
          dcol.noalias() = dym * wm.transpose();
          net.scatter_col(dx, s, k, pad, net.scratch_b_);
        }
      }
    }
  };

  // Lowers one sample of x into column layout: column (c*k*k + ky*k + kx)
  // holds plane c shifted by (ky-pad, kx-pad), zero outside.
  void build_col(const Tensor<S>& x, int sample, int k, int pad, AlignedVec<S>& buf) const {
    const std::size_t hw = x.plane_size();
    const std::size_t q = static_cast<std::size_t>(x.c) * k * k;
    buf.assign(hw * q, S{0});
    const int h = x.h, w = x.w;
    for (int c = 0; c < x.c; ++c) {
      const S* plane = x.plane(sample, c);
      for (int ky = 0; ky < k; ++ky) {
        const int dy = ky - pad;
        for (int kx = 0; kx < k; ++kx) {
          const int dx = kx - pad;
          S* column = buf.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
          const int y_lo = std::max(0, -dy), y_hi = h - std::max(0, dy);
          const int x_lo = std::max(0, -dx), x_hi = w - std::max(0, dx);
          if (x_hi <= x_lo) continue;
          for (int y = y_lo; y < y_hi; ++y) {
            const S* src = plane + static_cast<std::size_t>(y + dy) * w + (x_lo + dx);
            std::copy(src, src + (x_hi - x_lo), column + static_cast<std::size_t>(y) * w + x_lo);
          }
        }
      }
    }
  }

  // Adjoint of build_col: accumulates column-layout gradients back into dx.
  void scatter_col(Tensor<S>& dx, int sample, int k, int pad, const AlignedVec<S>& buf) const {
    const std::size_t hw = dx.plane_size();
    const int h = dx.h, w = dx.w;
    for (int c = 0; c < dx.c; ++c) {
      S* plane = dx.plane(sample, c);
      for (int ky = 0; ky < k; ++ky) {
        const int dy = ky - pad;
        for (int kx = 0; kx < k; ++kx) {
          const int dx_ = kx - pad;
          const S* column = buf.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * hw;
          const int y_lo = std::max(0, -dy), y_hi = h - std::max(0, dy);
          const int x_lo = std::max(0, -dx_), x_hi = w - std::max(0, dx_);
          if (x_hi <= x_lo) continue;
          for (int y = y_lo; y < y_hi; ++y) {
            S* dst = plane + static_cast<std::size_t>(y + dy) * w + (x_lo + dx_);
            const S* src = column + static_cast<std::size_t>(y) * w + x_lo;
            for (int i = 0; i < x_hi - x_lo; ++i) dst[i] += src[i];
          }
        }
      }
    }
  }

  // --- pointwise ops ------------------------------------------------------

  struct Relu final : Op {
    Var in, out;
    Relu(Var in_, Var out_) : in(in_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      Tensor<S>& y = net.value(out);
      y.ensure_shape(x.n, x.c, x.h, x.w);
      for (std::size_t i = 0; i < x.size(); ++i) y.v[i] = x.v[i] > S{0} ? x.v[i] : S{0};
    }
    void backward(Net& net) override {
      const Tensor<S>& y = net.value(out);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& dx = net.grad(in);
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y.v[i] > S{0}) dx.v[i] += dy.v[i];
      }
    }
  };

  struct Sigmoid final : Op {
    Var in, out;
    Sigmoid(Var in_, Var out_) : in(in_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      Tensor<S>& y = net.value(out);
      y.ensure_shape(x.n, x.c, x.h, x.w);
      for (std::size_t i = 0; i < x.size(); ++i) {
        y.v[i] = static_cast<S>(1.0 / (1.0 + std::exp(-static_cast<double>(x.v[i]))));
      }
    }
    void backward(Net& net) override {
      const Tensor<S>& y = net.value(out);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& dx = net.grad(in);
      for (std::size_t i = 0; i < y.size(); ++i) dx.v[i] += dy.v[i] * y.v[i] * (S{1} - y.v[i]);
    }
  };

  struct MaxPool2 final : Op {
    Var in, out;
    std::vector<std::uint8_t> argmax;  // 2*dy + dx per output element
    MaxPool2(Var in_, Var out_) : in(in_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      Tensor<S>& y = net.value(out);
      y.ensure_shape(x.n, x.c, x.h / 2, x.w / 2);
      argmax.resize(y.size());
      std::size_t o = 0;
      for (int s = 0; s < x.n; ++s) {
        for (int c = 0; c < x.c; ++c) {
          const S* xp = x.plane(s, c);
          S* yp = y.plane(s, c);
          for (int r = 0; r < y.h; ++r) {
            for (int q = 0; q < y.w; ++q, ++o) {
              const std::size_t base = static_cast<std::size_t>(2 * r) * x.w + 2 * q;
              S best = xp[base];
              std::uint8_t idx = 0;
              const S cands[3] = {xp[base + 1], xp[base + x.w], xp[base + x.w + 1]};
              for (std::uint8_t j = 0; j < 3; ++j) {
                if (cands[j] > best) {
                  best = cands[j];
                  idx = static_cast<std::uint8_t>(j + 1);
                }
              }
              yp[static_cast<std::size_t>(r) * y.w + q] = best;
              argmax[o] = idx;
            }
          }
        }
      }
    }
    void backward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      const Tensor<S>& y = net.value(out);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& dx = net.grad(in);
      std::size_t o = 0;
      for (int s = 0; s < x.n; ++s) {
        for (int c = 0; c < x.c; ++c) {
          S* dxp = dx.plane(s, c);
          const S* dyp = dy.plane(s, c);
          for (int r = 0; r < y.h; ++r) {
            for (int q = 0; q < y.w; ++q, ++o) {
              const std::uint8_t idx = argmax[o];
              const std::size_t base =
                  static_cast<std::size_t>(2 * r + idx / 2) * x.w + 2 * q + idx % 2;
              dxp[base] += dyp[static_cast<std::size_t>(r) * y.w + q];
            }
          }
        }
      }
    }
  };

  struct Upsample2 final : Op {
    Var in, out;
    Upsample2(Var in_, Var out_) : in(in_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      Tensor<S>& y = net.value(out);
      y.ensure_shape(x.n, x.c, x.h * 2, x.w * 2);
      for (int s = 0; s < x.n; ++s) {
        for (int c = 0; c < x.c; ++c) {
          const S* xp = x.plane(s, c);
          S* yp = y.plane(s, c);
          for (int r = 0; r < x.h; ++r) {
            for (int q = 0; q < x.w; ++q) {
              const S v = xp[static_cast<std::size_t>(r) * x.w + q];
              const std::size_t base = static_cast<std::size_t>(2 * r) * y.w + 2 * q;
              yp[base] = v;
              yp[base + 1] = v;
              yp[base + y.w] = v;
              yp[base + y.w + 1] = v;
            }
          }
        }
      }
    }
    void backward(Net& net) override {
      const Tensor<S>& x = net.value(in);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& dx = net.grad(in);
      for (int s = 0; s < x.n; ++s) {
        for (int c = 0; c < x.c; ++c) {
          S* dxp = dx.plane(s, c);
          const S* dyp = dy.plane(s, c);
          const int yw = x.w * 2;
          for (int r = 0; r < x.h; ++r) {
            for (int q = 0; q < x.w; ++q) {
              const std::size_t base = static_cast<std::size_t>(2 * r) * yw + 2 * q;
              dxp[static_cast<std::size_t>(r) * x.w + q] +=
                  dyp[base] + dyp[base + 1] + dyp[base + yw] + dyp[base + yw + 1];
            }
          }
        }
      }
    }
  };

  struct Concat final : Op {
    Var a, b, out;
    Concat(Var a_, Var b_, Var out_) : a(a_), b(b_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& xa = net.value(a);
      const Tensor<S>& xb = net.value(b);
      if (xa.n != xb.n) throw ValidationError("concat: batch sizes differ");
      Tensor<S>& y = net.value(out);
      y.ensure_shape(xa.n, xa.c + xb.c, xa.h, xa.w);
      const std::size_t ps = xa.plane_size();
      for (int s = 0; s < xa.n; ++s) {
        std::copy(xa.plane(s, 0), xa.plane(s, 0) + ps * xa.c, y.plane(s, 0));
        std::copy(xb.plane(s, 0), xb.plane(s, 0) + ps * xb.c, y.plane(s, xa.c));
      }
    }
    void backward(Net& net) override {
      const Tensor<S>& xa = net.value(a);
      const Tensor<S>& xb = net.value(b);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& da = net.grad(a);
      Tensor<S>& db = net.grad(b);
      const std::size_t ps = xa.plane_size();
      for (int s = 0; s < xa.n; ++s) {
        const S* dyp = dy.plane(s, 0);
        S* dap = da.plane(s, 0);
        for (std::size_t i = 0; i < ps * xa.c; ++i) dap[i] += dyp[i];
        const S* dyq = dy.plane(s, xa.c);
        S* dbp = db.plane(s, 0);
        for (std::size_t i = 0; i < ps * xb.c; ++i) dbp[i] += dyq[i];
      }
    }
  };

  struct Add final : Op {
    Var a, b, out;
    Add(Var a_, Var b_, Var out_) : a(a_), b(b_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& xa = net.value(a);
      const Tensor<S>& xb = net.value(b);
      if (!xa.same_shape(xb)) throw ValidationError("add: shapes differ at runtime");
      Tensor<S>& y = net.value(out);
      y.ensure_shape(xa.n, xa.c, xa.h, xa.w);
      for (std::size_t i = 0; i < xa.size(); ++i) y.v[i] = xa.v[i] + xb.v[i];
    }
    void backward(Net& net) override {
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& da = net.grad(a);
      Tensor<S>& db = net.grad(b);
      for (std::size_t i = 0; i < dy.size(); ++i) {
        da.v[i] += dy.v[i];
        db.v[i] += dy.v[i];
      }
    }
  };

  struct Gate final : Op {
    Var alpha, x, out;
    std::optional<S> override_value;
    Gate(Var alpha_, Var x_, Var out_) : alpha(alpha_), x(x_), out(out_) {}
    void forward(Net& net) override {
      const Tensor<S>& xa = net.value(alpha);
      const Tensor<S>& xx = net.value(x);
      Tensor<S>& y = net.value(out);
      y.ensure_shape(xx.n, xx.c, xx.h, xx.w);
      const std::size_t ps = xx.plane_size();
      for (int s = 0; s < xx.n; ++s) {
        const S* ap = xa.plane(s, 0);
        for (int c = 0; c < xx.c; ++c) {
          const S* xp = xx.plane(s, c);
          S* yp = y.plane(s, c);
          if (override_value) {
            const S a = *override_value;
            for (std::size_t i = 0; i < ps; ++i) yp[i] = a * xp[i];
          } else {
            for (std::size_t i = 0; i < ps; ++i) yp[i] = ap[i] * xp[i];
          }
        }
      }
    }
    void backward(Net& net) override {
      const Tensor<S>& xa = net.value(alpha);
      const Tensor<S>& xx = net.value(x);
      const Tensor<S>& dy = net.grad(out);
      Tensor<S>& da = net.grad(alpha);
      Tensor<S>& dx = net.grad(x);
      const std::size_t ps = xx.plane_size();
      for (int s = 0; s < xx.n; ++s) {
        const S* ap = xa.plane(s, 0);
        S* dap = da.plane(s, 0);
        for (int c = 0; c < xx.c; ++c) {
          const S* xp = xx.plane(s, c);
          const S* dyp = dy.plane(s, c);
          S* dxp = dx.plane(s, c);
          if (override_value) {
            const S a = *override_value;
            for (std::size_t i = 0; i < ps; ++i) {
              dxp[i] += dyp[i] * a;
              dap[i] += dyp[i] * xp[i];
            }
          } else {
            for (std::size_t i = 0; i < ps; ++i) {
              dxp[i] += dyp[i] * ap[i];
              dap[i] += dyp[i] * xp[i];
            }
          }
        }
      }
    }
  };

  std::vector<std::string> names_;
  std::vector<Shape> shapes_;
  std::vector<Tensor<S>> vals_;
  std::vector<Tensor<S>> grads_;
  std::vector<Var> inputs_;
  std::vector<std::unique_ptr<Param>> params_;
  std::vector<std::unique_ptr<Op>> ops_;
  std::map<std::string, Gate*> gates_;
  mutable AlignedVec<S> scratch_a_, scratch_b_;
};

// Forward-only 2x2 max-pool used to build the saliency pyramid outside the
// trainable graph.
template <typename S>
Tensor<S> maxpool2_tensor(const Tensor<S>& x) {
  if (x.h % 2 != 0 || x.w % 2 != 0) throw ValidationError("maxpool2_tensor: odd spatial size");
  Tensor<S> y(x.n, x.c, x.h / 2, x.w / 2);
  for (int s = 0; s < x.n; ++s) {
    for (int c = 0; c < x.c; ++c) {
      const S* xp = x.plane(s, c);
      S* yp = y.plane(s, c);
      for (int r = 0; r < y.h; ++r) {
        for (int q = 0; q < y.w; ++q) {
          const std::size_t base = static_cast<std::size_t>(2 * r) * x.w + 2 * q;
          yp[static_cast<std::size_t>(r) * y.w + q] =
              std::max(std::max(xp[base], xp[base + 1]), std::max(xp[base + x.w], xp[base + x.w + 1]));
        }
      }
    }
  }
  return y;
}

}  // namespace salseg
