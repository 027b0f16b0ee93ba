// Copyright 2026 The PRF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prf/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "prf/error.hpp"

namespace prf::ag {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;

namespace {

thread_local bool t_grad_enabled = true;
thread_local OpCounter* t_counter = nullptr;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(value);
  return n;
}

/// Creates the result node and wires it into the graph when needed.
template <typename... Ts>
std::shared_ptr<Node> result(Shape shape, std::vector<double> value,
                             const Ts&... inputs) {
  auto n = make_node(shape, std::move(value));
  if (t_grad_enabled && (inputs.requires_grad() || ...)) {
    n->requires_grad = true;
    (n->parents.push_back(inputs.node_ptr()), ...);
  }
  return n;
}

std::shared_ptr<Node> result_vec(Shape shape, std::vector<double> value,
                                 const std::vector<Tensor>& inputs) {
  auto n = make_node(shape, std::move(value));
  if (!t_grad_enabled) return n;
  for (const auto& t : inputs) {
    if (t.requires_grad()) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) {
    for (const auto& t : inputs) n->parents.push_back(t.node_ptr());
  }
  return n;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

int bdim(int a, int b, const char* op) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw ContractError(std::string(op) + ": incompatible broadcast");
}

struct Broadcast {
  Shape out;
  // strides into a and b (0 on broadcast dims)
  std::size_t as[3];
  std::size_t bs[3];
};

Broadcast broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast br;
  br.out = Shape{bdim(a.b, b.b, op), bdim(a.r, b.r, op), bdim(a.c, b.c, op)};
  auto strides = [](const Shape& s, std::size_t* st) {
    st[2] = s.c == 1 ? 0 : 1;
    st[1] = s.r == 1 ? 0 : static_cast<std::size_t>(s.c);
    st[0] = s.b == 1 ? 0 : static_cast<std::size_t>(s.r) * s.c;
  };
  strides(a, br.as);
  strides(b, br.bs);
  return br;
}

template <typename F>
void for_broadcast(const Broadcast& br, F&& f) {
  std::size_t o = 0;
  for (int i = 0; i < br.out.b; ++i) {
    for (int j = 0; j < br.out.r; ++j) {
      const std::size_t ab = i * br.as[0] + j * br.as[1];
      const std::size_t bb = i * br.bs[0] + j * br.bs[1];
      for (int k = 0; k < br.out.c; ++k, ++o) {
        f(o, ab + k * br.as[2], bb + k * br.bs[2]);
      }
    }
  }
}

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& a, Fwd fwd, Bwd dfdx) {
  const auto& x = a.node()->value;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  auto n = result(a.shape(), std::move(y), a);
  if (n->requires_grad) {
    n->backward_fn = [dfdx](Node& self) {
      auto& p = *self.parents[0];
      if (!p.requires_grad) return;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
      }
    };
  }
  return Tensor(n);
}

}  // namespace

// ---------------------------------------------------------------- Shape/Tensor

std::string Shape::str() const {
  return "(" + std::to_string(b) + ", " + std::to_string(r) + ", " +
         std::to_string(c) + ")";
}

Tensor Tensor::zeros(Shape shape) { return full(shape, 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  return Tensor(make_node(shape, std::vector<double>(shape.numel(), value)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  require(values.size() == shape.numel(), "Tensor::from: size mismatch for " + shape.str());
  return Tensor(make_node(shape, std::move(values)));
}

Tensor Tensor::scalar(double value) { return full(Shape{}, value); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from(shape, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::span<const double> Tensor::data() const { return node_->value; }
std::span<double> Tensor::mutable_data() { return node_->value; }
std::vector<double> Tensor::to_vector() const { return node_->value; }

double Tensor::item() const {
  require(numel() == 1, "item() on tensor of shape " + shape().str());
  return node_->value[0];
}

double Tensor::at(int bi, int ri, int ci) const {
  const auto& s = shape();
  return node_->value[(static_cast<std::size_t>(bi) * s.r + ri) * s.c + ci];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  require(numel() == 1, "backward() needs a single-element tensor");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Interior gradients are not needed once propagated.
  for (Node* n : order) {
    if (n->backward_fn) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

OpCounter::OpCounter() : parent_(t_counter) { t_counter = this; }
OpCounter::~OpCounter() { t_counter = parent_; }

void count_macs(std::uint64_t n) {
  for (OpCounter* c = t_counter; c != nullptr; c = c->parent_) c->macs_ += n;
}

// ------------------------------------------------------------------ elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  const auto br = broadcast(a.shape(), b.shape(), "add");
  std::vector<double> y(br.out.numel());
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for_broadcast(br, [&](std::size_t o, std::size_t i, std::size_t j) { y[o] = av[i] + bv[j]; });
  auto n = result(br.out, std::move(y), a, b);
  if (n->requires_grad) {
    n->backward_fn = [br](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      double* ga = pa.requires_grad ? pa.ensure_grad().data() : nullptr;
      double* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
      for_broadcast(br, [&](std::size_t o, std::size_t i, std::size_t j) {
        if (ga) ga[i] += self.grad[o];
        if (gb) gb[j] += self.grad[o];
      });
    };
  }
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto br = broadcast(a.shape(), b.shape(), "sub");
  std::vector<double> y(br.out.numel());
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for_broadcast(br, [&](std::size_t o, std::size_t i, std::size_t j) { y[o] = av[i] - bv[j]; });
  auto n = result(br.out, std::move(y), a, b);
  if (n->requires_grad) {
    n->backward_fn = [br](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      double* ga = pa.requires_grad ? pa.ensure_grad().data() : nullptr;
      double* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
      for_broadcast(br, [&](std::size_t o, std::size_t i, std::size_t j) {
        if (ga) ga[i] += self.grad[o];
        if (gb) gb[j] -= self.grad[o];
      });
    };
  }
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto br = broadcast(a.shape(), b.shape(), "mul");
  std::vector<double> y(br.out.numel());
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for_broadcast(br, [&](std::size_t o, std::size_t i, std::size_t j) { y[o] = av[i] * bv[j]; });
  auto n = result(br.out, std::move(y), a, b);
  if (n->requires_grad) {
    n->backward_fn = [br](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      double* ga = pa.requires_grad ? pa.ensure_grad().data() : nullptr;
      double* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
      for_broadcast(br, [&](std::size_t o, std::size_t i, std::size_t j) {
        if (ga) ga[i] += self.grad[o] * pb.value[j];
        if (gb) gb[j] += self.grad[o] * pa.value[i];
      });
    };
  }
  return Tensor(n);
}

Tensor scale(const Tensor& a, double s) {
  return unary(
      a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor smooth_l1(const Tensor& a, double beta) {
  return unary(
      a,
      [beta](double d) {
        const double ad = std::abs(d);
        return ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
      },
      [beta](double d, double) {
        if (std::abs(d) < beta) return d / beta;
        return d > 0.0 ? 1.0 : -1.0;
      });
}

Tensor log_clamped(const Tensor& a, double floor) {
  return unary(
      a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

// ---------------------------------------------------------------------- linear

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  require(ws.b == 1 && ws.r == xs.c,
          "linear: weight " + ws.str() + " does not match input " + xs.str());
  const int rows = xs.b * xs.r;
  const int k = ws.r;
  const int m = ws.c;
  if (bias.defined()) require(bias.numel() == static_cast<std::size_t>(m), "linear: bias size");
  std::vector<double> y(static_cast<std::size_t>(rows) * m);
  MapMat ym(y.data(), rows, m);
  CMapMat xm(x.node()->value.data(), rows, k);
  CMapMat wm(w.node()->value.data(), k, m);
  ym.noalias() = xm * wm;
  if (bias.defined()) {
    Eigen::Map<const Eigen::RowVectorXd> bm(bias.node()->value.data(), m);
    ym.rowwise() += bm;
  }
  count_macs(static_cast<std::uint64_t>(rows) * k * m);
  auto n = bias.defined() ? result(Shape{xs.b, xs.r, m}, std::move(y), x, w, bias)
                          : result(Shape{xs.b, xs.r, m}, std::move(y), x, w);
  if (n->requires_grad) {
    n->backward_fn = [rows, k, m](Node& self) {
      CMapMat gy(self.grad.data(), rows, m);
      Node& px = *self.parents[0];
      Node& pw = *self.parents[1];
      if (px.requires_grad) {
        MapMat gx(px.ensure_grad().data(), rows, k);
        gx.noalias() += gy * CMapMat(pw.value.data(), k, m).transpose();
      }
      if (pw.requires_grad) {
        MapMat gw(pw.ensure_grad().data(), k, m);
        gw.noalias() += CMapMat(px.value.data(), rows, k).transpose() * gy;
      }
      if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
        Eigen::Map<Eigen::RowVectorXd> gb(self.parents[2]->ensure_grad().data(), m);
        gb += gy.colwise().sum();
      }
    };
  }
  return Tensor(n);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto& s = x.shape();
  const int c = s.c;
  require(gamma.numel() == static_cast<std::size_t>(c) && beta.numel() == static_cast<std::size_t>(c),
          "layer_norm: parameter size");
  const std::size_t rows = static_cast<std::size_t>(s.b) * s.r;
  const auto& xv = x.node()->value;
  const auto& gv = gamma.node()->value;
  const auto& bv = beta.node()->value;
  std::vector<double> y(xv.size());
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xr = xv.data() + i * c;
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += xr[j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= c;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (int j = 0; j < c; ++j) {
      const double h = (xr[j] - mu) * is;
      xhat[i * c + j] = h;
      y[i * c + j] = gv[j] * h + bv[j];
    }
  }
  auto n = result(s, std::move(y), x, gamma, beta);
  if (n->requires_grad) {
    n->backward_fn = [rows, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
      Node& px = *self.parents[0];
      Node& pg = *self.parents[1];
      Node& pb = *self.parents[2];
      double* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
      double* gg = pg.requires_grad ? pg.ensure_grad().data() : nullptr;
      double* gb = pb.requires_grad ? pb.ensure_grad().data() : nullptr;
      for (std::size_t i = 0; i < rows; ++i) {
        const double* dy = self.grad.data() + i * c;
        const double* h = xhat.data() + i * c;
        double m1 = 0.0;
        double m2 = 0.0;
        for (int j = 0; j < c; ++j) {
          const double dh = dy[j] * pg.value[j];
          m1 += dh;
          m2 += dh * h[j];
          if (gg) gg[j] += dy[j] * h[j];
          if (gb) gb[j] += dy[j];
        }
        if (!gx) continue;
        m1 /= c;
        m2 /= c;
        for (int j = 0; j < c; ++j) {
          const double dh = dy[j] * pg.value[j];
          gx[i * c + j] += inv_std[i] * (dh - m1 - h[j] * m2);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor softmax(const Tensor& x) {
  const auto& s = x.shape();
  const int c = s.c;
  const std::size_t rows = static_cast<std::size_t>(s.b) * s.r;
  const auto& xv = x.node()->value;
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xr = xv.data() + i * c;
    double* yr = y.data() + i * c;
    const double mx = *std::max_element(xr, xr + c);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += (yr[j] = std::exp(xr[j] - mx));
    for (int j = 0; j < c; ++j) yr[j] /= z;
  }
  auto n = result(s, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [rows, c](Node& self) {
      Node& px = *self.parents[0];
      auto& g = px.ensure_grad();
      for (std::size_t i = 0; i < rows; ++i) {
        const double* yr = self.value.data() + i * c;
        const double* dy = self.grad.data() + i * c;
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += dy[j] * yr[j];
        for (int j = 0; j < c; ++j) g[i * c + j] += yr[j] * (dy[j] - dot);
      }
    };
  }
  return Tensor(n);
}

// ------------------------------------------------------------------- attention

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                 const AttnMask& mask) {
  const auto& qs = q.shape();
  const auto& ks = k.shape();
  require(ks == v.shape(), "attention: key/value shape mismatch");
  require(ks.c == qs.c, "attention: channel mismatch");
  require(ks.b == qs.b || ks.b == 1, "attention: key batch must match query batch or be 1");
  require(heads >= 1 && qs.c % heads == 0, "attention: channels not divisible by heads");
  const int B = qs.b;
  const int rq = qs.r;
  const int rk = ks.r;
  const int C = qs.c;
  const int dh = C / heads;
  const bool shared_kv = ks.b == 1 && B != 1;
  require(mask.key_valid.empty() ||
              mask.key_valid.size() == static_cast<std::size_t>(B) * rk,
          "attention: key mask size");
  const double scl = 1.0 / std::sqrt(static_cast<double>(dh));
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<double> out(static_cast<std::size_t>(B) * rq * C, 0.0);
  // Probabilities kept for the backward pass: (B, heads, rq, rk).
  std::vector<double> probs(static_cast<std::size_t>(B) * heads * rq * rk, 0.0);
  RowMat scores(rq, rk);

  for (int b = 0; b < B; ++b) {
    const int kb = shared_kv ? 0 : b;
    CMapMat qm(q.node()->value.data() + static_cast<std::size_t>(b) * rq * C, rq, C);
    CMapMat km(k.node()->value.data() + static_cast<std::size_t>(kb) * rk * C, rk, C);
    CMapMat vm(v.node()->value.data() + static_cast<std::size_t>(kb) * rk * C, rk, C);
    MapMat om(out.data() + static_cast<std::size_t>(b) * rq * C, rq, C);
    const std::uint8_t* kv = mask.key_valid.empty() ? nullptr : mask.key_valid.data() + static_cast<std::size_t>(b) * rk;
    for (int h = 0; h < heads; ++h) {
      scores.noalias() = qm.middleCols(h * dh, dh) * km.middleCols(h * dh, dh).transpose();
      MapMat pm(probs.data() + (static_cast<std::size_t>(b) * heads + h) * rq * rk, rq, rk);
      for (int i = 0; i < rq; ++i) {
        double mx = neg_inf;
        for (int j = 0; j < rk; ++j) {
          const bool ok = (kv == nullptr || kv[j] != 0) && (!mask.causal || j <= i);
          scores(i, j) = ok ? scores(i, j) * scl : neg_inf;
          mx = std::max(mx, scores(i, j));
        }
        if (mx == neg_inf) continue;  // fully masked row stays zero
        double z = 0.0;
        for (int j = 0; j < rk; ++j) {
          const double e = scores(i, j) == neg_inf ? 0.0 : std::exp(scores(i, j) - mx);
          pm(i, j) = e;
          z += e;
        }
        pm.row(i) /= z;
      }
      om.middleCols(h * dh, dh).noalias() = pm * vm.middleCols(h * dh, dh);
    }
  }
  count_macs(static_cast<std::uint64_t>(B) * heads * rq * rk * dh * 2);

  auto n = result(qs, std::move(out), q, k, v);
  if (n->requires_grad) {
    n->backward_fn = [=, probs = std::move(probs)](Node& self) {
      Node& pq = *self.parents[0];
      Node& pk = *self.parents[1];
      Node& pv = *self.parents[2];
      double* gq = pq.requires_grad ? pq.ensure_grad().data() : nullptr;
      double* gk = pk.requires_grad ? pk.ensure_grad().data() : nullptr;
      double* gv = pv.requires_grad ? pv.ensure_grad().data() : nullptr;
      RowMat dp(rq, rk);
      for (int b = 0; b < B; ++b) {
        const int kb = shared_kv ? 0 : b;
        const std::size_t qoff = static_cast<std::size_t>(b) * rq * C;
        const std::size_t koff = static_cast<std::size_t>(kb) * rk * C;
        CMapMat qm(pq.value.data() + qoff, rq, C);
        CMapMat km(pk.value.data() + koff, rk, C);
        CMapMat vm(pv.value.data() + koff, rk, C);
        CMapMat gom(self.grad.data() + qoff, rq, C);
        for (int h = 0; h < heads; ++h) {
          CMapMat pm(probs.data() + (static_cast<std::size_t>(b) * heads + h) * rq * rk, rq, rk);
          const auto go = gom.middleCols(h * dh, dh);
          if (gv) {
            MapMat gvm(gv + koff, rk, C);
            gvm.middleCols(h * dh, dh).noalias() += pm.transpose() * go;
          }
          if (!gq && !gk) continue;
          dp.noalias() = go * vm.middleCols(h * dh, dh).transpose();
          for (int i = 0; i < rq; ++i) {
            const double dot = dp.row(i).dot(pm.row(i));
            for (int j = 0; j < rk; ++j) dp(i, j) = pm(i, j) * (dp(i, j) - dot) * scl;
          }
          if (gq) {
            MapMat gqm(gq + qoff, rq, C);
            gqm.middleCols(h * dh, dh).noalias() += dp * km.middleCols(h * dh, dh);
          }
          if (gk) {
            MapMat gkm(gk + koff, rk, C);
            gkm.middleCols(h * dh, dh).noalias() += dp.transpose() * qm.middleCols(h * dh, dh);
          }
        }
      }
    };
  }
  return Tensor(n);
}

// ------------------------------------------------------------------ structural

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const int B = parts[0].b();
  const int R = parts[0].r();
  int C = 0;
  std::vector<int> offs;
  for (const auto& p : parts) {
    require(p.b() == B && p.r() == R, "concat_cols: leading shape mismatch");
    offs.push_back(C);
    C += p.c();
  }
  const std::size_t rows = static_cast<std::size_t>(B) * R;
  std::vector<double> y(rows * C);
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const int pc = parts[pi].c();
    const auto& pv = parts[pi].node()->value;
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(pv.data() + i * pc, pc, y.data() + i * C + offs[pi]);
    }
  }
  auto n = result_vec(Shape{B, R, C}, std::move(y), parts);
  if (n->requires_grad) {
    n->backward_fn = [rows, C, offs](Node& self) {
      for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
        Node& p = *self.parents[pi];
        if (!p.requires_grad) continue;
        const int pc = p.shape.c;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < rows; ++i) {
          for (int j = 0; j < pc; ++j) g[i * pc + j] += self.grad[i * C + offs[pi] + j];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const int B = parts[0].b();
  const int C = parts[0].c();
  int R = 0;
  std::vector<int> offs;
  for (const auto& p : parts) {
    require(p.b() == B && p.c() == C, "concat_rows: shape mismatch");
    offs.push_back(R);
    R += p.r();
  }
  std::vector<double> y(static_cast<std::size_t>(B) * R * C);
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const int pr = parts[pi].r();
    const auto& pv = parts[pi].node()->value;
    for (int b = 0; b < B; ++b) {
      std::copy_n(pv.data() + static_cast<std::size_t>(b) * pr * C, static_cast<std::size_t>(pr) * C,
                  y.data() + (static_cast<std::size_t>(b) * R + offs[pi]) * C);
    }
  }
  auto n = result_vec(Shape{B, R, C}, std::move(y), parts);
  if (n->requires_grad) {
    n->backward_fn = [B, R, C, offs](Node& self) {
      for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
        Node& p = *self.parents[pi];
        if (!p.requires_grad) continue;
        const int pr = p.shape.r;
        auto& g = p.ensure_grad();
        for (int b = 0; b < B; ++b) {
          const double* src = self.grad.data() + (static_cast<std::size_t>(b) * R + offs[pi]) * C;
          double* dst = g.data() + static_cast<std::size_t>(b) * pr * C;
          for (std::size_t j = 0; j < static_cast<std::size_t>(pr) * C; ++j) dst[j] += src[j];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
  const auto& s = x.shape();
  require(0 <= r0 && r0 <= r1 && r1 <= s.r, "slice_rows: range out of bounds");
  const int R = r1 - r0;
  std::vector<double> y(static_cast<std::size_t>(s.b) * R * s.c);
  const auto& xv = x.node()->value;
  for (int b = 0; b < s.b; ++b) {
    std::copy_n(xv.data() + (static_cast<std::size_t>(b) * s.r + r0) * s.c,
                static_cast<std::size_t>(R) * s.c, y.data() + static_cast<std::size_t>(b) * R * s.c);
  }
  auto n = result(Shape{s.b, R, s.c}, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s, r0, R](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (int b = 0; b < s.b; ++b) {
        double* dst = g.data() + (static_cast<std::size_t>(b) * s.r + r0) * s.c;
        const double* src = self.grad.data() + static_cast<std::size_t>(b) * R * s.c;
        for (std::size_t j = 0; j < static_cast<std::size_t>(R) * s.c; ++j) dst[j] += src[j];
      }
    };
  }
  return Tensor(n);
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  const auto& s = x.shape();
  require(0 <= c0 && c0 <= c1 && c1 <= s.c, "slice_cols: range out of bounds");
  const int C = c1 - c0;
  const std::size_t rows = static_cast<std::size_t>(s.b) * s.r;
  std::vector<double> y(rows * C);
  const auto& xv = x.node()->value;
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(xv.data() + i * s.c + c0, C, y.data() + i * C);
  auto n = result(Shape{s.b, s.r, C}, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s, c0, C, rows](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i) {
        for (int j = 0; j < C; ++j) g[i * s.c + c0 + j] += self.grad[i * C + j];
      }
    };
  }
  return Tensor(n);
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape.numel() == x.numel(), "reshape: " + x.shape().str() + " -> " + shape.str());
  auto n = result(shape, x.node()->value, x);
  if (n->requires_grad) {
    n->backward_fn = [](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor repeat_cols(const Tensor& x, int times) {
  const auto& s = x.shape();
  const std::size_t rows = static_cast<std::size_t>(s.b) * s.r;
  std::vector<double> y(rows * s.c * times);
  const auto& xv = x.node()->value;
  for (std::size_t i = 0; i < rows; ++i) {
    for (int t = 0; t < times; ++t) {
      std::copy_n(xv.data() + i * s.c, s.c, y.data() + (i * times + t) * s.c);
    }
  }
  auto n = result(Shape{s.b, s.r, s.c * times}, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [rows, c = s.c, times](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i) {
        for (int t = 0; t < times; ++t) {
          for (int j = 0; j < c; ++j) g[i * c + j] += self.grad[(i * times + t) * c + j];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor index_rows(const Tensor& x, const std::vector<int>& rows) {
  const auto& s = x.shape();
  for (int r : rows) require(0 <= r && r < s.r, "index_rows: row out of range");
  const int R = static_cast<int>(rows.size());
  std::vector<double> y(static_cast<std::size_t>(s.b) * R * s.c);
  const auto& xv = x.node()->value;
  for (int b = 0; b < s.b; ++b) {
    for (int i = 0; i < R; ++i) {
      std::copy_n(xv.data() + (static_cast<std::size_t>(b) * s.r + rows[i]) * s.c, s.c,
                  y.data() + (static_cast<std::size_t>(b) * R + i) * s.c);
    }
  }
  auto n = result(Shape{s.b, R, s.c}, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s, rows, R](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (int b = 0; b < s.b; ++b) {
        for (int i = 0; i < R; ++i) {
          for (int j = 0; j < s.c; ++j) {
            g[(static_cast<std::size_t>(b) * s.r + rows[i]) * s.c + j] +=
                self.grad[(static_cast<std::size_t>(b) * R + i) * s.c + j];
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& row_per_batch) {
  const auto& s = x.shape();
  require(row_per_batch.size() == static_cast<std::size_t>(s.b), "gather_rows: index count");
  for (int r : row_per_batch) require(0 <= r && r < s.r, "gather_rows: row out of range");
  std::vector<double> y(static_cast<std::size_t>(s.b) * s.c);
  const auto& xv = x.node()->value;
  for (int b = 0; b < s.b; ++b) {
    std::copy_n(xv.data() + (static_cast<std::size_t>(b) * s.r + row_per_batch[b]) * s.c, s.c,
                y.data() + static_cast<std::size_t>(b) * s.c);
  }
  auto n = result(Shape{s.b, 1, s.c}, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s, row_per_batch](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (int b = 0; b < s.b; ++b) {
        for (int j = 0; j < s.c; ++j) {
          g[(static_cast<std::size_t>(b) * s.r + row_per_batch[b]) * s.c + j] +=
              self.grad[static_cast<std::size_t>(b) * s.c + j];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor where_rows(const Tensor& x, const std::vector<std::uint8_t>& keep, const Tensor& fill) {
  const auto& s = x.shape();
  const std::size_t rows = static_cast<std::size_t>(s.b) * s.r;
  require(keep.size() == rows, "where_rows: mask size");
  require(fill.numel() == static_cast<std::size_t>(s.c), "where_rows: fill size");
  std::vector<double> y(x.node()->value);
  const auto& fv = fill.node()->value;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!keep[i]) std::copy_n(fv.data(), s.c, y.data() + i * s.c);
  }
  auto n = result(s, std::move(y), x, fill);
  if (n->requires_grad) {
    n->backward_fn = [rows, c = s.c, keep](Node& self) {
      Node& px = *self.parents[0];
      Node& pf = *self.parents[1];
      double* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
      double* gf = pf.requires_grad ? pf.ensure_grad().data() : nullptr;
      for (std::size_t i = 0; i < rows; ++i) {
        for (int j = 0; j < c; ++j) {
          const double g = self.grad[i * c + j];
          if (keep[i]) {
            if (gx) gx[i * c + j] += g;
          } else if (gf) {
            gf[j] += g;
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor masked_mean_rows(const Tensor& x, const std::vector<std::uint8_t>& mask) {
  const auto& s = x.shape();
  require(mask.size() == static_cast<std::size_t>(s.b) * s.r, "masked_mean_rows: mask size");
  std::vector<double> y(static_cast<std::size_t>(s.b) * s.c, 0.0);
  std::vector<double> inv(s.b, 0.0);
  const auto& xv = x.node()->value;
  for (int b = 0; b < s.b; ++b) {
    int cnt = 0;
    for (int r = 0; r < s.r; ++r) {
      if (!mask[static_cast<std::size_t>(b) * s.r + r]) continue;
      ++cnt;
      for (int j = 0; j < s.c; ++j) {
        y[static_cast<std::size_t>(b) * s.c + j] += xv[(static_cast<std::size_t>(b) * s.r + r) * s.c + j];
      }
    }
    if (cnt > 0) {
      inv[b] = 1.0 / cnt;
      for (int j = 0; j < s.c; ++j) y[static_cast<std::size_t>(b) * s.c + j] *= inv[b];
    }
  }
  auto n = result(Shape{s.b, 1, s.c}, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s, mask, inv = std::move(inv)](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (int b = 0; b < s.b; ++b) {
        for (int r = 0; r < s.r; ++r) {
          if (!mask[static_cast<std::size_t>(b) * s.r + r]) continue;
          for (int j = 0; j < s.c; ++j) {
            g[(static_cast<std::size_t>(b) * s.r + r) * s.c + j] +=
                inv[b] * self.grad[static_cast<std::size_t>(b) * s.c + j];
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor mean_rows(const Tensor& x) {
  return masked_mean_rows(x, std::vector<std::uint8_t>(static_cast<std::size_t>(x.b()) * x.r(), 1));
}

Tensor cumsum_rows(const Tensor& x) {
  const auto& s = x.shape();
  std::vector<double> y(x.node()->value);
  for (int b = 0; b < s.b; ++b) {
    for (int r = 1; r < s.r; ++r) {
      for (int j = 0; j < s.c; ++j) {
        const std::size_t i = (static_cast<std::size_t>(b) * s.r + r) * s.c + j;
        y[i] += y[i - s.c];
      }
    }
  }
  auto n = result(s, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (int b = 0; b < s.b; ++b) {
        for (int j = 0; j < s.c; ++j) {
          double acc = 0.0;
          for (int r = s.r - 1; r >= 0; --r) {
            const std::size_t i = (static_cast<std::size_t>(b) * s.r + r) * s.c + j;
            acc += self.grad[i];
            g[i] += acc;
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor rotate_xy(const Tensor& x, const std::vector<double>& cos_b, const std::vector<double>& sin_b) {
  const auto& s = x.shape();
  require(s.c % 2 == 0, "rotate_xy: odd channel count");
  require(cos_b.size() == static_cast<std::size_t>(s.b) && sin_b.size() == cos_b.size(),
          "rotate_xy: angle count");
  const std::size_t per_b = static_cast<std::size_t>(s.r) * s.c;
  std::vector<double> y(x.numel());
  const auto& xv = x.node()->value;
  for (int b = 0; b < s.b; ++b) {
    const double c = cos_b[b];
    const double sn = sin_b[b];
    for (std::size_t i = b * per_b; i < (b + 1) * per_b; i += 2) {
      y[i] = c * xv[i] - sn * xv[i + 1];
      y[i + 1] = sn * xv[i] + c * xv[i + 1];
    }
  }
  auto n = result(s, std::move(y), x);
  if (n->requires_grad) {
    n->backward_fn = [s, per_b, cos_b, sin_b](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (int b = 0; b < s.b; ++b) {
        const double c = cos_b[b];
        const double sn = sin_b[b];
        for (std::size_t i = b * per_b; i < (b + 1) * per_b; i += 2) {
          g[i] += c * self.grad[i] + sn * self.grad[i + 1];
          g[i + 1] += -sn * self.grad[i] + c * self.grad[i + 1];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor selective_scan(const Tensor& a, const Tensor& g, const Tensor& u) {
  const auto& s = a.shape();
  require(g.shape() == s && u.shape() == s, "selective_scan: shape mismatch");
  const auto& av = a.node()->value;
  const auto& gv = g.node()->value;
  const auto& uv = u.node()->value;
  std::vector<double> h(a.numel());
  for (int b = 0; b < s.b; ++b) {
    for (int j = 0; j < s.c; ++j) {
      double prev = 0.0;
      for (int t = 0; t < s.r; ++t) {
        const std::size_t i = (static_cast<std::size_t>(b) * s.r + t) * s.c + j;
        prev = av[i] * prev + gv[i] * uv[i];
        h[i] = prev;
      }
    }
  }
  count_macs(2 * a.numel());
  auto n = result(s, std::move(h), a, g, u);
  if (n->requires_grad) {
    n->backward_fn = [s](Node& self) {
      Node& pa = *self.parents[0];
      Node& pg = *self.parents[1];
      Node& pu = *self.parents[2];
      double* ga = pa.requires_grad ? pa.ensure_grad().data() : nullptr;
      double* gg = pg.requires_grad ? pg.ensure_grad().data() : nullptr;
      double* gu = pu.requires_grad ? pu.ensure_grad().data() : nullptr;
      for (int b = 0; b < s.b; ++b) {
        for (int j = 0; j < s.c; ++j) {
          double carry = 0.0;
          for (int t = s.r - 1; t >= 0; --t) {
            const std::size_t i = (static_cast<std::size_t>(b) * s.r + t) * s.c + j;
            const double dh = self.grad[i] + carry;
            const double hprev = t > 0 ? self.value[i - s.c] : 0.0;
            if (ga) ga[i] += dh * hprev;
            if (gg) gg[i] += dh * pu.value[i];
            if (gu) gu[i] += dh * pg.value[i];
            carry = dh * pa.value[i];
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.node()->value) acc += v;
  auto n = result(Shape{}, std::vector<double>{acc}, x);
  if (n->requires_grad) {
    n->backward_fn = [](Node& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (double& v : g) v += self.grad[0];
    };
  }
  return Tensor(n);
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor detach(const Tensor& x) { return Tensor(make_node(x.shape(), x.node()->value)); }

}  // namespace prf::ag
