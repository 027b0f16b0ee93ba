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

// Minimal reverse-mode automatic differentiation over rank-3 double tensors.
//
// Every tensor has shape (b, r, c): a batch of row-major r x c matrices.
// Lower-rank data uses b = 1 and/or r = 1. Ops record a backward closure only
// while gradient recording is enabled and at least one input requires a
// gradient, so inference paths allocate no graph.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prf::ag {

struct Shape {
  int b = 1;
  int r = 1;
  int c = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(b) * static_cast<std::size_t>(r) *
           static_cast<std::size_t>(c);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int b() const { return shape().b; }
  int r() const { return shape().r; }
  int c() const { return shape().c; }
  std::size_t numel() const { return shape().numel(); }

  std::span<const double> data() const;
  /// Writable storage. Only meaningful on leaves; mutating an interior node
  /// after its consumers were recorded invalidates their gradients.
  std::span<double> mutable_data();
  std::vector<double> to_vector() const;
  double item() const;
  double at(int bi, int ri, int ci) const;

  bool requires_grad() const;
  /// Gradient buffer; empty until a backward pass reaches this tensor.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Backpropagate from a single-element tensor.
  void backward() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

/// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Multiply-accumulate counter. Counters nest: every active counter in the
/// current thread observes every counted op.
class OpCounter {
 public:
  OpCounter();
  ~OpCounter();
  OpCounter(const OpCounter&) = delete;
  OpCounter& operator=(const OpCounter&) = delete;

  std::uint64_t macs() const { return macs_; }

 private:
  friend void count_macs(std::uint64_t);
  std::uint64_t macs_ = 0;
  OpCounter* parent_;
};

void count_macs(std::uint64_t n);

/// Key-side mask for attention. `key_valid` is empty (all valid) or holds
/// one flag per (query batch, key row).
struct AttnMask {
  std::vector<std::uint8_t> key_valid;
  bool causal = false;
};

// Shape-preserving elementwise ops. Binary ops broadcast any dimension of
// size 1 against the other operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor smooth_l1(const Tensor& a, double beta);
/// log(max(a, floor)); gradient is zero where the clamp is active.
Tensor log_clamped(const Tensor& a, double floor);

/// y = x W + b with x (B, R, K), W (1, K, M), b (1, 1, M) or undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
/// Normalizes over the last dimension; gamma and beta are (1, 1, C).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
/// Softmax over the last dimension.
Tensor softmax(const Tensor& x);

/// Multi-head scaled dot-product attention. q is (B, Rq, C); k and v are
/// (B, Rk, C) or (1, Rk, C) shared across the batch. Query rows whose keys
/// are all masked produce zeros.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                 const AttnMask& mask = {});

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int r0, int r1);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor reshape(const Tensor& x, Shape shape);
/// Tiles the last dimension: (B, R, C) -> (B, R, C * times).
Tensor repeat_cols(const Tensor& x, int times);
/// Picks rows `rows` from every batch entry: (B, R, C) -> (B, |rows|, C).
Tensor index_rows(const Tensor& x, const std::vector<int>& rows);
/// Picks one row per batch entry: (B, R, C) -> (B, 1, C).
Tensor gather_rows(const Tensor& x, const std::vector<int>& row_per_batch);
/// Rows where `keep` is 0 are replaced by the (1, 1, C) `fill` row.
Tensor where_rows(const Tensor& x, const std::vector<std::uint8_t>& keep,
                  const Tensor& fill);
/// Mean over rows with weight mask (B, R); empty-mask batches give zeros.
Tensor masked_mean_rows(const Tensor& x, const std::vector<std::uint8_t>& mask);
Tensor mean_rows(const Tensor& x);
Tensor cumsum_rows(const Tensor& x);
/// Rotates consecutive (x, y) column pairs of batch entry i by angle
/// (cos_i, sin_i).
Tensor rotate_xy(const Tensor& x, const std::vector<double>& cos_b,
                 const std::vector<double>& sin_b);
/// h_t = a_t * h_{t-1} + g_t * u_t along rows, h_{-1} = 0.
Tensor selective_scan(const Tensor& a, const Tensor& g, const Tensor& u);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Same values, no gradient path.
Tensor detach(const Tensor& x);

}  // namespace prf::ag
