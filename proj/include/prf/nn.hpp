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

#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prf/autograd.hpp"
#include "prf/rng.hpp"

namespace prf::nn {

using ag::Shape;
using ag::Tensor;

/// Ordered registry of named parameter tensors.
///
/// Modules keep handles to the same underlying nodes, so writing through the
/// store (optimizer steps, checkpoint loads) is visible to every module.
class ParamStore {
 public:
  Tensor add(const std::string& name, Shape shape, std::vector<double> init);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<std::pair<std::string, Tensor>> with_prefix(const std::string& prefix) const;
  std::size_t num_values() const;

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Linear {
  Tensor w;
  Tensor b;

  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng, bool bias = true);
  Tensor operator()(const Tensor& x) const { return ag::linear(x, w, b); }
  int in() const { return w.r(); }
  int out() const { return w.c(); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, int width);
  Tensor operator()(const Tensor& x) const { return ag::layer_norm(x, gamma, beta); }
};

/// fc2(relu(LN(fc1(x)))).
struct Mlp {
  Linear fc1;
  LayerNorm ln;
  Linear fc2;

  Mlp() = default;
  Mlp(ParamStore& ps, const std::string& name, int in, int hidden, int out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return fc2(ag::relu(ln(fc1(x)))); }
};

/// Post-norm residual attention: LN(x + W_o Attn(W_q x, W_k ctx, W_v ctx)).
struct AttentionBlock {
  Linear q;
  Linear k;
  Linear v;
  Linear o;
  LayerNorm ln;
  int heads = 1;

  AttentionBlock() = default;
  AttentionBlock(ParamStore& ps, const std::string& name, int width, int heads, Rng& rng);
  Tensor operator()(const Tensor& x, const Tensor& ctx, const ag::AttnMask& mask = {}) const;
};

/// Post-norm residual two-layer perceptron: LN(x + fc2(relu(fc1(x)))).
struct FeedForward {
  Linear fc1;
  Linear fc2;
  LayerNorm ln;

  FeedForward() = default;
  FeedForward(ParamStore& ps, const std::string& name, int width, int hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const { return ln(ag::add(x, fc2(ag::relu(fc1(x))))); }
};

/// Learned (1, rows, width) table.
Tensor embedding_table(ParamStore& ps, const std::string& name, int rows, int width, Rng& rng);

}  // namespace prf::nn
