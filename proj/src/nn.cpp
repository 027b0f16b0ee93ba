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

#include "prf/nn.hpp"

#include <cmath>

#include "prf/error.hpp"

namespace prf::nn {

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<double> init) {
  if (contains(name)) throw ContractError("duplicate parameter " + name);
  Tensor t = Tensor::parameter(shape, std::move(init));
  index_[name] = items_.size();
  items_.emplace_back(name, t);
  return t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return items_[it->second].second;
}

std::vector<std::pair<std::string, Tensor>> ParamStore::with_prefix(const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& item : items_) {
    if (item.first.rfind(prefix, 0) == 0) out.push_back(item);
  }
  return out;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& item : items_) n += item.second.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& item : items_) item.second.zero_grad();
}

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng, bool bias) {
  const double a = std::sqrt(6.0 / (in + out));
  std::vector<double> init(static_cast<std::size_t>(in) * out);
  for (double& x : init) x = rng.uniform(-a, a);
  w = ps.add(name + ".w", Shape{1, in, out}, std::move(init));
  if (bias) b = ps.add(name + ".b", Shape{1, 1, out}, std::vector<double>(out, 0.0));
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, int width)
    : gamma(ps.add(name + ".gamma", Shape{1, 1, width}, std::vector<double>(width, 1.0))),
      beta(ps.add(name + ".beta", Shape{1, 1, width}, std::vector<double>(width, 0.0))) {}

Mlp::Mlp(ParamStore& ps, const std::string& name, int in, int hidden, int out, Rng& rng)
    : fc1(ps, name + ".fc1", in, hidden, rng),
      ln(ps, name + ".ln", hidden),
      fc2(ps, name + ".fc2", hidden, out, rng) {}

AttentionBlock::AttentionBlock(ParamStore& ps, const std::string& name, int width, int nheads,
                               Rng& rng)
    : q(ps, name + ".q", width, width, rng),
      k(ps, name + ".k", width, width, rng),
      v(ps, name + ".v", width, width, rng),
      o(ps, name + ".o", width, width, rng),
      ln(ps, name + ".ln", width),
      heads(nheads) {}

Tensor AttentionBlock::operator()(const Tensor& x, const Tensor& ctx, const ag::AttnMask& mask) const {
  Tensor att = ag::attention(q(x), k(ctx), v(ctx), heads, mask);
  return ln(ag::add(x, o(att)));
}

FeedForward::FeedForward(ParamStore& ps, const std::string& name, int width, int hidden, Rng& rng)
    : fc1(ps, name + ".fc1", width, hidden, rng),
      fc2(ps, name + ".fc2", hidden, width, rng),
      ln(ps, name + ".ln", width) {}

Tensor embedding_table(ParamStore& ps, const std::string& name, int rows, int width, Rng& rng) {
  std::vector<double> init(static_cast<std::size_t>(rows) * width);
  for (double& x : init) x = rng.normal(0.0, 1.0);
  return ps.add(name, Shape{1, rows, width}, std::move(init));
}

}  // namespace prf::nn
