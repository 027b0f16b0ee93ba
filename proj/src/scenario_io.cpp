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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "prf/error.hpp"
#include "prf/scenario.hpp"

namespace prf {

namespace {

void put_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::string encode(const Scenario& s) {
  std::string line;
  line += "id=" + s.id;
  line += "\tmap=" + std::to_string(s.map.num_polylines) + "," + std::to_string(s.map.num_points) + "," +
          std::to_string(s.map.channels) + "|";
  for (std::size_t i = 0; i < s.map.data.size(); ++i) {
    if (i) line += ' ';
    put_double(line, s.map.data[i]);
  }
  line += "\tagents=" + std::to_string(s.num_agents) + "," + std::to_string(s.num_steps) + "," +
          std::to_string(kAgentChannels) + "|";
  for (std::size_t i = 0; i < s.states.size(); ++i) {
    if (i) line += ' ';
    put_double(line, s.states[i]);
  }
  line += "\tmask=" + std::to_string(s.num_agents) + "," + std::to_string(s.num_steps) + "|";
  for (auto v : s.valid) line += v ? '1' : '0';
  line += "\ttargets=";
  for (std::size_t i = 0; i < s.target_ids.size(); ++i) {
    if (i) line += ' ';
    line += std::to_string(s.target_ids[i]);
  }
  line += "\tsplit_index=" + std::to_string(s.split_index);
  return line;
}

class LineParser {
 public:
  LineParser(std::string_view line, int lineno) : line_(line), lineno_(lineno) {}

  /// Value of the next tab-separated field, which must be named `key`.
  std::string_view field(std::string_view key) {
    if (pos_ > line_.size()) fail("missing field '" + std::string(key) + "'");
    const auto end = std::min(line_.find('\t', pos_), line_.size());
    const std::string_view item = line_.substr(pos_, end - pos_);
    pos_ = end + 1;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || item.substr(0, eq) != key) {
      fail("expected field '" + std::string(key) + "'");
    }
    return item.substr(eq + 1);
  }

  void finish() const {
    if (pos_ <= line_.size()) fail("unexpected trailing fields");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(lineno_, what); }

  std::vector<int> ints(std::string_view text, char sep) const {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < text.size()) {
      const auto j = std::min(text.find(sep, i), text.size());
      int v = 0;
      const auto tok = text.substr(i, j - i);
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) fail("bad integer '" + std::string(tok) + "'");
      out.push_back(v);
      i = j + 1;
    }
    return out;
  }

  std::vector<double> doubles(std::string_view text, std::size_t expect) const {
    std::vector<double> out;
    out.reserve(expect);
    std::size_t i = 0;
    while (i < text.size()) {
      const auto j = std::min(text.find(' ', i), text.size());
      const std::string tok(text.substr(i, j - i));
      char* endp = nullptr;
      const double v = std::strtod(tok.c_str(), &endp);
      if (tok.empty() || endp != tok.c_str() + tok.size()) fail("bad number '" + tok + "'");
      out.push_back(v);
      i = j + 1;
    }
    if (out.size() != expect) fail("expected " + std::to_string(expect) + " values, got " + std::to_string(out.size()));
    return out;
  }

  /// Splits "<dims>|<payload>" and checks the dimension count.
  std::pair<std::vector<int>, std::string_view> shaped(std::string_view value, std::size_t ndims) const {
    const auto bar = value.find('|');
    if (bar == std::string_view::npos) fail("missing '|' after dimensions");
    auto dims = ints(value.substr(0, bar), ',');
    if (dims.size() != ndims) fail("expected " + std::to_string(ndims) + " dimensions");
    for (int d : dims) {
      if (d < 0) fail("negative dimension");
    }
    return {dims, value.substr(bar + 1)};
  }

 private:
  std::string_view line_;
  int lineno_;
  std::size_t pos_ = 0;
};

Scenario decode(std::string_view line, int lineno) {
  LineParser p(line, lineno);
  Scenario s;
  s.id = std::string(p.field("id"));

  auto [mdims, mdata] = p.shaped(p.field("map"), 3);
  s.map.num_polylines = mdims[0];
  s.map.num_points = mdims[1];
  s.map.channels = mdims[2];
  s.map.data = p.doubles(mdata, static_cast<std::size_t>(mdims[0]) * mdims[1] * mdims[2]);

  auto [adims, adata] = p.shaped(p.field("agents"), 3);
  if (adims[2] != kAgentChannels) p.fail("agent channel count must be " + std::to_string(kAgentChannels));
  s.num_agents = adims[0];
  s.num_steps = adims[1];
  s.states = p.doubles(adata, static_cast<std::size_t>(adims[0]) * adims[1] * adims[2]);

  auto [kdims, kdata] = p.shaped(p.field("mask"), 2);
  if (kdims[0] != s.num_agents || kdims[1] != s.num_steps) p.fail("mask dimensions disagree with agents");
  if (kdata.size() != static_cast<std::size_t>(kdims[0]) * kdims[1]) p.fail("mask length mismatch");
  s.valid.reserve(kdata.size());
  for (char ch : kdata) {
    if (ch != '0' && ch != '1') p.fail("mask characters must be 0 or 1");
    s.valid.push_back(ch == '1');
  }

  s.target_ids = p.ints(p.field("targets"), ' ');
  const auto split = p.ints(p.field("split_index"), ',');
  if (split.size() != 1) p.fail("split_index must be one integer");
  s.split_index = split[0];
  p.finish();

  try {
    s.validate();
  } catch (const DataError& e) {
    p.fail(e.what());
  }
  return s;
}

}  // namespace

void write_scenarios(const std::vector<Scenario>& scenarios, std::ostream& out) {
  out << kScenarioHeader << '\n';
  for (const auto& s : scenarios) {
    s.validate();
    if (s.id.find_first_of("\t\n") != std::string::npos) throw DataError("scenario id contains a tab or newline");
    out << encode(s) << '\n';
  }
  if (!out) throw std::runtime_error("write failed");
}

std::vector<Scenario> read_scenarios(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  if (line.rfind("prf-scenario ", 0) != 0) throw ParseError(1, "missing prf-scenario header");
  if (line != kScenarioHeader) throw VersionError("unsupported scenario schema '" + line + "'");
  std::vector<Scenario> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(decode(line, lineno));
  }
  return out;
}

void write_scenarios(const std::vector<Scenario>& scenarios, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_scenarios(scenarios, f);
}

std::vector<Scenario> read_scenarios(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  return read_scenarios(f);
}

void write_scenario(const Scenario& s, const std::filesystem::path& path) { write_scenarios({s}, path); }

Scenario read_scenario(const std::filesystem::path& path) {
  auto all = read_scenarios(path);
  if (all.size() != 1) throw DataError(path.string() + ": expected exactly one scenario");
  return std::move(all.front());
}

}  // namespace prf
