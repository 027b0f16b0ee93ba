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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "prf/error.hpp"
#include "prf/run_config.hpp"

namespace prf {
namespace {

namespace fs = std::filesystem;

std::string config_field(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

TEST(RunConfig, DefaultsAndOverrides) {
  const RunConfig d = parse_run_config("{}");
  EXPECT_EQ(d.train.epochs, 20);
  EXPECT_EQ(d.train.batch_size, 16);
  EXPECT_DOUBLE_EQ(d.train.lr, 0.003);
  EXPECT_DOUBLE_EQ(d.train.weight_decay, 0.01);
  EXPECT_EQ(d.train.model.history, d.data.history);
  const RunConfig c = parse_run_config(R"({
    "data": {"history": 20, "horizon": 30, "grammar": {"straight": 0.0, "curve": 0.5}},
    "model": {"width": 16, "dt": 5, "mixer": "gru"},
    "train": {"mode": "it:10", "rsts": false},
    "eval": {"lengths": [5, 10, 20], "length_policy": "pad"}})");
  EXPECT_EQ(c.train.model.history, 20);
  EXPECT_EQ(c.train.model.horizon, 30);
  EXPECT_EQ(c.train.model.interval, 5);
  EXPECT_EQ(c.train.model.mixer, MixerKind::Gru);
  EXPECT_DOUBLE_EQ(c.data.grammar.curve, 0.5);
  EXPECT_EQ(c.train.mode, TrainMode::It);
  EXPECT_EQ(c.train.it_length, 10);
  EXPECT_FALSE(c.train.rsts);
  EXPECT_EQ(c.eval_lengths(), (std::vector<int>{5, 10, 20}));
  EXPECT_EQ(c.length_policy, LengthPolicy::Pad);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = parse_run_config(R"({"model": {"width": 12, "mixer": "attention"}, "train": {"mode": "direct"}})");
  const RunConfig back = parse_run_config(run_config_json(c));
  EXPECT_EQ(back.train.model, c.train.model);
  EXPECT_EQ(back.train.mode, TrainMode::Direct);
  EXPECT_EQ(run_config_json(back), run_config_json(c));
}

TEST(RunConfig, ErrorsNameTheField) {
  EXPECT_EQ(config_field(R"({"model": {"widht": 8}})"), "model.widht");
  EXPECT_EQ(config_field(R"({"train": {"epochs": "many"}})"), "train.epochs");
  EXPECT_EQ(config_field(R"({"data": {"grammar": {"loop": 1}}})"), "data.grammar.loop");
  EXPECT_EQ(config_field(R"({"extras": {}})"), "extras");
  EXPECT_EQ(config_field("[1, 2"), "config");
  EXPECT_EQ(config_field(R"({"model": {"mixer": "lstm"}})"), "mixer");
  RunConfig c = parse_run_config(R"({"eval": {"lengths": [60]}})");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, ParseLengths) {
  EXPECT_EQ(parse_lengths("10,20,,30"), (std::vector<int>{10, 20, 30}));
  EXPECT_THROW(parse_lengths("10,x"), ConfigError);
  EXPECT_THROW(parse_lengths("4.5"), ConfigError);
  EXPECT_THROW(parse_lengths(""), ConfigError);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("prf_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    std::ofstream(path("run.json")) << R"({
      "data": {"num_scenarios": 6, "history": 12, "horizon": 6, "min_agents": 3, "max_agents": 4,
               "points_per_polyline": 4},
      "model": {"width": 8, "heads": 2, "enc_layers": 1, "modes": 3, "dt": 4, "rdm_layers": 1, "rpm_layers": 1},
      "train": {"epochs": 2, "batch_size": 3}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(PRF_CLI) + " " + args + " > " + path("stdout") + " 2> " + path("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream f(path(name));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, EndToEndPipelineIsDeterministic) {
  const std::string cfg = " --config " + path("run.json");
  ASSERT_EQ(run("gen-data" + cfg + " --seed 4 --out " + path("data.txt")), 0) << slurp("stderr");
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    ASSERT_EQ(run("train" + cfg + " --seed 2 --data " + path("data.txt") + " --out " + path(t + ".ckpt") +
                  " --loss-csv " + path(t + ".loss.csv")),
              0)
        << slurp("stderr");
    ASSERT_EQ(run("eval" + cfg + " --ckpt " + path(t + ".ckpt") + " --data " + path("data.txt") + " --out " +
                  path(t + ".report.csv")),
              0)
        << slurp("stderr");
  }
  EXPECT_EQ(slurp("a.loss.csv"), slurp("b.loss.csv"));
  EXPECT_EQ(slurp("a.report.csv"), slurp("b.report.csv"));
  EXPECT_EQ(slurp("a.ckpt"), slurp("b.ckpt"));
  const auto summary = nlohmann::json::parse(slurp("a.report.json"));
  EXPECT_EQ(summary["rows"].size(), 3u);
  EXPECT_TRUE(summary.contains("avg_delta"));

  ASSERT_EQ(run("profile --ckpt " + path("a.ckpt") + " --data " + path("data.txt") + " --runs 2"), 0);
  EXPECT_EQ(slurp("stdout").rfind("T_v,stages,cascade_macs", 0), 0u);
  ASSERT_EQ(run("dump-features --ckpt " + path("a.ckpt") + " --data " + path("data.txt") + " --length 4 --out " +
                path("dump")),
            0)
      << slurp("stderr");
  EXPECT_TRUE(fs::exists(path("dump.alignment.tsv")));
  ASSERT_EQ(run("plot --report a=" + path("a.report.csv") + " --full-length 12 --column MR_6 --out " +
                path("mr.svg")),
            0)
      << slurp("stderr");
  EXPECT_EQ(slurp("mr.svg").rfind("<svg", 0), 0u);
}

TEST_F(Cli, ExitCodes) {
  const std::string cfg = " --config " + path("run.json");
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("train --bogus"), 2);
  EXPECT_EQ(run("gen-data --out " + path("x.txt") + " --mixer lstm"), 2);
  std::ofstream(path("bad.json")) << R"({"model": {"depth": 3}})";
  EXPECT_EQ(run("gen-data --config " + path("bad.json") + " --out " + path("x.txt")), 2);
  EXPECT_NE(slurp("stderr").find("model.depth"), std::string::npos);

  std::ofstream(path("junk.txt")) << "not a scenario file\n";
  EXPECT_EQ(run("train" + cfg + " --data " + path("junk.txt") + " --out " + path("c.ckpt")), 3);
  EXPECT_EQ(run("train" + cfg + " --data " + path("missing.txt") + " --out " + path("c.ckpt")), 3);

  ASSERT_EQ(run("gen-data" + cfg + " --out " + path("data.txt")), 0);
  ASSERT_EQ(run("train" + cfg + " --epochs 0 --data " + path("data.txt") + " --out " + path("c.ckpt")), 0);
  EXPECT_EQ(run("eval" + cfg + " --ckpt " + path("c.ckpt") + " --data " + path("data.txt") + " --lengths 13 --out " +
                path("r.csv")),
            2);
  // A huge learning rate drives the loss non-finite.
  std::ofstream(path("hot.json")) << R"({
      "data": {"history": 12, "horizon": 6, "points_per_polyline": 4},
      "model": {"width": 8, "modes": 3, "dt": 4, "enc_layers": 1, "rdm_layers": 1, "rpm_layers": 1},
      "train": {"epochs": 50, "batch_size": 2, "lr": 1e300, "clip_norm": 1e300}})";
  EXPECT_EQ(run("train --config " + path("hot.json") + " --data " + path("data.txt") + " --out " + path("h.ckpt")), 4)
      << slurp("stderr");
}

}  // namespace
}  // namespace prf
