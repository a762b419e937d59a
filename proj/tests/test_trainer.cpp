/*
 * Copyright 2026 The MHP-Align Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mhp/error.hpp"
#include "mhp/synthgen.hpp"
#include "mhp/trainer.hpp"
#include "oracles.hpp"

namespace mhp {
namespace {

TEST(Config, DefaultsFollowTheUsualSetting) {
  const RunConfig c;
  EXPECT_EQ(c.model.learning_rate, 1e-3);
  EXPECT_EQ(c.model.ot.learning_rate, 5e-5);
  EXPECT_EQ(c.model.ot.hidden, 500u);
  EXPECT_EQ(c.model.triple_batch, 4096u);
  EXPECT_EQ(c.model.detect.feature_dim(), 30u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, KeyValueRoundTrip) {
  RunConfig c;
  c.model.dim = 48;
  c.model.nca.alpha = 0.1 + 0.2;
  c.model.use_ot = false;
  c.model.dangling_loss = DanglingLoss::kBackgroundRanking;
  c.data = "some/dir";
  oracle::TempDir dir;
  write_key_values(to_key_values(c), dir / "c.kv");
  RunConfig back;
  apply_settings(back, read_key_values(dir / "c.kv"));
  EXPECT_EQ(to_key_values(back), to_key_values(c));
  EXPECT_EQ(back.model.nca.alpha, c.model.nca.alpha);
  EXPECT_EQ(back.model.dangling_loss, DanglingLoss::kBackgroundRanking);
}

TEST(Config, EveryKeyIsSerialised) {
  const auto kv = to_key_values(RunConfig{});
  for (const auto& key : config_keys()) EXPECT_TRUE(kv.count(key)) << key;
  EXPECT_EQ(kv.size(), config_keys().size());
}

TEST(Config, FormatDoubleIsExact) {
  for (double v : {0.1, 1e-3, 5e-5, 1.0 / 3.0, 123456.789, -2.5e-300}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.001), "0.001");
}

TEST(Config, LaterSettingsOverrideEarlier) {
  RunConfig c;
  apply_settings(c, {{"dim", "20"}, {"patience", "4"}});
  apply_setting(c, "dim", "24");
  EXPECT_EQ(c.model.dim, 24u);
  EXPECT_EQ(c.patience, 4u);
  EXPECT_EQ(c.max_epochs, 100u);
}

TEST(Config, BadInputRejected) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "no_such_key", "1"), UsageError);
  EXPECT_THROW(apply_setting(c, "dim", "abc"), UsageError);
  EXPECT_THROW(apply_setting(c, "dim", "-3"), UsageError);
  EXPECT_THROW(apply_setting(c, "use_ot", "maybe"), UsageError);
  EXPECT_THROW(apply_setting(c, "dangling_loss", "xx"), UsageError);
  oracle::TempDir dir;
  oracle::write_file(dir / "bad.kv", "# ok\ndim = 3\nnot a pair\n");
  try {
    read_key_values(dir / "bad.kv");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos);
  }
}

TEST(Config, ValidationErrors) {
  RunConfig c;
  c.max_epochs = 0;
  try {
    validate(c);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("nothing to train"), std::string::npos);
  }
  c = {};
  c.patience = 0;
  EXPECT_THROW(validate(c), UsageError);
  c = {};
  c.model.learning_rate = 0.0;
  EXPECT_THROW(validate(c), UsageError);
  c = {};
  c.model.ot.learning_rate = -1.0;
  EXPECT_THROW(validate(c), UsageError);
}

TEST(EarlyStoppingTest, PatienceOneStopsAfterFirstDrop) {
  EarlyStopping s(1);
  EXPECT_TRUE(s.improved(0.5));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.improved(0.4));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best(), 0.5);
}

TEST(EarlyStoppingTest, TiesCountAsStaleAndImprovementResets) {
  EarlyStopping s(3);
  EXPECT_TRUE(s.improved(0.0));
  EXPECT_FALSE(s.improved(0.0));
  EXPECT_FALSE(s.improved(-0.1));
  EXPECT_FALSE(s.should_stop());
  EXPECT_TRUE(s.improved(0.2));
  EXPECT_FALSE(s.improved(0.1));
  EXPECT_FALSE(s.improved(0.1));
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.improved(0.2));
  EXPECT_TRUE(s.should_stop());
}

struct Small {
  Dataset dataset;
  DatasetSplit split;
  RunConfig config;

  Small() {
    SynthConfig c;
    c.n_matchable = 120;
    c.n_dangling_source = 30;
    c.n_dangling_target = 30;
    c.avg_degree = 6.0;
    c.dangling_degree = 3;
    auto p = generate(c);
    dataset = {std::move(p.source), std::move(p.target), std::move(p.seeds), std::move(p.source_dangling),
               std::move(p.target_dangling)};
    split = split_dataset(dataset.seeds, dataset.source_dangling, {}, 1);
    config.model.dim = 16;
    config.model.ot.hidden = 16;
    config.model.detect.classifier_hidden = 16;
    config.model.classifier_steps = 3;
    config.max_epochs = 6;
    config.patience = 2;
  }
};

TEST(Train, NeverReadsTestPartition) {
  Small s;
  const auto result = train(s.dataset, s.split, s.config);
  EXPECT_EQ(s.split.test_reads(), 0u);
  EXPECT_GE(result.best_epoch, 1u);
  EXPECT_LE(result.history.size(), 6u);
}

TEST(Train, StopsAfterPatienceAndKeepsBest) {
  Small s;
  s.config.max_epochs = 40;
  std::size_t calls = 0;
  const auto result = train(s.dataset, s.split, s.config, [&](const EpochRecord&) { ++calls; });
  EXPECT_EQ(calls, result.history.size());
  // Replay the policy over the recorded validation scores.
  EarlyStopping replay(s.config.patience);
  std::size_t best_epoch = 0, stop = 0;
  for (const auto& r : result.history) {
    stop = r.epoch;
    if (replay.improved(r.validation_alignment.f1)) best_epoch = r.epoch;
    else if (replay.should_stop()) break;
  }
  EXPECT_EQ(result.best_epoch, best_epoch);
  EXPECT_EQ(result.history.size(), stop);
  EXPECT_EQ(result.best_f1, replay.best());
}

TEST(Train, IdenticalRunsAgree) {
  Small a, b;
  const auto ra = train(a.dataset, a.split, a.config);
  const auto rb = train(b.dataset, b.split, b.config);
  EXPECT_EQ(ra.best_epoch, rb.best_epoch);
  EXPECT_EQ(ra.best_f1, rb.best_f1);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) EXPECT_EQ(ra.history[i].stats, rb.history[i].stats);
  EXPECT_EQ(to_checkpoint(ra.best), to_checkpoint(rb.best));
}

TEST(Train, LogRowMatchesHeader) {
  EpochRecord r;
  r.epoch = 3;
  const auto header = training_log_header();
  const auto row = training_log_row(r);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.substr(0, 2), "3,");
}

}  // namespace
}  // namespace mhp
