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

// mhp: dangling-aware entity alignment.
//
//   mhp gen      --out DIR [synthetic graph options]
//   mhp train    --data DIR --run DIR [--config FILE] [--set key=value ...]
//   mhp detect   --run DIR [--split test] [--out FILE]
//   mhp eval     --run DIR --setting relaxed|consolidated [--oracle-detector]
//   mhp hubness  --run DIR [--top-n N]
//   mhp report   --run DIR

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "mhp/checkpoint.hpp"
#include "mhp/error.hpp"
#include "mhp/eval.hpp"
#include "mhp/model.hpp"
#include "mhp/nn_search.hpp"
#include "mhp/synthgen.hpp"
#include "mhp/trainer.hpp"

namespace fs = std::filesystem;
using namespace mhp;

namespace {

class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw UsageError("run directory " + dir.string() + " is in use (remove " + path_.string() + " if stale)");
  }
  ~RunLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string fixed4(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string table(const std::string& title, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::ostringstream out;
  out << title << '\n';
  for (const auto& [k, v] : rows) out << "  " << std::left << std::setw(int(width)) << k << "  " << v << '\n';
  return out.str();
}

// Everything a post-training command needs from a run directory.
struct LoadedRun {
  RunConfig config;
  Dataset dataset;
  DatasetSplit split;
  ModelState model;
};

LoadedRun load_run(const fs::path& run, const std::string& data_override) {
  LoadedRun r;
  if (!fs::exists(run / "config.kv")) throw DataError("no config.kv in " + run.string());
  apply_settings(r.config, read_key_values(run / "config.kv"));
  if (!data_override.empty()) r.config.data = data_override;
  r.dataset = load_dataset(r.config.data);
  r.split = split_dataset(r.dataset.seeds, r.dataset.source_dangling, r.config.split, r.config.split_seed);
  r.model = from_checkpoint(load_checkpoint(run / "model.ckpt"));
  if (r.model.source.entities.rows() != r.dataset.source.entities.size() ||
      r.model.target.entities.rows() != r.dataset.target.entities.size() ||
      r.model.source.relations.rows() != r.dataset.source.relations.size() ||
      r.model.target.relations.rows() != r.dataset.target.relations.size()) {
    throw DataError("checkpoint does not match the data in " + r.config.data);
  }
  if (r.model.source.dim() != r.config.model.dim) throw DataError("checkpoint dim differs from config dim");
  return r;
}

const Partition& pick_partition(const DatasetSplit& split, const std::string& name) {
  if (name == "train") return split.train();
  if (name == "validation") return split.validation();
  if (name == "test") return split.test();
  throw UsageError("unknown split '" + name + "' (expected train, validation or test)");
}

int cmd_gen(const SynthConfig& config, const fs::path& out) {
  const auto pair = generate(config);
  write_synth(pair, config, out);
  std::cout << table("generated " + out.string(),
                     {{"source entities", std::to_string(pair.source.entities.size())},
                      {"target entities", std::to_string(pair.target.entities.size())},
                      {"source triples", std::to_string(pair.source.triples.size())},
                      {"target triples", std::to_string(pair.target.triples.size())},
                      {"seed pairs", std::to_string(pair.seeds.pairs.size())},
                      {"perturbed triples", std::to_string(pair.perturbed_triples)}});
  return 0;
}

int cmd_train(RunConfig config, const fs::path& run, bool verbose) {
  validate(config);
  if (config.data.empty()) throw UsageError("train: --data is required");
  std::vector<std::string> warnings;
  const Dataset dataset = load_dataset(config.data, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  const DatasetSplit split = split_dataset(dataset.seeds, dataset.source_dangling, config.split, config.split_seed);

  RunLock lock(run);
  write_key_values(to_key_values(config), run / "config.kv");
  std::ofstream log(run / "train_log.csv", std::ios::binary);
  log << training_log_header() << '\n';
  const auto result = train(dataset, split, config, [&](const EpochRecord& rec) {
    log << training_log_row(rec) << '\n' << std::flush;
    if (verbose) {
      std::cerr << "epoch " << rec.epoch << "  val detection F1 " << fixed4(rec.validation_detection.f1)
                << "  val two-step F1 " << fixed4(rec.validation_alignment.f1) << '\n';
    }
  });

  Checkpoint cp = to_checkpoint(result.best);
  cp.set_meta("best_epoch", std::to_string(result.best_epoch));
  save_checkpoint(cp, run / "model.ckpt");

  const auto& best = result.history[result.best_epoch - 1];
  KeyValues summary{{"best_epoch", std::to_string(result.best_epoch)},
                    {"epochs_run", std::to_string(result.history.size())},
                    {"val_alignment_f1", format_double(best.validation_alignment.f1)},
                    {"val_detection_f1", format_double(best.validation_detection.f1)},
                    {"test_reads", std::to_string(split.test_reads())}};
  write_key_values(summary, run / "train_summary.kv");
  std::cout << table("trained " + run.string(), {{"epochs run", summary["epochs_run"]},
                                                 {"best epoch", summary["best_epoch"]},
                                                 {"val two-step F1", fixed4(best.validation_alignment.f1)},
                                                 {"val detection F1", fixed4(best.validation_detection.f1)}});
  return 0;
}

int cmd_detect(const fs::path& run, const std::string& data, const std::string& split_name, fs::path out) {
  RunLock lock(run);
  const auto r = load_run(run, data);
  const Partition& part = pick_partition(r.split, split_name);
  const auto sources = evaluation_sources(part);
  const auto decisions = detect(r.model, r.config.model, sources, default_detector(r.config.model));
  if (out.empty()) out = run / ("detections_" + split_name + ".tsv");
  std::ostringstream tsv;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    tsv << r.dataset.source.entities.name(sources[i]) << '\t' << format_double(decisions.probability[i]) << '\t'
        << (decisions.dangling[i] ? 1 : 0) << '\n';
  }
  write_text(out, tsv.str());
  std::cout << "wrote " << sources.size() << " detections to " << out.string() << " (threshold "
            << format_double(decisions.threshold) << ")\n";
  return 0;
}

void write_neighbors(const LoadedRun& r, const Partition& part, const CandidatePool& pool, const fs::path& out) {
  const auto mapped = map_rows(r.model.mapper.m, gather_rows(r.model.source.entities, [&] {
                                 std::vector<EntityId> ids;
                                 for (const auto& p : part.seeds) ids.push_back(p.source);
                                 return ids;
                               }()));
  auto sims = nn::similarity_matrix(mapped, r.model.target.entities);
  for (EntityId t : pool.excluded) {
    for (std::size_t q = 0; q < sims.rows(); ++q) sims(q, t) = -std::numeric_limits<double>::infinity();
  }
  const auto lists = nn::top_k(sims, 10);
  std::ostringstream tsv;
  for (std::size_t q = 0; q < lists.size(); ++q) {
    const auto& name = r.dataset.source.entities.name(part.seeds[q].source);
    for (std::size_t i = 0; i < lists[q].neighbors.size(); ++i) {
      const auto& n = lists[q].neighbors[i];
      tsv << name << '\t' << i + 1 << '\t' << r.dataset.target.entities.name(n.id) << '\t'
          << format_double(n.similarity) << '\n';
    }
  }
  write_text(out, tsv.str());
}

int cmd_eval(const fs::path& run, const std::string& data, const std::string& setting, bool oracle,
             const std::string& split_name, const fs::path& neighbors) {
  if (setting != "relaxed" && setting != "consolidated") {
    throw UsageError("unknown setting '" + setting + "' (expected relaxed or consolidated)");
  }
  RunLock lock(run);
  const auto r = load_run(run, data);
  const Partition& part = pick_partition(r.split, split_name);
  const auto pool = candidate_pool(r.dataset, r.config);
  const auto& m = r.model;
  KeyValues kv{{"setting", setting}, {"split", split_name}};
  std::vector<std::pair<std::string, std::string>> rows;
  std::string stem = "eval_" + setting;
  if (setting == "relaxed") {
    if (part.seeds.empty()) throw DataError("relaxed evaluation needs matchable pairs in the " + split_name + " split");
    const auto rep = relaxed_eval(m.mapper, m.source.entities, m.target.entities, part.seeds, pool);
    kv["queries"] = std::to_string(rep.queries);
    kv["hits_at_1"] = format_double(rep.hits_at_1);
    kv["hits_at_10"] = format_double(rep.hits_at_10);
    kv["mrr"] = format_double(rep.mrr);
    rows = {{"queries", kv["queries"]},
            {"H@1", fixed4(rep.hits_at_1)},
            {"H@10", fixed4(rep.hits_at_10)},
            {"MRR", fixed4(rep.mrr)}};
  } else {
    std::vector<bool> predicted;
    std::string detector;
    if (oracle) {
      predicted = evaluation_labels(part);
      detector = "oracle";
      stem += "_oracle";
    } else {
      const auto kind = default_detector(r.config.model);
      predicted = detect(m, r.config.model, evaluation_sources(part), kind).dangling;
      detector = kind == DetectorKind::kClassifier ? "classifier" : "nearest_distance";
    }
    const auto rep = consolidated_eval(m.mapper, m.source.entities, m.target.entities, part, predicted, pool);
    kv["detector"] = detector;
    kv["detection_precision"] = format_double(rep.detection.precision);
    kv["detection_recall"] = format_double(rep.detection.recall);
    kv["detection_f1"] = format_double(rep.detection.f1);
    kv["alignment_precision"] = format_double(rep.alignment.precision);
    kv["alignment_recall"] = format_double(rep.alignment.recall);
    kv["alignment_f1"] = format_double(rep.alignment.f1);
    rows = {{"detector", detector},
            {"detection P / R / F1", fixed4(rep.detection.precision) + " / " + fixed4(rep.detection.recall) + " / " +
                                         fixed4(rep.detection.f1)},
            {"two-step P / R / F1", fixed4(rep.alignment.precision) + " / " + fixed4(rep.alignment.recall) + " / " +
                                        fixed4(rep.alignment.f1)}};
  }
  write_key_values(kv, run / (stem + ".kv"));
  const auto text = table(setting + " evaluation (" + split_name + ")", rows);
  write_text(run / (stem + ".txt"), text);
  std::cout << text;
  if (!neighbors.empty()) write_neighbors(r, part, pool, neighbors);
  return 0;
}

int cmd_hubness(const fs::path& run, const std::string& data, std::size_t top_n) {
  RunLock lock(run);
  const auto r = load_run(run, data);
  const auto sources = evaluation_sources(r.split.test());
  std::vector<EntityId> top1;
  if (!sources.empty()) {
    top1 = nn::nearest(map_rows(r.model.mapper.m, gather_rows(r.model.source.entities, sources)),
                       r.model.target.entities);
  }
  const auto rep = nn::hubness(top1, top_n);
  std::ostringstream text, csv;
  text << "top-1 occurrence counts over " << rep.queries << " test sources\n";
  text << "  rank  count  target\n";
  for (std::size_t i = 0; i < rep.top.size(); ++i) {
    text << "  " << std::setw(4) << i + 1 << "  " << std::setw(5) << rep.top[i].second << "  "
         << r.dataset.target.entities.name(rep.top[i].first) << '\n';
  }
  csv << "target,count\n";
  for (const auto& [id, count] : rep.counts) csv << r.dataset.target.entities.name(id) << ',' << count << '\n';
  write_text(run / "hubness.txt", text.str());
  write_text(run / "hubness_distribution.csv", csv.str());
  write_key_values({{"queries", std::to_string(rep.queries)},
                    {"distinct_targets", std::to_string(rep.counts.size())},
                    {"max_count", std::to_string(rep.max_count())}},
                   run / "hubness.kv");
  std::cout << text.str();
  return 0;
}

int cmd_report(const fs::path& run) {
  RunLock lock(run);
  std::ostringstream out;
  KeyValues merged;
  for (const char* stem : {"train_summary", "eval_relaxed", "eval_consolidated", "eval_consolidated_oracle", "hubness"}) {
    const auto path = run / (std::string(stem) + ".kv");
    if (!fs::exists(path)) continue;
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [k, v] : read_key_values(path)) {
      rows.emplace_back(k, v);
      merged[std::string(stem) + "." + k] = v;
    }
    out << table(stem, rows);
  }
  if (merged.empty()) throw DataError("nothing to report in " + run.string() + "; run train and eval first");
  write_key_values(merged, run / "report.kv");
  write_text(run / "report.txt", out.str());
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dangling-aware entity alignment"};
  app.require_subcommand(1);

  SynthConfig synth;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic KG pair");
  gen->add_option("--out", gen_out, "Output data directory")->required();
  gen->add_option("--matchable", synth.n_matchable);
  gen->add_option("--dangling-source", synth.n_dangling_source);
  gen->add_option("--dangling-target", synth.n_dangling_target);
  gen->add_option("--relations", synth.n_relations);
  gen->add_option("--avg-degree", synth.avg_degree);
  gen->add_option("--noise", synth.edge_noise);
  gen->add_option("--hub-exponent", synth.hub_exponent);
  gen->add_option("--dangling-degree", synth.dangling_degree, "Triples per dangling entity (0: round(avg-degree))");
  gen->add_option("--specific-relations", synth.specific_relations);
  gen->add_option("--specific-share", synth.specific_share);
  gen->add_option("--seed", synth.rng_seed);

  std::string run_dir, data_dir, config_file, dangling_loss, split_name = "test", out_file, setting, neighbors;
  std::vector<std::string> sets;
  std::optional<std::size_t> max_epochs, patience;
  std::optional<std::uint64_t> seed;
  bool no_ot = false, no_nca = false, no_classifier = false, verbose = false, oracle = false;
  std::size_t top_n = 20;

  auto* tr = app.add_subcommand("train", "Train a model with early stopping");
  tr->add_option("--data", data_dir, "Data directory");
  tr->add_option("--run", run_dir, "Run directory")->required();
  tr->add_option("--config", config_file, "Flat key = value config file");
  tr->add_option("--set", sets, "Override a config key (key=value)");
  tr->add_option("--max-epochs", max_epochs);
  tr->add_option("--patience", patience);
  tr->add_option("--seed", seed);
  tr->add_flag("--no-ot", no_ot, "Disable the optimal-transport alignment");
  tr->add_flag("--no-nca", no_nca, "Disable the NCA alignment loss");
  tr->add_flag("--no-classifier", no_classifier, "Detect with nearest-neighbour distance instead of the classifier");
  tr->add_option("--dangling-loss", dangling_loss, "mr or br");
  tr->add_flag("-v,--verbose", verbose, "Print per-epoch validation scores");

  auto* det = app.add_subcommand("detect", "Write dangling predictions");
  det->add_option("--run", run_dir)->required();
  det->add_option("--data", data_dir, "Override the data directory recorded in the run");
  det->add_option("--split", split_name, "train, validation or test");
  det->add_option("--out", out_file, "Output TSV");

  auto* ev = app.add_subcommand("eval", "Evaluate a trained run");
  ev->add_option("--run", run_dir)->required();
  ev->add_option("--data", data_dir);
  ev->add_option("--setting", setting, "relaxed or consolidated")->required();
  ev->add_option("--split", split_name);
  ev->add_flag("--oracle-detector", oracle, "Use ground-truth dangling labels in step one");
  ev->add_option("--neighbors", neighbors, "Write top-10 neighbours of test matchable sources to this TSV");

  auto* hub = app.add_subcommand("hubness", "Top-1 occurrence counts over test sources");
  hub->add_option("--run", run_dir)->required();
  hub->add_option("--data", data_dir);
  hub->add_option("--top-n", top_n);

  auto* rep = app.add_subcommand("report", "Collect the report files of a run");
  rep->add_option("--run", run_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(synth, gen_out);
    if (*tr) {
      RunConfig config;
      if (!config_file.empty()) apply_settings(config, read_key_values(config_file));
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
        apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
      }
      if (!data_dir.empty()) config.data = data_dir;
      if (max_epochs) config.max_epochs = *max_epochs;
      if (patience) config.patience = *patience;
      if (seed) config.model.seed = *seed;
      if (no_ot) config.model.use_ot = false;
      if (no_nca) config.model.use_nca = false;
      if (no_classifier) config.model.use_classifier = false;
      if (!dangling_loss.empty()) config.model.dangling_loss = dangling_loss_from_string(dangling_loss);
      return cmd_train(config, run_dir, verbose);
    }
    if (*det) return cmd_detect(run_dir, data_dir, split_name, out_file);
    if (*ev) return cmd_eval(run_dir, data_dir, setting, oracle, split_name, neighbors);
    if (*hub) return cmd_hubness(run_dir, data_dir, top_n);
    if (*rep) return cmd_report(run_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
