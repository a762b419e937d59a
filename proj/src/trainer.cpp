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

#include "mhp/trainer.hpp"

#include <charconv>
#include <chrono>
#include <concepts>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mhp/error.hpp"

namespace mhp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw UsageError("config: bad value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError("config: bad boolean '" + text + "' for " + key);
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MHP_FIELD(member)                                                                                   \
  Field {                                                                                                   \
    [](RunConfig& c, const std::string& k, const std::string& v) { assign(c.member, k, v); },               \
        [](const RunConfig& c) { return show(c.member); }                                                   \
  }

template <std::unsigned_integral U>
void assign(U& out, const std::string& k, const std::string& v) {
  out = parse_number<U>(k, v);
}
void assign(double& out, const std::string& k, const std::string& v) { out = parse_number<double>(k, v); }
void assign(bool& out, const std::string& k, const std::string& v) { out = parse_bool(k, v); }
void assign(std::string& out, const std::string&, const std::string& v) { out = v; }
void assign(DanglingLoss& out, const std::string&, const std::string& v) { out = dangling_loss_from_string(v); }

template <std::unsigned_integral U>
std::string show(U v) {
  return std::to_string(v);
}
std::string show(double v) { return format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }
std::string show(DanglingLoss v) { return to_string(v); }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"dim", MHP_FIELD(model.dim)},
      {"learning_rate", MHP_FIELD(model.learning_rate)},
      {"triple_margin", MHP_FIELD(model.triple_margin)},
      {"negatives", MHP_FIELD(model.negatives)},
      {"triple_batch", MHP_FIELD(model.triple_batch)},
      {"mapping_batch", MHP_FIELD(model.mapping_batch)},
      {"nca_batch", MHP_FIELD(model.nca_batch)},
      {"dangling_batch", MHP_FIELD(model.dangling_batch)},
      {"classifier_batch", MHP_FIELD(model.classifier_batch)},
      {"min_batches", MHP_FIELD(model.min_batches)},
      {"classifier_steps", MHP_FIELD(model.classifier_steps)},
      {"ot_rounds", MHP_FIELD(model.ot_rounds)},
      {"nca_alpha", MHP_FIELD(model.nca.alpha)},
      {"nca_beta", MHP_FIELD(model.nca.beta)},
      {"ot_n_critic", MHP_FIELD(model.ot.n_critic)},
      {"ot_batch", MHP_FIELD(model.ot.batch_size)},
      {"ot_learning_rate", MHP_FIELD(model.ot.learning_rate)},
      {"ot_clip", MHP_FIELD(model.ot.clip)},
      {"ot_hidden", MHP_FIELD(model.ot.hidden)},
      {"ot_dangling_repulsion", MHP_FIELD(model.ot.dangling_repulsion)},
      {"k", MHP_FIELD(model.detect.k)},
      {"m", MHP_FIELD(model.detect.m)},
      {"dangling_margin", MHP_FIELD(model.detect.margin)},
      {"br_samples", MHP_FIELD(model.detect.br_samples)},
      {"classifier_hidden", MHP_FIELD(model.detect.classifier_hidden)},
      {"use_ot", MHP_FIELD(model.use_ot)},
      {"use_nca", MHP_FIELD(model.use_nca)},
      {"use_classifier", MHP_FIELD(model.use_classifier)},
      {"dangling_loss", MHP_FIELD(model.dangling_loss)},
      {"freeze_entities_in_mapping", MHP_FIELD(model.freeze_entities_in_mapping)},
      {"freeze_entities_in_detection", MHP_FIELD(model.freeze_entities_in_detection)},
      {"seed", MHP_FIELD(model.seed)},
      {"max_epochs", MHP_FIELD(max_epochs)},
      {"patience", MHP_FIELD(patience)},
      {"split_train", MHP_FIELD(split.train)},
      {"split_validation", MHP_FIELD(split.validation)},
      {"split_test", MHP_FIELD(split.test)},
      {"split_seed", MHP_FIELD(split_seed)},
      {"exclude_target_dangling", MHP_FIELD(exclude_target_dangling)},
      {"data", MHP_FIELD(data)},
  };
  return table;
}

#undef MHP_FIELD

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void write_key_values(const KeyValues& values, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw UsageError("config: unknown key '" + key + "'");
  it->second.set(config, key, value);
}

void apply_settings(RunConfig& config, const KeyValues& values) {
  for (const auto& [k, v] : values) apply_setting(config, k, v);
}

KeyValues to_key_values(const RunConfig& config) {
  KeyValues out;
  for (const auto& [k, f] : fields()) out[k] = f.get(config);
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError("config: " + msg);
  };
  const auto& m = c.model;
  need(m.dim >= 1, "dim must be >= 1");
  need(m.learning_rate > 0.0, "learning_rate must be > 0");
  need(m.ot.learning_rate > 0.0, "ot_learning_rate must be > 0");
  need(m.triple_margin > 0.0, "triple_margin must be > 0");
  need(m.negatives >= 1, "negatives must be >= 1");
  need(m.triple_batch >= 1 && m.mapping_batch >= 1 && m.nca_batch >= 1 && m.dangling_batch >= 1 &&
           m.classifier_batch >= 1 && m.ot.batch_size >= 1 && m.min_batches >= 1,
       "batch sizes must be >= 1");
  need(m.nca.alpha > 0.0, "nca_alpha must be > 0");
  need(m.nca.beta > 0.0, "nca_beta must be > 0");
  need(m.ot.n_critic >= 1, "ot_n_critic must be >= 1");
  need(m.ot.clip > 0.0, "ot_clip must be > 0");
  need(m.detect.k >= 1 && m.detect.m >= 1, "k and m must be >= 1");
  need(m.detect.margin > 0.0, "dangling_margin must be > 0");
  need(m.detect.br_samples >= 1, "br_samples must be >= 1");
  need(m.detect.classifier_hidden >= 1, "classifier_hidden must be >= 1");
  need(c.max_epochs >= 1, "max_epochs is 0: nothing to train");
  need(c.patience >= 1, "patience must be >= 1");
}

TrainingData make_training_data(const Dataset& dataset, const DatasetSplit& split) {
  TrainingData d;
  d.source_entities = dataset.source.entities.size();
  d.target_entities = dataset.target.entities.size();
  d.source_relations = dataset.source.relations.size();
  d.target_relations = dataset.target.relations.size();
  d.source_triples = dataset.source.triples;
  d.target_triples = dataset.target.triples;
  d.seeds = split.train().seeds;
  d.dangling = split.train().dangling;
  d.target_ids.resize(d.target_entities);
  std::iota(d.target_ids.begin(), d.target_ids.end(), EntityId{0});
  return d;
}

CandidatePool candidate_pool(const Dataset& dataset, const RunConfig& config) {
  CandidatePool pool;
  if (config.exclude_target_dangling) pool.excluded = dataset.target_dangling;
  return pool;
}

bool EarlyStopping::improved(double score) {
  if (score > best_) {
    best_ = score;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

TrainResult train(const Dataset& dataset, const DatasetSplit& split, const RunConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  const Partition& val = split.validation();
  if (split.train().seeds.empty()) throw DataError("training partition has no seed pairs");
  if (val.seeds.empty() && val.dangling.empty()) throw DataError("validation partition is empty");

  const TrainingData data = make_training_data(dataset, split);
  const CandidatePool pool = candidate_pool(dataset, config);
  const auto val_sources = evaluation_sources(val);
  const auto val_labels = evaluation_labels(val);
  const DetectorKind detector = default_detector(config.model);

  TrainResult result;
  ModelState state = init_model(data, config.model);
  EarlyStopping stopping(config.patience);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.stats = train_alignment_epoch(state, data, config.model, epoch);
    train_detection_epoch(state, data, config.model, epoch, rec.stats);

    const auto decisions = detect(state, config.model, val_sources, detector);
    const auto report =
        consolidated_eval(state.mapper, state.source.entities, state.target.entities, val, decisions.dangling, pool);
    rec.validation_detection = report.detection;
    rec.validation_alignment = report.alignment;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (stopping.improved(report.alignment.f1)) {
      result.best = state;
      result.best_epoch = rec.epoch;
    } else if (stopping.should_stop()) {
      break;
    }
  }
  result.best_f1 = stopping.best();
  return result;
}

std::string training_log_header() {
  return "epoch,triple_loss,mapping_loss,ot_dual,ot_mapper_loss,nca_loss,dangling_loss,classifier_loss,"
         "ot_clip_calls,val_detection_f1,val_alignment_precision,val_alignment_recall,val_alignment_f1,wall_seconds";
}

std::string training_log_row(const EpochRecord& r) {
  std::ostringstream out;
  const auto& s = r.stats;
  out << r.epoch << ',' << format_double(s.triple_loss) << ',' << format_double(s.mapping_loss) << ','
      << format_double(s.ot_dual) << ',' << format_double(s.ot_mapper_loss) << ',' << format_double(s.nca_loss)
      << ',' << format_double(s.dangling_loss) << ',' << format_double(s.classifier_loss) << ',' << s.ot_clip_calls
      << ',' << format_double(r.validation_detection.f1) << ',' << format_double(r.validation_alignment.precision)
      << ',' << format_double(r.validation_alignment.recall) << ',' << format_double(r.validation_alignment.f1)
      << ',' << format_double(r.wall_seconds);
  return out.str();
}

}  // namespace mhp
