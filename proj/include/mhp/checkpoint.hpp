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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mhp/matrix.hpp"

namespace mhp {

// Named float tensors plus string metadata.
//
// On disk: a text header
//
//   MHP-CHECKPOINT 1
//   meta <key> <value>
//   tensor <name> f32 <rows> <cols> <offset> <bytes>
//   end
//
// followed by the raw little-endian float32 payloads; offsets are relative
// to the first payload byte. Round trips are bit-exact.
class Checkpoint {
 public:
  void set_meta(const std::string& key, const std::string& value) { meta_[key] = value; }
  bool has_meta(const std::string& key) const { return meta_.count(key) > 0; }
  const std::string& meta(const std::string& key) const;
  const std::map<std::string, std::string>& all_meta() const { return meta_; }

  void add(const std::string& name, const DenseMatrix& value);
  bool has(const std::string& name) const;
  const DenseMatrix& get(const std::string& name) const;
  const std::vector<std::pair<std::string, DenseMatrix>>& tensors() const { return tensors_; }

  bool operator==(const Checkpoint&) const = default;

 private:
  std::map<std::string, std::string> meta_;
  std::vector<std::pair<std::string, DenseMatrix>> tensors_;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mhp
