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

#include "mhp/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "mhp/error.hpp"

namespace mhp {

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) throw DataError("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

void Checkpoint::add(const std::string& name, const DenseMatrix& value) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw std::invalid_argument("checkpoint: invalid tensor name '" + name + "'");
  }
  if (has(name)) throw std::invalid_argument("checkpoint: duplicate tensor '" + name + "'");
  tensors_.emplace_back(name, value);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, _] : tensors_) {
    if (n == name) return true;
  }
  return false;
}

const DenseMatrix& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, m] : tensors_) {
    if (n == name) return m;
  }
  throw DataError("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ostringstream header;
  header << "MHP-CHECKPOINT 1\n";
  for (const auto& [k, v] : checkpoint.all_meta()) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint: metadata '" + k + "' cannot be serialised");
    }
    header << "meta " << k << ' ' << v << '\n';
  }
  std::uint64_t offset = 0;
  for (const auto& [name, m] : checkpoint.tensors()) {
    const std::uint64_t bytes = m.size() * 4;
    header << "tensor " << name << " f32 " << m.rows() << ' ' << m.cols() << ' ' << offset << ' ' << bytes << '\n';
    offset += bytes;
  }
  header << "end\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot write " + path.string());
  const std::string text = header.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : checkpoint.tensors()) {
    for (float v : m.values()) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      const char le[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff), char((bits >> 24) & 0xff)};
      out.write(le, 4);
    }
  }
  if (!out) throw DataError("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "MHP-CHECKPOINT 1") {
    throw DataError("checkpoint: bad magic in " + path.string());
  }
  struct Entry {
    std::string name;
    std::size_t rows, cols;
    std::uint64_t offset, bytes;
  };
  Checkpoint checkpoint;
  std::vector<Entry> entries;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "meta") {
      std::string key;
      fields >> key;
      std::string value;
      std::getline(fields, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      checkpoint.set_meta(key, value);
    } else if (kind == "tensor") {
      Entry e;
      std::string dtype;
      if (!(fields >> e.name >> dtype >> e.rows >> e.cols >> e.offset >> e.bytes) || dtype != "f32" ||
          e.bytes != std::uint64_t(e.rows) * e.cols * 4) {
        throw DataError("checkpoint: malformed tensor line '" + line + "'");
      }
      entries.push_back(e);
    } else {
      throw DataError("checkpoint: unexpected header line '" + line + "'");
    }
  }
  if (!ended) throw DataError("checkpoint: truncated header in " + path.string());
  const std::streampos payload_start = in.tellg();
  for (const auto& e : entries) {
    DenseMatrix m(e.rows, e.cols);
    in.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    std::vector<unsigned char> raw(e.bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw DataError("checkpoint: truncated payload for tensor '" + e.name + "'");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::uint32_t bits = std::uint32_t(raw[4 * i]) | (std::uint32_t(raw[4 * i + 1]) << 8) |
                                 (std::uint32_t(raw[4 * i + 2]) << 16) | (std::uint32_t(raw[4 * i + 3]) << 24);
      m.values()[i] = std::bit_cast<float>(bits);
    }
    checkpoint.add(e.name, m);
  }
  return checkpoint;
}

}  // namespace mhp
