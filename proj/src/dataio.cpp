/* Copyright 2026 The Hubless Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hubless/dataio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hubless/error.hpp"
#include "hubless/kernels.hpp"

namespace hubless {
namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kBankMagic = {'F', 'B', 'N', 'K'};
constexpr std::uint32_t kBankVersion = 1;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t GetU32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteAll(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

fs::path LabelsPathFor(const fs::path& path, const fs::path& labels_path) {
  if (!labels_path.empty()) return labels_path;
  fs::path p = path;
  p += ".labels";
  return p;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void FeatureBank::Validate() const {
  if (features.rows() == 0 || features.cols() == 0) {
    throw Error(ErrorCode::kFormatError, "feature bank is empty");
  }
  if (labels.size() != features.rows()) {
    throw Error(ErrorCode::kManifestMismatch,
                std::to_string(labels.size()) + " labels for " +
                    std::to_string(features.rows()) + " feature rows");
  }
  for (std::size_t l : labels) {
    if (l >= class_names.size()) {
      throw Error(ErrorCode::kManifestMismatch, "label index out of range");
    }
  }
  if (!AllFinite(features.values())) {
    throw Error(ErrorCode::kCorruptData, "feature bank contains NaN or Inf");
  }
}

FeatureBank LoadFeatureBank(const fs::path& path, const fs::path& labels_path) {
  const std::string bytes = ReadAll(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16 || !std::equal(kBankMagic.begin(), kBankMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::kFormatError, path.string() + ": bad magic");
  }
  const std::uint32_t version = GetU32(p + 4);
  if (version != kBankVersion) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint64_t count = GetU32(p + 8);
  const std::uint64_t dim = GetU32(p + 12);
  if (count == 0 || dim == 0) throw Error(ErrorCode::kFormatError, path.string() + ": empty bank");
  if (bytes.size() != 16 + count * dim * 4) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": payload is " + std::to_string(bytes.size() - 16) +
                    " bytes, header implies " + std::to_string(count * dim * 4));
  }
  FeatureBank bank;
  bank.features = Matrix(count, dim);
  auto values = bank.features.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = std::bit_cast<float>(GetU32(p + 16 + 4 * i));
    if (!std::isfinite(f)) {
      throw Error(ErrorCode::kCorruptData, path.string() + ": non-finite value at index " +
                                               std::to_string(i));
    }
    values[i] = f;
  }

  const fs::path lpath = LabelsPathFor(path, labels_path);
  std::ifstream lin(lpath);
  if (!lin) throw Error(ErrorCode::kIoError, "cannot open " + lpath.string());
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  while (std::getline(lin, line)) {
    const std::string name = Trim(line);
    if (name.empty()) continue;
    auto [it, inserted] = index.emplace(name, bank.class_names.size());
    if (inserted) bank.class_names.push_back(name);
    bank.labels.push_back(it->second);
  }
  if (bank.labels.size() != count) {
    throw Error(ErrorCode::kManifestMismatch,
                lpath.string() + " has " + std::to_string(bank.labels.size()) +
                    " labels for " + std::to_string(count) + " feature rows");
  }
  return bank;
}

void SaveFeatureBank(const FeatureBank& bank, const fs::path& path, const fs::path& labels_path) {
  bank.Validate();
  for (const auto& name : bank.class_names) {
    if (name.empty() || name != Trim(name) || name.find('\n') != std::string::npos) {
      throw Error(ErrorCode::kFormatError, "class name '" + name + "' cannot be stored");
    }
  }
  std::string bytes(kBankMagic.begin(), kBankMagic.end());
  PutU32(bytes, kBankVersion);
  PutU32(bytes, static_cast<std::uint32_t>(bank.size()));
  PutU32(bytes, static_cast<std::uint32_t>(bank.dim()));
  bytes.reserve(bytes.size() + bank.features.size() * 4);
  for (double v : bank.features.values()) {
    PutU32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  WriteAll(path, bytes);

  std::string labels;
  for (std::size_t l : bank.labels) {
    labels += bank.class_names[l];
    labels += '\n';
  }
  WriteAll(LabelsPathFor(path, labels_path), labels);
}

void NormalizeRows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) NormalizeInPlace(m.row(r));
}

FeatureBank SelectClasses(const FeatureBank& bank, const std::vector<std::string>& keep) {
  std::vector<std::ptrdiff_t> remap(bank.class_names.size(), -1);
  for (std::size_t c = 0; c < bank.class_names.size(); ++c) {
    auto it = std::find(keep.begin(), keep.end(), bank.class_names[c]);
    if (it != keep.end()) remap[c] = it - keep.begin();
  }
  std::vector<std::size_t> rows;
  FeatureBank out;
  out.class_names = keep;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (remap[bank.labels[i]] >= 0) {
      rows.push_back(i);
      out.labels.push_back(static_cast<std::size_t>(remap[bank.labels[i]]));
    }
  }
  out.features = GatherRows(bank.features, rows);
  return out;
}

const Vector& EmbeddingTable::at(const std::string& name) const {
  auto it = entries.find(name);
  if (it == entries.end()) {
    throw Error(ErrorCode::kManifestMismatch, "no embedding for class '" + name + "'");
  }
  return it->second;
}

Matrix EmbeddingTable::Gather(const std::vector<std::string>& names) const {
  Matrix out(names.size(), dim);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Vector& v = at(names[i]);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

EmbeddingTable ParseEmbeddingTable(std::istream& in, bool normalize) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool maybe_header = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<std::string> raw;
    for (std::string f; fields >> f;) raw.push_back(f);

    if (maybe_header) {
      maybe_header = false;
      // word2vec text files open with "<count> <dim>".
      if (raw.size() == 1 && token.find_first_not_of("0123456789") == std::string::npos &&
          raw[0].find_first_not_of("0123456789") == std::string::npos) {
        continue;
      }
    }

    if (raw.empty()) {
      throw Error(ErrorCode::kFormatError,
                  "line " + std::to_string(line_no) + ": token without a vector");
    }
    Vector v(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
      std::size_t used = 0;
      try {
        v[k] = std::stod(raw[k], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != raw[k].size() || !std::isfinite(v[k])) {
        throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) +
                                                 ": bad value '" + raw[k] + "'");
      }
    }
    if (table.dim == 0) {
      table.dim = v.size();
    } else if (v.size() != table.dim) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": dimension " +
                                               std::to_string(v.size()) + ", expected " +
                                               std::to_string(table.dim));
    }
    if (normalize) NormalizeInPlace(v);
    auto [it, inserted] = table.entries.insert_or_assign(token, std::move(v));
    if (!inserted) {
      table.duplicates.push_back(token);
      std::clog << "warning: duplicate embedding for '" << token << "', keeping line "
                << line_no << "\n";
    }
  }
  return table;
}

EmbeddingTable LoadEmbeddingTable(const fs::path& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ParseEmbeddingTable(in, normalize);
}

void SaveEmbeddingTable(const EmbeddingTable& table, const fs::path& path) {
  std::string text;
  char buf[32];
  for (const auto& [name, v] : table.entries) {
    text += name;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      text += buf;
    }
    text += '\n';
  }
  WriteAll(path, text);
}

void SplitManifest::Validate(const EmbeddingTable& table) const {
  if (seen.size() < 2) {
    throw Error(ErrorCode::kConfigError, "at least two seen classes are required");
  }
  std::set<std::string> seen_set(seen.begin(), seen.end());
  if (seen_set.size() != seen.size()) {
    throw Error(ErrorCode::kManifestMismatch, "duplicate seen class");
  }
  std::set<std::string> unseen_set;
  for (const auto& name : unseen) {
    if (seen_set.count(name)) {
      throw Error(ErrorCode::kManifestMismatch, "class '" + name + "' is both seen and unseen");
    }
    if (!unseen_set.insert(name).second) {
      throw Error(ErrorCode::kManifestMismatch, "duplicate unseen class");
    }
  }
  for (const auto& name : seen) table.at(name);
  for (const auto& name : unseen) table.at(name);
}

SplitManifest LoadSplitManifest(const fs::path& path) {
  const std::string text = ReadAll(path);
  SplitManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.seen = j.at("seen").get<std::vector<std::string>>();
    m.unseen = j.value("unseen", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, path.string() + ": " + e.what());
  }
  return m;
}

void SaveSplitManifest(const SplitManifest& manifest, const fs::path& path) {
  const nlohmann::json j = {{"seen", manifest.seen}, {"unseen", manifest.unseen}};
  WriteAll(path, j.dump(2) + "\n");
}

}  // namespace hubless
