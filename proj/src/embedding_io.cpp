// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
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

#include "fisher/embedding_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fisher {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'H', 'R', 'E', 'M', 'B', 'D'};
constexpr std::uint32_t kVersion = 1;
static_assert(std::endian::native == std::endian::little, "embedding I/O assumes a little-endian host");

using Json = nlohmann::ordered_json;

const std::vector<std::string> kFields{"dataset", "recording_id", "key",     "domain",  "condition_id",
                                       "split",   "subset",       "modality", "label"};

std::string* field(EmbeddingRecord& r, std::size_t i) {
  std::string* f[] = {&r.dataset, &r.recording_id, &r.key,      &r.domain, &r.condition_id,
                      &r.split,   &r.subset,       &r.modality, &r.label};
  return f[i];
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is, const std::string& where) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw DataError(where + ": truncated embedding file");
  return v;
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file) {
  for (const auto& r : file.records)
    if (r.vector.size() != file.dim) throw UsageError("embedding record dimension differs from the file dimension");
  Json header{{"format", "fisher-embeddings"}, {"version", kVersion},          {"model", file.model},
              {"parameters", file.parameters}, {"dim", file.dim},               {"count", file.records.size()}, {"fields", kFields}};
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 8);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out << text;
  for (auto r : file.records) {
    for (std::size_t i = 0; i < kFields.size(); ++i) {
      const std::string& s = *field(r, i);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
      out << s;
    }
    put<std::int32_t>(out, r.segment);
    out.write(reinterpret_cast<const char*>(r.vector.data()), static_cast<std::streamsize>(r.vector.size() * 4));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingFile read_embeddings(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + where);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw DataError(where + ": not an embedding file");
  if (get<std::uint32_t>(in, where) != kVersion) throw DataError(where + ": unsupported embedding file version");
  const auto len = get<std::uint64_t>(in, where);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError(where + ": truncated header");
  Json header;
  try {
    header = Json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(where + ": malformed header: " + e.what());
  }
  EmbeddingFile file;
  file.model = header.value("model", "");
  file.parameters = header.value("parameters", std::int64_t{0});
  file.dim = header.at("dim");
  const auto count = header.at("count").get<std::size_t>();
  const auto fields = header.at("fields").get<std::vector<std::string>>();
  std::vector<int> slot;
  for (const auto& f : fields) {
    const auto it = std::find(kFields.begin(), kFields.end(), f);
    slot.push_back(it == kFields.end() ? -1 : static_cast<int>(it - kFields.begin()));
  }
  file.records.resize(count);
  for (auto& r : file.records) {
    for (int s : slot) {
      const auto n = get<std::uint32_t>(in, where);
      std::string value(n, '\0');
      in.read(value.data(), n);
      if (!in) throw DataError(where + ": truncated record");
      if (s >= 0) *field(r, static_cast<std::size_t>(s)) = std::move(value);
    }
    r.segment = get<std::int32_t>(in, where);
    r.vector.resize(file.dim);
    in.read(reinterpret_cast<char*>(r.vector.data()), static_cast<std::streamsize>(file.dim) * 4);
    if (!in) throw DataError(where + ": truncated record");
  }
  return file;
}

}  // namespace fisher
