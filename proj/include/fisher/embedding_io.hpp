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

#ifndef FISHER_EMBEDDING_IO_HPP_
#define FISHER_EMBEDDING_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "fisher/common.hpp"

namespace fisher {

/// One embedded segment plus the metadata evaluation needs.
struct EmbeddingRecord {
  std::string dataset;
  std::string recording_id;
  int segment = 0;
  std::string key;           // machine id or section
  std::string domain;        // source / target / empty
  std::string condition_id;  // working condition or group id
  std::string split;         // train / test
  std::string subset;        // dev / eval / empty
  std::string modality;
  std::string label;         // class label, or normal / anomaly
  Eigen::VectorXf vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddingFile {
  std::string model;  // free-form producer tag
  std::int64_t parameters = 0;  // encoder size of the producer, 0 if unknown
  int dim = 0;
  std::vector<EmbeddingRecord> records;
};

// Layout (little-endian):
//   8 bytes  magic "FSHREMBD"
//   u32      version (1)
//   u64      header length H, then H bytes of JSON:
//            {"format","version","model","parameters","dim","count",
//             "fields":[...]}
//   count records, each: the string fields in header order as u32 length +
//   UTF-8 bytes, i32 segment index, then dim float32 values.
void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file);
EmbeddingFile read_embeddings(const std::filesystem::path& path);

}  // namespace fisher

#endif  // FISHER_EMBEDDING_IO_HPP_
