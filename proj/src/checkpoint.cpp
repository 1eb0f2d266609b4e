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

#include "fisher/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace fisher {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'H', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using Json = nlohmann::ordered_json;

struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
};

template <class T>
TensorRef ref(const std::string& name, T& t) {
  return {name, t.data(), t.rows(), t.cols()};
}

template <class State, class Opt>
std::vector<TensorRef> collect(State& state, Opt* opt) {
  std::vector<TensorRef> out;
  visit_encoder([&](const std::string& n, auto& t) { out.push_back(ref("student.encoder." + n, t)); }, state.student);
  visit_decoder([&](const std::string& n, auto& t) { out.push_back(ref("student.decoder." + n, t)); }, state.decoder);
  visit_encoder([&](const std::string& n, auto& t) { out.push_back(ref("teacher.encoder." + n, t)); }, state.teacher);
  if (opt) {
    visit_student([&](const std::string& n, auto& t) { out.push_back(ref("optimizer.m." + n, t)); }, opt->m);
    visit_student([&](const std::string& n, auto& t) { out.push_back(ref("optimizer.v." + n, t)); }, opt->v);
  }
  return out;
}

Json model_json(const ModelConfig& c) {
  return Json{{"depth", c.depth},
              {"hidden", c.hidden},
              {"heads", c.heads},
              {"mlp_ratio", c.mlp_ratio},
              {"patch", c.patch},
              {"decoder_depth", c.decoder_depth},
              {"decoder_kernel", c.decoder_kernel},
              {"norm_eps", c.norm_eps}};
}

Json stft_json(const StftConfig& c) {
  return Json{{"t_win", c.t_win}, {"t_hop", c.t_hop}, {"f_base", c.f_base}, {"f_max", c.f_max}, {"epsilon", c.epsilon}};
}

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

}  // namespace

OptimizerState make_optimizer_state(const ModelState<double>& state) {
  return {zero_grads(state), zero_grads(state), 0};
}

void save_checkpoint(const std::filesystem::path& path, const ModelState<double>& state, const StftConfig& stft,
                     const OptimizerState* optimizer) {
  auto& mutable_state = const_cast<ModelState<double>&>(state);
  auto* mutable_opt = const_cast<OptimizerState*>(optimizer);
  const std::vector<TensorRef> tensors = collect(mutable_state, mutable_opt);

  Json header;
  header["format"] = "fisher-checkpoint";
  header["version"] = kVersion;
  header["model"] = model_json(state.config);
  header["stft"] = stft_json(stft);
  header["step"] = state.step;
  header["optimizer_step"] = optimizer ? optimizer->t : 0;
  header["has_optimizer"] = optimizer != nullptr;
  Json table = Json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    table.push_back(Json{{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.rows * t.cols);
  }
  header["tensors"] = std::move(table);
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kVersion);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.rows * t.cols * sizeof(double)));
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&header_len), 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw DataError(path.string() + ": not a checkpoint");
  if (version != kVersion) throw DataError(path.string() + ": unsupported checkpoint version");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError(path.string() + ": truncated header");

  Json header;
  try {
    header = Json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": malformed header: " + e.what());
  }
  const Json& m = header.at("model");
  ModelConfig config;
  config.depth = m.at("depth");
  config.hidden = m.at("hidden");
  config.heads = m.at("heads");
  config.mlp_ratio = m.at("mlp_ratio");
  config.patch = m.at("patch");
  config.decoder_depth = m.at("decoder_depth");
  config.decoder_kernel = m.at("decoder_kernel");
  config.norm_eps = m.at("norm_eps");

  Checkpoint ck;
  ck.state = init_params<double>(config, 0);
  ck.state.step = header.at("step");
  const Json& s = header.at("stft");
  ck.stft = {s.at("t_win"), s.at("t_hop"), s.at("f_base"), s.at("f_max"), s.at("epsilon")};
  if (header.at("has_optimizer").get<bool>()) {
    ck.optimizer = make_optimizer_state(ck.state);
    ck.optimizer->t = header.at("optimizer_step");
  }

  std::vector<TensorRef> tensors = collect(ck.state, ck.optimizer ? &*ck.optimizer : nullptr);
  std::map<std::string, const Json*> table;
  std::uint64_t total = 0;
  for (const Json& t : header.at("tensors")) {
    table[t.at("name").get<std::string>()] = &t;
    total += t.at("rows").get<std::uint64_t>() * t.at("cols").get<std::uint64_t>();
  }
  std::vector<double> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) throw DataError(path.string() + ": truncated payload");
  if (table.size() != tensors.size()) throw DataError(path.string() + ": tensor table does not match the model");
  for (auto& t : tensors) {
    auto it = table.find(t.name);
    if (it == table.end()) throw DataError(path.string() + ": missing tensor " + t.name);
    const Json& e = *it->second;
    if (e.at("rows").get<Eigen::Index>() != t.rows || e.at("cols").get<Eigen::Index>() != t.cols)
      throw DataError(path.string() + ": shape mismatch for " + t.name);
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto count = static_cast<std::uint64_t>(t.rows * t.cols);
    if (offset + count > total) throw DataError(path.string() + ": tensor outside payload " + t.name);
    std::memcpy(t.data, payload.data() + offset, count * sizeof(double));
  }
  return ck;
}

}  // namespace fisher
