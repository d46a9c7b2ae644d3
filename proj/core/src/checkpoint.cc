// core/src/checkpoint.cc

// Copyright 2026  The tslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "tslab/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tslab/error.h"

namespace tslab {

namespace {

constexpr char kMagic[] = "TSLAB1";

template <typename T>
void PutLe(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T GetLe(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void PutString(std::ostream& os, const std::string& s) {
  PutLe<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string GetString(std::istream& is) {
  auto n = GetLe<std::uint32_t>(is);
  if (n > (1u << 24)) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw FormatError("checkpoint truncated");
  return s;
}

void Save(std::ostream& os, const std::string& config, const ParamSet& params) {
  os.write(kMagic, 6);
  PutString(os, config);
  PutLe<std::uint32_t>(os, static_cast<std::uint32_t>(params.blocks().size()));
  for (std::size_t b = 0; b < params.blocks().size(); ++b) {
    const ParamBlock& block = params.block(static_cast<int>(b));
    PutString(os, block.name);
    PutLe<std::uint64_t>(os, block.size());
    auto values = params.values().subspan(block.offset, block.size());
    for (double v : values) PutLe<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw FormatError("checkpoint write failed");
}

struct RawCheckpoint {
  std::string config;
  std::map<std::string, std::vector<double>> blocks;
  std::vector<std::string> order;
};

RawCheckpoint Load(std::istream& is) {
  char magic[6];
  if (!is.read(magic, 6) || std::memcmp(magic, kMagic, 6) != 0)
    throw FormatError("not a TSLAB1 checkpoint");
  RawCheckpoint raw;
  raw.config = GetString(is);
  auto count = GetLe<std::uint32_t>(is);
  for (std::uint32_t b = 0; b < count; ++b) {
    std::string name = GetString(is);
    auto n = GetLe<std::uint64_t>(is);
    if (n > (1ull << 32)) throw FormatError("checkpoint block too large");
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(GetLe<std::uint64_t>(is));
    if (!raw.blocks.emplace(name, std::move(values)).second)
      throw FormatError("duplicate checkpoint block " + name);
    raw.order.push_back(name);
  }
  return raw;
}

std::string KindOf(const std::string& config) {
  std::istringstream is(config);
  std::string first;
  std::getline(is, first);
  if (first.rfind("kind=", 0) != 0) throw FormatError("checkpoint has no kind");
  return first.substr(5);
}

void Fill(const RawCheckpoint& raw, ParamSet& params) {
  if (raw.order.size() != params.blocks().size())
    throw FormatError("checkpoint block count does not match the config");
  auto values = params.values();
  for (std::size_t b = 0; b < params.blocks().size(); ++b) {
    const ParamBlock& block = params.block(static_cast<int>(b));
    if (raw.order[b] != block.name)
      throw FormatError("checkpoint block " + raw.order[b] +
                        " where " + block.name + " was expected");
    const auto& v = raw.blocks.at(block.name);
    if (v.size() != block.size())
      throw FormatError("checkpoint block " + block.name + " has wrong size");
    std::copy(v.begin(), v.end(), values.begin() + block.offset);
  }
}

std::string LmConfigText(const NeuralLmConfig& c) {
  std::ostringstream os;
  os << "kind=neural_lm\nnum_labels=" << c.num_labels
     << "\nembed_dim=" << c.embed_dim << "\nhidden_dim=" << c.hidden_dim
     << '\n';
  return os.str();
}

template <typename Fn>
auto WithFile(const std::string& path, std::ios::openmode mode, Fn fn) {
  std::fstream f(path, mode | std::ios::binary);
  if (!f) throw FormatError("cannot open " + path);
  try {
    return fn(f);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace

void SaveModel(std::ostream& os, const TransducerModel& model) {
  Save(os, "kind=transducer\n" + model.config().ToText(), model.params());
}

TransducerModel LoadModel(std::istream& is) {
  RawCheckpoint raw = Load(is);
  if (KindOf(raw.config) != "transducer")
    throw FormatError("checkpoint is not a transducer");
  ModelConfig config = ModelConfig::FromText(raw.config);
  config.Validate();
  TransducerModel model(config);
  Fill(raw, model.params());
  return model;
}

void SaveNeuralLm(std::ostream& os, const NeuralLM& lm) {
  Save(os, LmConfigText(lm.config()), lm.params());
}

NeuralLM LoadNeuralLm(std::istream& is) {
  RawCheckpoint raw = Load(is);
  if (KindOf(raw.config) != "neural_lm")
    throw FormatError("checkpoint is not a neural LM");
  std::map<std::string, int> kv;
  std::istringstream cs(raw.config);
  std::string line;
  while (std::getline(cs, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos || line.rfind("kind=", 0) == 0) continue;
    try {
      kv[line.substr(0, eq)] = std::stoi(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("bad LM config line " + line);
    }
  }
  NeuralLmConfig c;
  for (auto [key, field] : {std::pair{"num_labels", &c.num_labels},
                            std::pair{"embed_dim", &c.embed_dim},
                            std::pair{"hidden_dim", &c.hidden_dim}}) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("LM config lacks ") + key);
    *field = it->second;
  }
  NeuralLM lm(c);
  Fill(raw, lm.params());
  return lm;
}

void SaveModelFile(const std::string& path, const TransducerModel& model) {
  WithFile(path, std::ios::out | std::ios::trunc,
           [&](std::fstream& f) { SaveModel(f, model); });
}

TransducerModel LoadModelFile(const std::string& path) {
  return WithFile(path, std::ios::in,
                  [](std::fstream& f) { return LoadModel(f); });
}

void SaveNeuralLmFile(const std::string& path, const NeuralLM& lm) {
  WithFile(path, std::ios::out | std::ios::trunc,
           [&](std::fstream& f) { SaveNeuralLm(f, lm); });
}

NeuralLM LoadNeuralLmFile(const std::string& path) {
  return WithFile(path, std::ios::in,
                  [](std::fstream& f) { return LoadNeuralLm(f); });
}

}  // namespace tslab
