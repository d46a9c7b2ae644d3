// core/src/dataset.cc

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

#include "tslab/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "tslab/error.h"
#include "tslab/numerics.h"

namespace tslab {

std::uint64_t DeriveSeed(std::uint64_t master, const std::string& purpose) {
  std::string key = std::to_string(master) + "/" + purpose;
  return Fnv1a64(key);
}

void SyntheticDatasetConfig::Validate() const {
  if (num_labels < 1) throw ConfigError("dataset: num_labels must be >= 1");
  if (prior_order < 1 || prior_order > 3)
    throw ConfigError("dataset: prior_order must be 1, 2 or 3");
  if (!(prior_concentration > 0.0))
    throw ConfigError("dataset: prior_concentration must be positive");
  if (!(eos_prob > 0.0 && eos_prob < 1.0))
    throw ConfigError("dataset: eos_prob must lie in (0, 1)");
  if (max_label_len < 1) throw ConfigError("dataset: max_label_len >= 1");
  if (max_frames_per_label < 1)
    throw ConfigError("dataset: max_frames_per_label must be >= 1");
  if (feature_dim < 1) throw ConfigError("dataset: feature_dim must be >= 1");
  if (!(noise_stddev >= 0.0))
    throw ConfigError("dataset: noise_stddev must be >= 0");
  if (num_train < 0 || num_dev < 0 || num_text < 0)
    throw ConfigError("dataset: negative split size");
}

namespace {

int ContextWidth(int order) { return std::max(order - 1, 1); }

int PowInt(int base, int exp) {
  int r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

}  // namespace

LabelPrior::LabelPrior(int num_labels, int order,
                       std::vector<std::vector<double>> probs)
    : num_labels_(num_labels), order_(order), probs_(std::move(probs)) {
  if (order_ < 1 || order_ > 3) throw ConfigError("LabelPrior: bad order");
  if (static_cast<int>(probs_.size()) !=
      PowInt(num_labels_ + 1, ContextWidth(order_)))
    throw ConfigError("LabelPrior: need one row per context");
  for (const auto& row : probs_) {
    if (static_cast<int>(row.size()) != num_labels_ + 1)
      throw ConfigError("LabelPrior: bad row width");
    double s = 0.0;
    for (double p : row) s += p;
    if (std::abs(s - 1.0) > 1e-9)
      throw ConfigError("LabelPrior: row does not sum to one");
  }
  if (probs_[0][kEos] != 0.0)
    throw ConfigError("LabelPrior: EOS may not follow BOS");
}

LabelPrior LabelPrior::Random(const SyntheticDatasetConfig& config,
                              std::mt19937_64& rng) {
  const int V = config.num_labels;
  std::gamma_distribution<double> gamma(config.prior_concentration, 1.0);
  auto draw = [&] {
    std::vector<double> g(V);
    double s = 0.0;
    for (double& x : g) s += (x = gamma(rng));
    if (s <= 0.0) {
      std::fill(g.begin(), g.end(), 1.0);
      s = V;
    }
    for (double& x : g) x /= s;
    return g;
  };
  auto row = [&](const std::vector<double>& g, double eos) {
    std::vector<double> r(V + 1);
    r[kEos] = eos;
    for (int k = 0; k < V; ++k) r[k + 1] = (1.0 - eos) * g[k];
    return r;
  };
  const int rows = PowInt(V + 1, ContextWidth(config.prior_order));
  std::vector<std::vector<double>> probs(rows);
  if (config.prior_order == 1) {
    auto g = draw();
    probs[0] = row(g, 0.0);
    for (int c = 1; c < rows; ++c) probs[c] = row(g, config.eos_prob);
  } else {
    for (int c = 0; c < rows; ++c)
      probs[c] = row(draw(), c == 0 ? 0.0 : config.eos_prob);
  }
  return LabelPrior(V, config.prior_order, std::move(probs));
}

int LabelPrior::ContextIndex(const LabelSequence& history) const {
  const int width = ContextWidth(order_);
  int index = 0;
  for (int i = 0; i < width; ++i) {
    int pos = static_cast<int>(history.size()) - width + i;
    Label l = pos >= 0 ? history[pos] : kBos;
    if (l < 0 || l > num_labels_)
      throw VocabularyError("LabelPrior: label " + std::to_string(l));
    index = index * (num_labels_ + 1) + l;
  }
  return index;
}

double LabelPrior::SequenceProb(const LabelSequence& seq) const {
  double p = 1.0;
  LabelSequence history;
  for (Label l : seq) {
    if (l < 1 || l > num_labels_)
      throw VocabularyError("LabelPrior: label " + std::to_string(l));
    p *= Prob(history, l);
    history.push_back(l);
  }
  return p * Prob(history, kEos);
}

LabelSequence LabelPrior::Sample(std::mt19937_64& rng, int max_len) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    LabelSequence seq;
    for (;;) {
      const auto& row = probs_[ContextIndex(seq)];
      double x = u(rng), acc = 0.0;
      Label next = num_labels_;
      for (Label k = 0; k <= num_labels_; ++k) {
        acc += row[k];
        if (x < acc) {
          next = k;
          break;
        }
      }
      if (next == kEos) return seq;
      seq.push_back(next);
      if (static_cast<int>(seq.size()) > max_len) break;
    }
  }
}

Utterance SynthesizeUtterance(const std::string& id,
                              const LabelSequence& labels,
                              const Matrix& prototypes, int max_frames,
                              double noise_stddev, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> frames(1, max_frames);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<int> counts;
  int T = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    counts.push_back(frames(rng));
    T += counts.back();
  }
  Utterance u;
  u.id = id;
  u.labels = labels;
  u.features.resize(T, prototypes.cols());
  int t = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    for (int i = 0; i < counts[s]; ++i, ++t) {
      for (int d = 0; d < prototypes.cols(); ++d) {
        double v = prototypes(labels[s] - 1, d);
        if (noise_stddev > 0.0) v += noise_stddev * noise(rng);
        u.features(t, d) = v;
      }
    }
  }
  return u;
}

SyntheticCorpus GenerateDataset(const SyntheticDatasetConfig& config) {
  config.Validate();
  std::mt19937_64 prior_rng(DeriveSeed(config.seed, "prior"));
  LabelPrior prior = LabelPrior::Random(config, prior_rng);

  std::mt19937_64 proto_rng(DeriveSeed(config.seed, "prototypes"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix prototypes(config.num_labels, config.feature_dim);
  for (int k = 0; k < config.num_labels; ++k)
    for (int d = 0; d < config.feature_dim; ++d)
      prototypes(k, d) = config.prototype_scale * gauss(proto_rng);

  SyntheticCorpus corpus{std::move(prior), std::move(prototypes), {}, {}, {}};
  auto make_split = [&](const std::string& name, int count) {
    std::mt19937_64 rng(DeriveSeed(config.seed, name));
    std::vector<Utterance> out;
    for (int i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "%s-%04d", name.c_str(), i);
      LabelSequence labels = corpus.prior.Sample(rng, config.max_label_len);
      out.push_back(SynthesizeUtterance(id, labels, corpus.prototypes,
                                        config.max_frames_per_label,
                                        config.noise_stddev, rng));
    }
    return out;
  };
  corpus.train = make_split("train", config.num_train);
  corpus.dev = make_split("dev", config.num_dev);
  std::mt19937_64 text_rng(DeriveSeed(config.seed, "text"));
  for (int i = 0; i < config.num_text; ++i)
    corpus.text.push_back(corpus.prior.Sample(text_rng, config.max_label_len));
  return corpus;
}

std::vector<LabelSequence> Transcripts(std::span<const Utterance> data) {
  std::vector<LabelSequence> out;
  out.reserve(data.size());
  for (const auto& u : data) out.push_back(u.labels);
  return out;
}

void WriteDataset(std::ostream& os, std::span<const Utterance> data) {
  char buf[32];
  for (const auto& u : data) {
    os << "UTT " << u.id << " T=" << u.NumFrames() << " S=" << u.labels.size()
       << '\n';
    for (int t = 0; t < u.NumFrames(); ++t) {
      for (int d = 0; d < u.features.cols(); ++d) {
        std::snprintf(buf, sizeof(buf), "%.17g", u.features(t, d));
        os << (d ? " " : "") << buf;
      }
      os << '\n';
    }
    os << FormatLabels(u.labels) << '\n';
  }
}

std::vector<Utterance> ReadDataset(std::istream& is) {
  std::vector<Utterance> out;
  std::string line;
  int line_no = 0;
  int dim = -1;
  auto fail = [&](const std::string& msg) {
    throw FormatError("dataset line " + std::to_string(line_no) + ": " + msg);
  };
  auto next_line = [&] {
    if (!std::getline(is, line)) fail("unexpected end of file");
    ++line_no;
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string tag, id, t_field, s_field;
    if (!(head >> tag >> id >> t_field >> s_field) || tag != "UTT" ||
        t_field.rfind("T=", 0) != 0 || s_field.rfind("S=", 0) != 0)
      fail("expected 'UTT <id> T=<int> S=<int>'");
    int T = 0, S = 0;
    try {
      T = std::stoi(t_field.substr(2));
      S = std::stoi(s_field.substr(2));
    } catch (const std::exception&) {
      fail("bad T or S");
    }
    if (T < 0 || S < 0) fail("negative T or S");
    Utterance u;
    u.id = id;
    std::vector<std::vector<double>> rows;
    for (int t = 0; t < T; ++t) {
      next_line();
      std::istringstream fs(line);
      std::vector<double> row;
      std::string tok;
      while (fs >> tok) {
        try {
          std::size_t pos = 0;
          row.push_back(std::stod(tok, &pos));
          if (pos != tok.size()) fail("bad float '" + tok + "'");
        } catch (const std::logic_error&) {
          fail("bad float '" + tok + "'");
        }
      }
      if (row.empty()) fail("empty feature row");
      if (dim < 0) dim = static_cast<int>(row.size());
      if (static_cast<int>(row.size()) != dim)
        fail("feature rows differ in dimension");
      rows.push_back(std::move(row));
    }
    u.features.resize(T, dim < 0 ? 0 : dim);
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < dim; ++d) u.features(t, d) = rows[t][d];
    next_line();
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t pos = 0;
        int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v < 1) fail("bad label '" + tok + "'");
        u.labels.push_back(v);
      } catch (const std::logic_error&) {
        fail("bad label '" + tok + "'");
      }
    }
    if (static_cast<int>(u.labels.size()) != S)
      fail("transcript length does not match S");
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace tslab
