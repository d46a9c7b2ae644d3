// core/src/model.cc

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

#include "tslab/model.h"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "tslab/error.h"
#include "tslab/numerics.h"

namespace tslab {

namespace {

Vector Sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

const char* CellName(PredictionCell cell) {
  return cell == PredictionCell::kLstm ? "lstm" : "elman";
}

}  // namespace

void ModelConfig::Validate() const {
  if (num_labels < 1) throw ConfigError("num_labels must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (window < 0) throw ConfigError("window must be >= 0");
  if (enc_hidden < 1 || enc_dim < 1 || embed_dim < 1 || pred_dim < 1 ||
      joint_hidden < 1)
    throw ConfigError("layer sizes must be >= 1");
  if (context_size != 0 && context_size != 1)
    throw ConfigError("context_size must be 1 or 0 (full history)");
}

std::string ModelConfig::ToText() const {
  std::ostringstream os;
  os << "num_labels=" << num_labels << '\n'
     << "input_dim=" << input_dim << '\n'
     << "window=" << window << '\n'
     << "enc_hidden=" << enc_hidden << '\n'
     << "enc_dim=" << enc_dim << '\n'
     << "context_size=" << context_size << '\n'
     << "cell=" << CellName(cell) << '\n'
     << "embed_dim=" << embed_dim << '\n'
     << "pred_dim=" << pred_dim << '\n'
     << "joint_hidden=" << joint_hidden << '\n';
  return os.str();
}

ModelConfig ModelConfig::FromText(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("model config line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get_int = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end())
      throw FormatError(std::string("model config missing key ") + key);
    return std::stoi(it->second);
  };
  ModelConfig c;
  c.num_labels = get_int("num_labels");
  c.input_dim = get_int("input_dim");
  c.window = get_int("window");
  c.enc_hidden = get_int("enc_hidden");
  c.enc_dim = get_int("enc_dim");
  c.context_size = get_int("context_size");
  auto cell = kv.find("cell");
  if (cell == kv.end()) throw FormatError("model config missing key cell");
  if (cell->second == "elman") {
    c.cell = PredictionCell::kElman;
  } else if (cell->second == "lstm") {
    c.cell = PredictionCell::kLstm;
  } else {
    throw FormatError("unknown prediction cell '" + cell->second + "'");
  }
  c.embed_dim = get_int("embed_dim");
  c.pred_dim = get_int("pred_dim");
  c.joint_hidden = get_int("joint_hidden");
  c.Validate();
  return c;
}

ModelConfig ModelConfig::Micro(int num_labels, int context_size,
                               PredictionCell cell) {
  ModelConfig c;
  c.num_labels = num_labels;
  c.input_dim = 2;
  c.window = 1;
  c.enc_hidden = 4;
  c.enc_dim = 3;
  c.context_size = context_size;
  c.cell = cell;
  c.embed_dim = 3;
  c.pred_dim = 3;
  c.joint_hidden = 4;
  return c;
}

TransducerModel::TransducerModel(const ModelConfig& config) : config_(config) {
  config_.Validate();
  const ModelConfig& c = config_;
  const int in = c.window_width() * c.input_dim;
  blocks_.enc_w1 = params_.AddBlock("enc.w1", c.enc_hidden, in);
  blocks_.enc_b1 = params_.AddBlock("enc.b1", c.enc_hidden, 1);
  blocks_.enc_w2 = params_.AddBlock("enc.w2", c.enc_dim, c.enc_hidden);
  blocks_.enc_b2 = params_.AddBlock("enc.b2", c.enc_dim, 1);
  blocks_.embed = params_.AddBlock("pred.embed", c.num_labels + 1, c.embed_dim);
  if (!c.full_context()) {
    blocks_.pred_w1 = params_.AddBlock("pred.w1", c.pred_dim, c.embed_dim);
    blocks_.pred_b1 = params_.AddBlock("pred.b1", c.pred_dim, 1);
    blocks_.pred_w2 = params_.AddBlock("pred.w2", c.pred_dim, c.pred_dim);
    blocks_.pred_b2 = params_.AddBlock("pred.b2", c.pred_dim, 1);
  } else {
    const int gates = c.cell == PredictionCell::kLstm ? 4 : 1;
    blocks_.pred_wx =
        params_.AddBlock("pred.wx", gates * c.pred_dim, c.embed_dim);
    blocks_.pred_wh =
        params_.AddBlock("pred.wh", gates * c.pred_dim, c.pred_dim);
    blocks_.pred_b = params_.AddBlock("pred.b", gates * c.pred_dim, 1);
  }
  blocks_.joint_w =
      params_.AddBlock("joint.w", c.joint_hidden, c.enc_dim + c.pred_dim);
  blocks_.joint_b = params_.AddBlock("joint.b", c.joint_hidden, 1);
  blocks_.out_w = params_.AddBlock("out.w", c.num_labels + 1, c.joint_hidden);
  blocks_.out_b = params_.AddBlock("out.b", c.num_labels + 1, 1);
}

TransducerModel TransducerModel::Initialize(const ModelConfig& config,
                                            std::uint64_t seed, double scale) {
  TransducerModel model(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : model.params_.values()) v = dist(rng);
  return model;
}

std::vector<double> TransducerModel::Flatten() const {
  auto v = params_.values();
  return std::vector<double>(v.begin(), v.end());
}

void TransducerModel::Unflatten(std::span<const double> flat) {
  if (flat.size() != params_.size())
    throw ContractViolation("Unflatten: expected " +
                            std::to_string(params_.size()) +
                            " values, got " + std::to_string(flat.size()));
  std::copy(flat.begin(), flat.end(), params_.values().begin());
}

Matrix TransducerModel::Encode(const Matrix& features) const {
  const ModelConfig& c = config_;
  if (features.rows() < 1)
    throw ConfigError("Encode: need at least one frame");
  if (features.cols() != c.input_dim)
    throw ConfigError("Encode: feature dimension " +
                      std::to_string(features.cols()) + " != configured " +
                      std::to_string(c.input_dim));
  const int num_frames = static_cast<int>(features.rows());
  const auto w1 = params_.Mat(blocks_.enc_w1);
  const auto b1 = params_.Vec(blocks_.enc_b1);
  const auto w2 = params_.Mat(blocks_.enc_w2);
  const auto b2 = params_.Vec(blocks_.enc_b2);
  Matrix out(num_frames, c.enc_dim);
  Vector x(c.window_width() * c.input_dim);
  for (int t = 0; t < num_frames; ++t) {
    x.setZero();
    for (int k = -c.window; k <= c.window; ++k) {
      int src = t + k;
      if (src < 0 || src >= num_frames) continue;
      x.segment((k + c.window) * c.input_dim, c.input_dim) =
          features.row(src).transpose();
    }
    Vector u = (w1 * x + b1).array().tanh().matrix();
    out.row(t) = (w2 * u + b2).transpose();
  }
  return out;
}

Vector TransducerModel::PredictContext(const LabelSequence& history) const {
  const ModelConfig& c = config_;
  CheckLabels(vocabulary(), history);
  const auto embed = params_.Mat(blocks_.embed);
  if (!c.full_context()) {
    Label last = history.empty() ? kBos : history.back();
    Vector e = embed.row(last).transpose();
    Vector u = (params_.Mat(blocks_.pred_w1) * e + params_.Vec(blocks_.pred_b1))
                   .array().tanh().matrix();
    return (params_.Mat(blocks_.pred_w2) * u + params_.Vec(blocks_.pred_b2))
        .array().tanh().matrix();
  }
  const auto wx = params_.Mat(blocks_.pred_wx);
  const auto wh = params_.Mat(blocks_.pred_wh);
  const auto b = params_.Vec(blocks_.pred_b);
  const int n = c.pred_dim;
  Vector h = Vector::Zero(n);
  Vector cell = Vector::Zero(n);
  auto step = [&](Label token) {
    Vector pre = wx * embed.row(token).transpose() + wh * h + b;
    if (c.cell == PredictionCell::kElman) {
      h = pre.array().tanh().matrix();
    } else {
      Vector i = Sigmoid(pre.segment(0, n));
      Vector f = Sigmoid(pre.segment(n, n));
      Vector g = pre.segment(2 * n, n).array().tanh().matrix();
      Vector o = Sigmoid(pre.segment(3 * n, n));
      cell = f.cwiseProduct(cell) + i.cwiseProduct(g);
      h = o.cwiseProduct(cell.array().tanh().matrix());
    }
  };
  step(kBos);
  for (Label l : history) step(l);
  return h;
}

Vector TransducerModel::JointLogits(const Vector& h,
                                    const Vector& context) const {
  const ModelConfig& c = config_;
  if (h.size() != c.enc_dim || context.size() != c.pred_dim)
    throw ConfigError("JointLogits: dimension mismatch");
  Vector in(c.enc_dim + c.pred_dim);
  in << h, context;
  Vector z = (params_.Mat(blocks_.joint_w) * in + params_.Vec(blocks_.joint_b))
                 .array().tanh().matrix();
  return params_.Mat(blocks_.out_w) * z + params_.Vec(blocks_.out_b);
}

Vector TransducerModel::StepPosterior(const Vector& h,
                                      const Vector& context) const {
  Vector logits = JointLogits(h, context);
  std::vector<double> p = StableSoftmax({logits.data(), (size_t)logits.size()});
  return Eigen::Map<Vector>(p.data(), p.size());
}

bool TransducerModel::IsEncoderBlock(const std::string& name) {
  return name.rfind("enc.", 0) == 0;
}

LabelSequence Collapse(std::span<const Label> alignment) {
  LabelSequence out;
  for (Label y : alignment)
    if (y != kBlank) out.push_back(y);
  return out;
}

TransducerModel SwapComponents(const TransducerModel& encoder_source,
                               const TransducerModel& predjoint_source) {
  if (!(encoder_source.config() == predjoint_source.config()))
    throw SwapError("SwapComponents: model configurations differ");
  TransducerModel out(encoder_source.config());
  const ParamSet& layout = out.params();
  for (std::size_t i = 0; i < layout.blocks().size(); ++i) {
    const ParamBlock& b = layout.block(static_cast<int>(i));
    const TransducerModel& src = TransducerModel::IsEncoderBlock(b.name)
                                     ? encoder_source
                                     : predjoint_source;
    auto from = src.params().values().subspan(b.offset, b.size());
    std::copy(from.begin(), from.end(),
              out.params().values().begin() + b.offset);
  }
  return out;
}

}  // namespace tslab
