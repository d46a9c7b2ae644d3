// core/src/transducer_graph.cc

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

#include "tslab/transducer_graph.h"

#include <cmath>

#include "tslab/error.h"
#include "tslab/numerics.h"

namespace tslab {

namespace {

Vector Sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Vector TanhDeriv(const Vector& y) {
  return (1.0 - y.array().square()).matrix();
}

}  // namespace

TransducerGraph::TransducerGraph(const TransducerModel& model,
                                 const Matrix& features)
    : model_(&model), has_encoder_(true) {
  RunEncoder(features);
  NewNode(-1, kBos);
}

TransducerGraph::TransducerGraph(const TransducerModel& model, Matrix enc_out,
                                 bool)
    : model_(&model), has_encoder_(false), enc_out_(std::move(enc_out)) {
  if (enc_out_.cols() != model.config().enc_dim)
    throw ConfigError("TransducerGraph: encoder output has wrong dimension");
  NewNode(-1, kBos);
}

TransducerGraph TransducerGraph::FromEncoderOutput(const TransducerModel& model,
                                                   Matrix encoder_output) {
  return TransducerGraph(model, std::move(encoder_output), false);
}

void TransducerGraph::RunEncoder(const Matrix& features) {
  const ModelConfig& c = model_->config();
  if (features.rows() < 1)
    throw EmptyInputError("TransducerGraph: utterance has no frames");
  if (features.cols() != c.input_dim)
    throw ConfigError("TransducerGraph: feature dimension " +
                      std::to_string(features.cols()) + " != configured " +
                      std::to_string(c.input_dim));
  const ParamSet& p = model_->params();
  const auto& b = model_->blocks();
  const int num_frames = static_cast<int>(features.rows());
  const int width = c.window_width() * c.input_dim;
  enc_in_ = Matrix::Zero(num_frames, width);
  for (int t = 0; t < num_frames; ++t) {
    for (int k = -c.window; k <= c.window; ++k) {
      int src = t + k;
      if (src < 0 || src >= num_frames) continue;
      enc_in_.block(t, (k + c.window) * c.input_dim, 1, c.input_dim) =
          features.row(src);
    }
  }
  enc_hidden_ = ((enc_in_ * p.Mat(b.enc_w1).transpose()).rowwise() +
                 p.Vec(b.enc_b1).transpose())
                    .array().tanh().matrix();
  enc_out_ = (enc_hidden_ * p.Mat(b.enc_w2).transpose()).rowwise() +
             p.Vec(b.enc_b2).transpose();
}

int TransducerGraph::NewNode(int parent, Label label) {
  const ModelConfig& c = model_->config();
  const ParamSet& p = model_->params();
  const auto& b = model_->blocks();
  Node node;
  node.parent = parent;
  node.label = label;
  Vector e = p.Mat(b.embed).row(label).transpose();
  if (!c.full_context()) {
    node.hidden =
        (p.Mat(b.pred_w1) * e + p.Vec(b.pred_b1)).array().tanh().matrix();
    node.context = (p.Mat(b.pred_w2) * node.hidden + p.Vec(b.pred_b2))
                       .array().tanh().matrix();
  } else {
    const int n = c.pred_dim;
    Vector h_prev = parent >= 0 ? nodes_[parent].context : Vector::Zero(n);
    Vector pre = p.Mat(b.pred_wx) * e + p.Mat(b.pred_wh) * h_prev +
                 p.Vec(b.pred_b);
    if (c.cell == PredictionCell::kElman) {
      node.context = pre.array().tanh().matrix();
    } else {
      Vector c_prev = parent >= 0 ? nodes_[parent].cell : Vector::Zero(n);
      node.gate_i = Sigmoid(pre.segment(0, n));
      node.gate_f = Sigmoid(pre.segment(n, n));
      node.gate_g = pre.segment(2 * n, n).array().tanh().matrix();
      node.gate_o = Sigmoid(pre.segment(3 * n, n));
      node.cell = node.gate_f.cwiseProduct(c_prev) +
                  node.gate_i.cwiseProduct(node.gate_g);
      node.context =
          node.gate_o.cwiseProduct(node.cell.array().tanh().matrix());
    }
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int TransducerGraph::Extend(int node, Label label) {
  const ModelConfig& c = model_->config();
  if (!c.vocabulary().Contains(label))
    throw VocabularyError("TransducerGraph: label " + std::to_string(label) +
                          " is outside the vocabulary");
  // Context-1 states depend on the last label only, so they are shared
  // across parents.
  const long long key =
      c.full_context()
          ? static_cast<long long>(node) * (c.num_labels + 1) + label
          : -static_cast<long long>(label);
  auto it = children_.find(key);
  if (it != children_.end()) return it->second;
  int id = NewNode(c.full_context() ? node : kRoot, label);
  children_.emplace(key, id);
  return id;
}

int TransducerGraph::NodeFor(const LabelSequence& history) {
  int node = kRoot;
  for (Label l : history) node = Extend(node, l);
  return node;
}

std::span<const double> TransducerGraph::LogPosterior(int t, int node) {
  if (t < 0 || t >= NumFrames())
    throw ContractViolation("LogPosterior: frame out of range");
  const long long key = static_cast<long long>(t) * (1LL << 32) + node;
  auto it = joint_index_.find(key);
  if (it != joint_index_.end()) {
    const Vector& lp = joint_[it->second].log_probs;
    return {lp.data(), static_cast<std::size_t>(lp.size())};
  }
  const ModelConfig& c = model_->config();
  const ParamSet& p = model_->params();
  const auto& b = model_->blocks();
  JointEntry entry;
  entry.t = t;
  entry.node = node;
  Vector in(c.enc_dim + c.pred_dim);
  in << enc_out_.row(t).transpose(), nodes_[node].context;
  entry.hidden =
      (p.Mat(b.joint_w) * in + p.Vec(b.joint_b)).array().tanh().matrix();
  Vector logits = p.Mat(b.out_w) * entry.hidden + p.Vec(b.out_b);
  std::vector<double> lp =
      LogSoftmax({logits.data(), static_cast<std::size_t>(logits.size())});
  entry.log_probs = Eigen::Map<Vector>(lp.data(), lp.size());
  entry.grad = Vector::Zero(lp.size());
  joint_.push_back(std::move(entry));
  joint_index_.emplace(key, static_cast<int>(joint_.size()) - 1);
  const Vector& out = joint_.back().log_probs;
  return {out.data(), static_cast<std::size_t>(out.size())};
}

void TransducerGraph::AddLogProbGrad(int t, int node, int output,
                                     double grad) {
  LogPosterior(t, node);
  const long long key = static_cast<long long>(t) * (1LL << 32) + node;
  JointEntry& entry = joint_[joint_index_.at(key)];
  entry.grad[output] += grad;
  entry.has_grad = true;
}

void TransducerGraph::Backward(std::span<double> param_grad) {
  const ModelConfig& c = model_->config();
  const ParamSet& p = model_->params();
  const auto& b = model_->blocks();
  if (param_grad.size() != p.size())
    throw ContractViolation("Backward: gradient buffer has wrong size");

  enc_grad_ = Matrix::Zero(enc_out_.rows(), enc_out_.cols());
  for (Node& n : nodes_) {
    n.grad_context = Vector::Zero(c.pred_dim);
    n.grad_cell = Vector::Zero(c.pred_dim);
  }

  auto out_w = p.Mat(b.out_w);
  auto joint_w = p.Mat(b.joint_w);
  auto g_out_w = p.View(param_grad, b.out_w);
  auto g_out_b = p.VecView(param_grad, b.out_b);
  auto g_joint_w = p.View(param_grad, b.joint_w);
  auto g_joint_b = p.VecView(param_grad, b.joint_b);

  for (const JointEntry& e : joint_) {
    if (!e.has_grad) continue;
    // d/dlogits of sum_k g_k log softmax_k = g - softmax * sum(g).
    Vector probs = e.log_probs.array().exp().matrix();
    Vector d_logits = e.grad - probs * e.grad.sum();
    g_out_w.noalias() += d_logits * e.hidden.transpose();
    g_out_b += d_logits;
    Vector d_pre =
        (out_w.transpose() * d_logits).cwiseProduct(TanhDeriv(e.hidden));
    Vector in(c.enc_dim + c.pred_dim);
    in << enc_out_.row(e.t).transpose(), nodes_[e.node].context;
    g_joint_w.noalias() += d_pre * in.transpose();
    g_joint_b += d_pre;
    Vector d_in = joint_w.transpose() * d_pre;
    enc_grad_.row(e.t) += d_in.head(c.enc_dim).transpose();
    nodes_[e.node].grad_context += d_in.tail(c.pred_dim);
  }

  // Prediction network; children were created after their parents.
  auto embed = p.Mat(b.embed);
  auto g_embed = p.View(param_grad, b.embed);
  for (int id = NumNodes() - 1; id >= 0; --id) {
    Node& n = nodes_[id];
    Vector e = embed.row(n.label).transpose();
    if (!c.full_context()) {
      Vector d_pre2 = n.grad_context.cwiseProduct(TanhDeriv(n.context));
      p.View(param_grad, b.pred_w2).noalias() += d_pre2 * n.hidden.transpose();
      p.VecView(param_grad, b.pred_b2) += d_pre2;
      Vector d_pre1 = (p.Mat(b.pred_w2).transpose() * d_pre2)
                          .cwiseProduct(TanhDeriv(n.hidden));
      p.View(param_grad, b.pred_w1).noalias() += d_pre1 * e.transpose();
      p.VecView(param_grad, b.pred_b1) += d_pre1;
      g_embed.row(n.label) += (p.Mat(b.pred_w1).transpose() * d_pre1).transpose();
      continue;
    }
    const int dim = c.pred_dim;
    Vector h_prev =
        n.parent >= 0 ? nodes_[n.parent].context : Vector::Zero(dim);
    Vector d_pre;
    if (c.cell == PredictionCell::kElman) {
      d_pre = n.grad_context.cwiseProduct(TanhDeriv(n.context));
    } else {
      Vector c_prev = n.parent >= 0 ? nodes_[n.parent].cell : Vector::Zero(dim);
      Vector tanh_c = n.cell.array().tanh().matrix();
      Vector d_o = n.grad_context.cwiseProduct(tanh_c);
      Vector d_c = n.grad_cell + n.grad_context.cwiseProduct(n.gate_o)
                                     .cwiseProduct(TanhDeriv(tanh_c));
      Vector d_i = d_c.cwiseProduct(n.gate_g);
      Vector d_f = d_c.cwiseProduct(c_prev);
      Vector d_g = d_c.cwiseProduct(n.gate_i);
      d_pre.resize(4 * dim);
      d_pre.segment(0, dim) = d_i.cwiseProduct(
          n.gate_i.cwiseProduct((1.0 - n.gate_i.array()).matrix()));
      d_pre.segment(dim, dim) = d_f.cwiseProduct(
          n.gate_f.cwiseProduct((1.0 - n.gate_f.array()).matrix()));
      d_pre.segment(2 * dim, dim) = d_g.cwiseProduct(TanhDeriv(n.gate_g));
      d_pre.segment(3 * dim, dim) = d_o.cwiseProduct(
          n.gate_o.cwiseProduct((1.0 - n.gate_o.array()).matrix()));
      if (n.parent >= 0)
        nodes_[n.parent].grad_cell += d_c.cwiseProduct(n.gate_f);
    }
    p.View(param_grad, b.pred_wx).noalias() += d_pre * e.transpose();
    p.View(param_grad, b.pred_wh).noalias() += d_pre * h_prev.transpose();
    p.VecView(param_grad, b.pred_b) += d_pre;
    g_embed.row(n.label) += (p.Mat(b.pred_wx).transpose() * d_pre).transpose();
    if (n.parent >= 0)
      nodes_[n.parent].grad_context += p.Mat(b.pred_wh).transpose() * d_pre;
  }

  if (!has_encoder_) return;
  auto w2 = p.Mat(b.enc_w2);
  auto g_w1 = p.View(param_grad, b.enc_w1);
  auto g_b1 = p.VecView(param_grad, b.enc_b1);
  auto g_w2 = p.View(param_grad, b.enc_w2);
  auto g_b2 = p.VecView(param_grad, b.enc_b2);
  for (int t = 0; t < NumFrames(); ++t) {
    Vector d_h = enc_grad_.row(t).transpose();
    if (d_h.isZero(0.0)) continue;
    Vector u = enc_hidden_.row(t).transpose();
    g_w2.noalias() += d_h * u.transpose();
    g_b2 += d_h;
    Vector d_u = (w2.transpose() * d_h).cwiseProduct(TanhDeriv(u));
    g_w1.noalias() += d_u * enc_in_.row(t);
    g_b1 += d_u;
  }
}

}  // namespace tslab
