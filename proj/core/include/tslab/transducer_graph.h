// core/include/tslab/transducer_graph.h

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

#ifndef TSLAB_TRANSDUCER_GRAPH_H_
#define TSLAB_TRANSDUCER_GRAPH_H_

#include <span>
#include <unordered_map>
#include <vector>

#include "tslab/model.h"

namespace tslab {

// Per-utterance evaluation cache with reverse-mode gradients.
//
// Prediction-network states are kept in a prefix tree (node 0 is the empty
// history). Joint-network outputs are cached per (frame, node). Losses add
// d loss / d log p(output | frame, node) through AddLogProbGrad and then call
// Backward once; accumulation order is creation order, so results are
// bit-reproducible.
//
// The graph references the model; the model must outlive it and must not be
// modified while the graph is alive.
class TransducerGraph {
 public:
  static constexpr int kRoot = 0;

  TransducerGraph(const TransducerModel& model, const Matrix& features);

  // Uses the given rows as encoder outputs. Backward then skips encoder
  // parameters and leaves d loss / d h in EncoderOutputGrad().
  static TransducerGraph FromEncoderOutput(const TransducerModel& model,
                                           Matrix encoder_output);

  const TransducerModel& model() const { return *model_; }
  int NumFrames() const { return static_cast<int>(enc_out_.rows()); }
  int NumNodes() const { return static_cast<int>(nodes_.size()); }

  int Extend(int node, Label label);
  int NodeFor(const LabelSequence& history);
  const Vector& Context(int node) const { return nodes_[node].context; }
  const Matrix& EncoderOutput() const { return enc_out_; }

  // Log posteriors over {blank} + labels at frame t given the node's history.
  std::span<const double> LogPosterior(int t, int node);

  void AddLogProbGrad(int t, int node, int output, double grad);

  // Accumulates into param_grad (same layout as model().params()).
  void Backward(std::span<double> param_grad);

  const Matrix& EncoderOutputGrad() const { return enc_grad_; }

 private:
  struct Node {
    int parent = -1;
    Label label = kBos;
    Vector context;      // prediction output (h for recurrent cells)
    Vector cell;         // lstm memory
    Vector gate_i, gate_f, gate_g, gate_o;
    Vector hidden;       // context-1 first layer
    Vector grad_context;
    Vector grad_cell;
  };
  struct JointEntry {
    int t = 0;
    int node = 0;
    Vector hidden;
    Vector log_probs;
    Vector grad;
    bool has_grad = false;
  };

  TransducerGraph(const TransducerModel& model, Matrix enc_out, bool own_enc);
  int NewNode(int parent, Label label);
  void RunEncoder(const Matrix& features);

  const TransducerModel* model_;
  bool has_encoder_ = false;
  Matrix enc_in_;      // windowed inputs
  Matrix enc_hidden_;
  Matrix enc_out_;
  Matrix enc_grad_;
  std::vector<Node> nodes_;
  std::unordered_map<long long, int> children_;
  std::vector<JointEntry> joint_;
  std::unordered_map<long long, int> joint_index_;
};

}  // namespace tslab

#endif  // TSLAB_TRANSDUCER_GRAPH_H_
