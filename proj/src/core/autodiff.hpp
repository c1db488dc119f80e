// Copyright 2026 The vulgraph Authors
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

#pragma once

// Minimal reverse-mode differentiation over dense double matrices. A Tape
// owns every intermediate; Var is a cheap handle into it. Only the ops the
// graph model, its readout and the distillation losses need are provided.

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace vulgraph::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf whose gradient is kept after backward().
  Var parameter(Matrix value);
  // Records an interior node. `backward` is dropped when no input needs a gradient.
  Var record(Matrix value, bool requires_grad, Backward backward);

  // Seeds d(output)/d(output) = 1; output must be 1x1.
  void backward(Var output);

  const Matrix& value(Var v) const { return nodes_[v.id_].value; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  // Zero matrix of the right shape when nothing flowed into v.
  Matrix grad(Var v) const;
  void accumulate(Var v, const Matrix& delta);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// Shape-preserving arithmetic.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
// Natural log with inputs clamped from below at `floor`.
Var log(Var a, double floor = 0.0);
Var pow_int(Var a, int degree);

// a * b and a * b^T.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
// Adds a 1 x c row to every row of m.
Var add_row(Var m, Var row);
Var hconcat(Var a, Var b);
Var vconcat(std::span<const Var> parts);

// out.row(r) = a.row(index[r]).
Var gather_rows(Var a, std::span<const int> index);
// out.row(dst[e]) += a.row(src[e]); out has `out_rows` rows.
Var edge_sum(Var a, std::span<const int> src, std::span<const int> dst, Eigen::Index out_rows);
// Appends zero rows up to `rows` (no-op when already that tall).
Var pad_rows(Var a, Eigen::Index rows);
// Rows [t, t+width) flattened per output row: out(t, o*C + c) = a(t+o, c).
Var im2col(Var a, int width);
// Non-overlapping max over row windows; trailing rows that do not fill a window are dropped.
Var maxpool_rows(Var a, int window);
Var sum_rows(Var a);   // 1 x cols
Var mean_rows(Var a);  // 1 x cols
Var sum_cols(Var a);   // rows x 1
Var sum_all(Var a);    // 1 x 1
Var log_softmax_rows(Var a);
// Log-softmax of a column vector inside contiguous segments [offsets[s], offsets[s+1]).
Var segment_log_softmax(Var column, std::span<const int> offsets);
// sum(a .* weights) as 1 x 1, weights constant.
Var weighted_sum(Var a, const Matrix& weights);
// Row r = mean of table rows listed in bags[r]; empty bag gives a zero row.
Var gather_mean_rows(Var table, const std::vector<std::vector<int>>& bags);

}  // namespace vulgraph::ad
