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

#include "core/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "core/errors.hpp"

namespace vulgraph::ad {

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::parameter(Matrix value) { return record(std::move(value), true, nullptr); }

Var Tape::record(Matrix value, bool requires_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& delta) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  assert(delta.rows() == n.value.rows() && delta.cols() == n.value.cols());
  if (n.has_grad) {
    n.grad += delta;
  } else {
    n.grad = delta;
    n.has_grad = true;
  }
}

void Tape::backward(Var output) {
  if (output.rows() != 1 || output.cols() != 1)
    throw DimensionError("backward() needs a 1x1 output, got " + std::to_string(output.rows()) +
                         "x" + std::to_string(output.cols()));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(output, Matrix::Ones(1, 1));
  for (int i = output.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

namespace {

bool needs(Var a) { return a.tape()->requires_grad(a); }
bool needs(Var a, Var b) { return needs(a) || needs(b); }

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

}  // namespace

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), needs(a, b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), needs(a, b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var hadamard(Var a, Var b) {
  check_same_shape(a, b, "hadamard");
  Tape& t = *a.tape();
  return t.record(a.value().cwiseProduct(b.value()), needs(a, b), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  return t.record(a.value() * s, needs(a), [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape();
  return t.record(a.value().array() + s, needs(a), [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var one_minus(Var a) {
  Tape& t = *a.tape();
  return t.record(1.0 - a.value().array(), needs(a), [a](Tape& t, const Matrix& g) { t.accumulate(a, -g); });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  Matrix y_copy = y;
  return t.record(std::move(y), needs(a), [a, y = std::move(y_copy)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value().array().tanh();
  Matrix y_copy = y;
  return t.record(std::move(y), needs(a), [a, y = std::move(y_copy)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  return t.record(a.value().cwiseMax(0.0), needs(a), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Var exp(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value().array().exp();
  Matrix y_copy = y;
  return t.record(std::move(y), needs(a), [a, y = std::move(y_copy)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(y));
  });
}

Var log(Var a, double floor) {
  Tape& t = *a.tape();
  Matrix clamped = a.value().cwiseMax(floor);
  Matrix y = clamped.array().log();
  return t.record(std::move(y), needs(a), [a, floor](Tape& t, const Matrix& g) {
    const Matrix& x = a.value();
    Matrix d = (x.array() > floor).select(g.array() / x.array(), 0.0);
    t.accumulate(a, d);
  });
}

Var pow_int(Var a, int degree) {
  Tape& t = *a.tape();
  Matrix y = a.value().unaryExpr([degree](double x) { return std::pow(x, degree); });
  return t.record(std::move(y), needs(a), [a, degree](Tape& t, const Matrix& g) {
    Matrix d = a.value().unaryExpr([degree](double x) { return degree * std::pow(x, degree - 1); });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), needs(a, b), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols())
    throw DimensionError("matmul_nt: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()));
  Tape& t = *a.tape();
  return t.record(a.value() * b.value().transpose(), needs(a, b), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value());
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var add_row(Var m, Var row) {
  if (row.rows() != 1 || row.cols() != m.cols())
    throw DimensionError("add_row: row vector has shape " + std::to_string(row.rows()) + "x" +
                         std::to_string(row.cols()) + ", expected 1x" + std::to_string(m.cols()));
  Tape& t = *m.tape();
  Matrix y = m.value().rowwise() + row.value().row(0);
  return t.record(std::move(y), needs(m, row), [m, row](Tape& t, const Matrix& g) {
    t.accumulate(m, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var hconcat(Var a, Var b) {
  if (a.rows() != b.rows()) throw DimensionError("hconcat: row counts differ");
  Tape& t = *a.tape();
  Matrix y(a.rows(), a.cols() + b.cols());
  y << a.value(), b.value();
  const Eigen::Index ca = a.cols();
  const Eigen::Index cb = b.cols();
  return t.record(std::move(y), needs(a, b), [a, b, ca, cb](Tape& t, const Matrix& g) {
    t.accumulate(a, g.leftCols(ca));
    t.accumulate(b, g.rightCols(cb));
  });
}

Var vconcat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("vconcat: no inputs");
  Tape& t = *parts[0].tape();
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  bool rg = false;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw DimensionError("vconcat: column counts differ");
    rows += p.rows();
    rg = rg || t.requires_grad(p);
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    y.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return t.record(std::move(y), rg, [keep](Tape& t, const Matrix& g) {
    Eigen::Index at = 0;
    for (const Var& p : keep) {
      t.accumulate(p, g.middleRows(at, p.rows()));
      at += p.rows();
    }
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  Tape& t = *a.tape();
  Matrix y(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    y.row(static_cast<Eigen::Index>(r)) = a.value().row(index[r]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return t.record(std::move(y), needs(a), [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) d.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
    t.accumulate(a, d);
  });
}

Var edge_sum(Var a, std::span<const int> src, std::span<const int> dst, Eigen::Index out_rows) {
  if (src.size() != dst.size()) throw DimensionError("edge_sum: src/dst length differ");
  Tape& t = *a.tape();
  Matrix y = Matrix::Zero(out_rows, a.cols());
  for (std::size_t e = 0; e < src.size(); ++e) {
    if (src[e] < 0 || src[e] >= a.rows() || dst[e] < 0 || dst[e] >= out_rows)
      throw DimensionError("edge_sum: endpoint out of range");
    y.row(dst[e]) += a.value().row(src[e]);
  }
  std::vector<int> s(src.begin(), src.end());
  std::vector<int> d(dst.begin(), dst.end());
  return t.record(std::move(y), needs(a), [a, s = std::move(s), d = std::move(d)](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t e = 0; e < s.size(); ++e) da.row(s[e]) += g.row(d[e]);
    t.accumulate(a, da);
  });
}

Var pad_rows(Var a, Eigen::Index rows) {
  if (a.rows() >= rows) return a;
  Tape& t = *a.tape();
  Matrix y = Matrix::Zero(rows, a.cols());
  y.topRows(a.rows()) = a.value();
  return t.record(std::move(y), needs(a), [a](Tape& t, const Matrix& g) { t.accumulate(a, g.topRows(a.rows())); });
}

Var im2col(Var a, int width) {
  const Eigen::Index len = a.rows() - width + 1;
  if (width < 1 || len < 1) throw DimensionError("im2col: sequence shorter than kernel width");
  const Eigen::Index c = a.cols();
  Tape& t = *a.tape();
  Matrix y(len, c * width);
  for (Eigen::Index r = 0; r < len; ++r)
    for (int o = 0; o < width; ++o) y.block(r, o * c, 1, c) = a.value().row(r + o);
  return t.record(std::move(y), needs(a), [a, width, len, c](Tape& t, const Matrix& g) {
    Matrix d = Matrix::Zero(a.rows(), c);
    for (Eigen::Index r = 0; r < len; ++r)
      for (int o = 0; o < width; ++o) d.row(r + o) += g.block(r, o * c, 1, c);
    t.accumulate(a, d);
  });
}

Var maxpool_rows(Var a, int window) {
  const Eigen::Index out = a.rows() / window;
  if (window < 1 || out < 1) throw DimensionError("maxpool_rows: fewer rows than pooling window");
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y(out, x.cols());
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(out * x.cols()));
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = r * window;
      for (int o = 1; o < window; ++o)
        if (x(r * window + o, c) > x(best, c)) best = r * window + o;
      y(r, c) = x(best, c);
      arg[static_cast<std::size_t>(r * x.cols() + c)] = best;
    }
  }
  return t.record(std::move(y), needs(a), [a, arg = std::move(arg), out](Tape& t, const Matrix& g) {
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) d(arg[static_cast<std::size_t>(r * a.cols() + c)], c) += g(r, c);
    t.accumulate(a, d);
  });
}

Var sum_rows(Var a) {
  Tape& t = *a.tape();
  const Eigen::Index n = a.rows();
  return t.record(a.value().colwise().sum(), needs(a), [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a, g.replicate(n, 1));
  });
}

Var mean_rows(Var a) {
  const Eigen::Index n = a.rows();
  if (n == 0) throw DimensionError("mean_rows: empty input");
  return scale(sum_rows(a), 1.0 / static_cast<double>(n));
}

Var sum_cols(Var a) {
  Tape& t = *a.tape();
  const Eigen::Index n = a.cols();
  return t.record(a.value().rowwise().sum(), needs(a), [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a, g.replicate(1, n));
  });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return t.record(std::move(y), needs(a), [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var log_softmax_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    y.row(r) = x.row(r).array() - lse;
  }
  Matrix y_copy = y;
  return t.record(std::move(y), needs(a), [a, y = std::move(y_copy)](Tape& t, const Matrix& g) {
    Matrix p = y.array().exp();
    Matrix d = g - (p.array().colwise() * g.rowwise().sum().array()).matrix();
    t.accumulate(a, d);
  });
}

Var segment_log_softmax(Var column, std::span<const int> offsets) {
  if (column.cols() != 1) throw DimensionError("segment_log_softmax: expects a column vector");
  Tape& t = *column.tape();
  const Matrix& x = column.value();
  Matrix y(x.rows(), 1);
  std::vector<int> off(offsets.begin(), offsets.end());
  for (std::size_t s = 0; s + 1 < off.size(); ++s) {
    const int b = off[s], e = off[s + 1];
    if (e <= b) continue;
    const double m = x.middleRows(b, e - b).maxCoeff();
    const double lse = m + std::log((x.middleRows(b, e - b).array() - m).exp().sum());
    y.middleRows(b, e - b) = x.middleRows(b, e - b).array() - lse;
  }
  Matrix y_copy = y;
  return t.record(std::move(y), needs(column),
                  [column, off = std::move(off), y = std::move(y_copy)](Tape& t, const Matrix& g) {
                    Matrix d(g.rows(), 1);
                    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                      const int b = off[s], e = off[s + 1];
                      if (e <= b) continue;
                      const double gs = g.middleRows(b, e - b).sum();
                      d.middleRows(b, e - b) =
                          g.middleRows(b, e - b).array() - y.middleRows(b, e - b).array().exp() * gs;
                    }
                    t.accumulate(column, d);
                  });
}

Var weighted_sum(Var a, const Matrix& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols())
    throw DimensionError("weighted_sum: weight shape mismatch");
  Tape& t = *a.tape();
  Matrix y(1, 1);
  y(0, 0) = a.value().cwiseProduct(weights).sum();
  return t.record(std::move(y), needs(a), [a, weights](Tape& t, const Matrix& g) { t.accumulate(a, weights * g(0, 0)); });
}

Var gather_mean_rows(Var table, const std::vector<std::vector<int>>& bags) {
  Tape& t = *table.tape();
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(bags.size()), table.cols());
  for (std::size_t r = 0; r < bags.size(); ++r) {
    if (bags[r].empty()) continue;
    for (int i : bags[r]) {
      if (i < 0 || i >= table.rows()) throw DimensionError("gather_mean_rows: row index out of range");
      y.row(static_cast<Eigen::Index>(r)) += table.value().row(i);
    }
    y.row(static_cast<Eigen::Index>(r)) /= static_cast<double>(bags[r].size());
  }
  return t.record(std::move(y), needs(table), [table, bags](Tape& t, const Matrix& g) {
    Matrix d = Matrix::Zero(table.rows(), table.cols());
    for (std::size_t r = 0; r < bags.size(); ++r) {
      if (bags[r].empty()) continue;
      const double w = 1.0 / static_cast<double>(bags[r].size());
      for (int i : bags[r]) d.row(i) += w * g.row(static_cast<Eigen::Index>(r));
    }
    t.accumulate(table, d);
  });
}

}  // namespace vulgraph::ad
