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

#include "core/optim.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace vulgraph::optim {

void Adam::step(std::span<Eigen::MatrixXd* const> params, std::span<const Eigen::MatrixXd> grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }
  if (m_.size() != params.size()) throw DimensionError("Adam: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Eigen::MatrixXd& g = grads[i];
    if (g.rows() != params[i]->rows() || g.cols() != params[i]->cols())
      throw DimensionError("Adam: gradient shape mismatch");
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseAbs2();
    params[i]->array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

}  // namespace vulgraph::optim
