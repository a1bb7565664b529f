#pragma once

#include <vector>

#include "sizesym/nn/graph.hpp"

namespace sizesym::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Bias-corrected Adam over a fixed parameter list. Refuses frozen parameters.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  void zero_grad();
  void step();
  long steps() const { return t_; }
  const std::vector<Parameter*>& parameters() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace sizesym::nn
