#pragma once

#include "geots/nn/tensor.hpp"

namespace geots::nn {

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter set.
class Adam {
 public:
  Adam(ParamMap& params, AdamSettings settings = {});

  void step();
  void zero_grad();
  const AdamSettings& settings() const { return settings_; }

 private:
  ParamMap& params_;
  AdamSettings settings_;
  std::vector<Mat> m_, v_;
  long step_count_ = 0;
};

}  // namespace geots::nn
