#pragma once

#include "fgprop/dataset.hpp"
#include "fgprop/network.hpp"
#include "fgprop/train.hpp"

#include <cstdint>

namespace fgprop {

/// A trained desk-scale classifier: residual MLP on procedurally rendered
/// 8x8 digit-like images, with an 80/20 train/test split.
struct DeskSetup {
  Network net;
  Dataset train;
  Dataset test;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct DeskOptions {
  int samples = 2000;
  int side = 8;
  int hidden = 32;
  int blocks = 1;
  TrainConfig training{40, 0.1, 32, 0, Loss::kCrossEntropy};
};

DeskSetup make_desk_digit_setup(std::uint64_t seed, const DeskOptions& options = {});

}  // namespace fgprop
