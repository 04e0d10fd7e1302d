#pragma once

#include "fgprop/dataset.hpp"
#include "fgprop/network.hpp"

#include <cstdint>
#include <span>

namespace fgprop {

enum class Loss {
  kMse,           // (1/n) sum ||d_i - d_hat_i||^2
  kCrossEntropy,  // softmax cross-entropy on logits against one-hot targets
};

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 0.05;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Loss loss = Loss::kMse;
};

/// Mini-batch gradient descent. Deterministic for a fixed seed; throws
/// DivergenceError if the loss stops being finite.
Network train(Network net, std::span<const RegressionSample> data, const TrainConfig& config);

/// Mean loss over the samples.
double dataset_loss(const Network& net, std::span<const RegressionSample> data, Loss loss);

/// Fraction of samples whose argmax output matches the argmax target.
double classification_accuracy(const Network& net, std::span<const RegressionSample> data);

}  // namespace fgprop
