#include "fgprop/desk.hpp"

namespace fgprop {

DeskSetup make_desk_digit_setup(std::uint64_t seed, const DeskOptions& options) {
  const Dataset all = make_digit_dataset(options.samples, options.side, seed);
  auto [train_set, test_set] = split_dataset(all, 0.8, seed + 1);
  Network net = make_residual_mlp(all.input_dim, options.hidden, options.blocks, 10, seed + 2);
  TrainConfig training = options.training;
  training.seed = seed + 3;
  net = train(std::move(net), train_set.samples, training);
  const double train_acc = classification_accuracy(net, train_set.samples);
  const double test_acc = classification_accuracy(net, test_set.samples);
  return {std::move(net), std::move(train_set), std::move(test_set), train_acc, test_acc};
}

}  // namespace fgprop
