// Finite-difference checks of the training objectives (64-bit build).

#include <gtest/gtest.h>

#include "advca/engine.hpp"
#include "support/fixtures.hpp"
#include "support/objective_gradcheck.hpp"

using namespace advca;
using namespace advca::testing;

TEST(ObjectiveGradients, AllParametersMatchFiniteDifferences) {
  for (const auto& check : check_objective_gradients(20, 7)) {
    EXPECT_LT(check.max_rel_error, 1e-4) << check.objective << " worst " << check.worst;
    EXPECT_GT(check.checked, 0u) << check.objective;
    // Kinks are rare; most coordinates must actually be compared.
    EXPECT_LT(check.skipped_kinks, check.checked / 20 + 1) << check.objective;
  }
}

TEST(ObjectiveGradients, AdversarialRegularizer) {
  const auto graphs = small_random_graphs(5, 3);
  ModelConfig mc = tiny_model(3);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const ModelBundle bundle = ModelBundle::create(mc, 40 + i);
    const GraphInput input = make_input(graphs[i]);
    const Batch batch{&input};
    const auto r = check_gradients([&] { return adversarial_objective(batch, bundle, TrainConfig{}).reg; },
                                   leaves_of({bundle.augmenter_params()}), 1e-4);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  }
}

TEST(ObjectiveGradients, MaskNetsReceiveGradient) {
  const auto graphs = small_random_graphs(3, 5);
  const ModelBundle bundle = ModelBundle::create(tiny_model(3), 2);
  const auto inputs = make_inputs(graphs);
  const Batch batch = batch_of(inputs);
  const auto adv = adversarial_objective(batch, bundle, TrainConfig{});
  (adv.adv_loss - adv.reg).backward();
  const auto cau = causal_objective(batch, bundle, TrainConfig{});
  (cau.cau_loss + cau.reg).backward();
  for (const ParamList& group : {bundle.augmenter_params(), bundle.generator_params()}) {
    double norm = 0.0;
    for (const auto& p : group) {
      for (real g : p.tensor.grad()) norm += g * g;
    }
    EXPECT_GT(norm, 0.0) << group.front().name;
  }
}
