#pragma once

// Planted sentiment-like task for the logistic backend. Sentences mix
// class-indicative words ("pos3", "neg7") with neutral filler ("neu42"), and
// each prompt's demonstrations carry one indicative word apiece, so the pool
// contains prompts whose demos bias the classifier by different amounts.

#include "pflat/logistic_bag.hpp"
#include "pflat/prompt.hpp"

#include <cstdint>

namespace pflat::testing {

struct PlantedOptions {
  int indicative_words = 20;  // per class
  int neutral_words = 120;
  int sentence_indicative = 2;
  int sentence_neutral = 4;
  double label_noise = 0.05;
  int train_size = 600;
  int test_size = 300;
  int dev_per_class = 8;
  int prompts = 20;
  int demos = 5;
  int instruction_min = 2;
  int instruction_max = 11;
  int demo_indicative = 1;
  int demo_neutral = 3;
  int vocab_size = 1024;
  double l2 = 1e-3;
  int train_epochs = 3000;
};

struct PlantedTask {
  Verbalizer verbalizer;
  LabeledSet train;
  LabeledSet test;
  LabeledSet dev;
  PromptPool pool;
  LogisticBagModel model;
};

Verbalizer planted_verbalizer();

/// Fully determined by `seed`.
PlantedTask make_planted_task(std::uint64_t seed, const PlantedOptions& options = {});

}  // namespace pflat::testing
