/*
 * Copyright 2026 The rfclust Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rfclust/config.hpp"

#include <fstream>
#include <set>

#include "rfclust/errors.hpp"

namespace rfclust {

nlohmann::json RunConfig::to_json() const {
  return {{"arch", std::string(to_string(arch))},
          {"seed", seed},
          {"k", k},
          {"embed_dim", embed_dim},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"epochs", epochs},
          {"reinit_head", reinit_head},
          {"refit_pca", refit_pca},
          {"reset_bn", reset_bn},
          {"pretrain_epochs", pretrain_epochs},
          {"joint_epochs", joint_epochs},
          {"alpha", alpha},
          {"beta", beta},
          {"margin", margin},
          {"target_per_batch", target_per_batch}};
}

void RunConfig::merge(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "arch",   "seed",     "k",          "embed_dim",       "batch_size",   "learning_rate",
      "weight_decay", "epochs", "reinit_head", "refit_pca",  "reset_bn",     "pretrain_epochs",
      "joint_epochs", "alpha",  "beta",       "margin",          "target_per_batch"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (doc.contains("arch")) arch = parse_variant(doc["arch"].get<std::string>());
    seed = doc.value("seed", seed);
    k = doc.value("k", k);
    embed_dim = doc.value("embed_dim", embed_dim);
    batch_size = doc.value("batch_size", batch_size);
    learning_rate = doc.value("learning_rate", learning_rate);
    weight_decay = doc.value("weight_decay", weight_decay);
    epochs = doc.value("epochs", epochs);
    reinit_head = doc.value("reinit_head", reinit_head);
    refit_pca = doc.value("refit_pca", refit_pca);
    reset_bn = doc.value("reset_bn", reset_bn);
    pretrain_epochs = doc.value("pretrain_epochs", pretrain_epochs);
    joint_epochs = doc.value("joint_epochs", joint_epochs);
    alpha = doc.value("alpha", alpha);
    beta = doc.value("beta", beta);
    margin = doc.value("margin", margin);
    target_per_batch = doc.value("target_per_batch", target_per_batch);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  RunConfig cfg;
  try {
    cfg.merge(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return cfg;
}

TrainConfig RunConfig::ssdc_config() const {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.num_clusters = k;
  c.embed_dim = embed_dim;
  c.adam.learning_rate = learning_rate;
  c.adam.weight_decay = weight_decay;
  c.seed = seed;
  c.reinit_head_each_round = reinit_head;
  c.refit_pca_each_round = refit_pca;
  c.reset_bn_stats_each_round = reset_bn;
  return c;
}

AeConfig RunConfig::ae_config() const {
  AeConfig c;
  c.variant = arch;
  c.pretrain_epochs = pretrain_epochs;
  c.joint_epochs = joint_epochs;
  c.batch_size = batch_size;
  c.num_clusters = k;
  c.embed_dim = embed_dim;
  c.alpha = alpha;
  c.beta = beta;
  c.margin = margin;
  c.target_per_batch = target_per_batch;
  c.adam.learning_rate = learning_rate;
  c.adam.weight_decay = weight_decay;
  c.seed = seed;
  return c;
}

}  // namespace rfclust
