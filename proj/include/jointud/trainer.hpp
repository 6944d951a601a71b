#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "jointud/conllu.hpp"
#include "jointud/embedders.hpp"
#include "jointud/joint_model.hpp"
#include "jointud/key_value.hpp"
#include "jointud/layers.hpp"

namespace jointud {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 8;  // sentences
  double learning_rate = 2e-3;
  double lr_decay = 0.5;  // applied after `patience` epochs without dev improvement
  int patience = 2;
  double beta1 = 0.9, beta2 = 0.99, epsilon = 1e-8;
  double clip_norm = 5.0;
  int max_length = 128;  // training window; prediction always sees whole sentences
  std::string select_metric = "auto";  // LAS, UPOS, or auto (LAS when dev has heads)
  int threads = 0;  // prediction workers, 0 = hardware concurrency

  KeyValueSchema schema();
  void validate() const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
class Adam {
 public:
  Adam(ParamStore<Scalar>& params, double beta1, double beta2, double epsilon)
      : params_(params), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& v = params.entry(i).param.value;
      first_.push_back(Matrix<Scalar>::Zero(v.rows(), v.cols()));
      second_.push_back(Matrix<Scalar>::Zero(v.rows(), v.cols()));
    }
  }

  void step(double learning_rate) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_), c2 = 1.0 - std::pow(beta2_, t_);
    const auto lr = static_cast<Scalar>(learning_rate);
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_.entry(i).param;
      first_[i] = static_cast<Scalar>(beta1_) * first_[i] + static_cast<Scalar>(1 - beta1_) * p.grad;
      second_[i] = static_cast<Scalar>(beta2_) * second_[i] + static_cast<Scalar>(1 - beta2_) * p.grad.cwiseAbs2();
      p.value.array() -= lr * (first_[i].array() / static_cast<Scalar>(c1)) /
                         ((second_[i].array() / static_cast<Scalar>(c2)).sqrt() + static_cast<Scalar>(epsilon_));
    }
  }

 private:
  ParamStore<Scalar>& params_;
  double beta1_, beta2_, epsilon_;
  int t_ = 0;
  std::vector<Matrix<Scalar>> first_, second_;
};

// Rescales all gradients so their joint L2 norm is at most `max_norm`;
// returns the norm before clipping.
template <typename Scalar>
double clip_gradients(ParamStore<Scalar>& params, double max_norm) {
  double total = 0;
  for (size_t i = 0; i < params.size(); ++i) total += params.entry(i).param.grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(total);
  if (max_norm > 0 && norm > max_norm) {
    const auto factor = static_cast<Scalar>(max_norm / norm);
    for (size_t i = 0; i < params.size(); ++i) params.entry(i).param.grad *= factor;
  }
  return norm;
}

// A treebank with its contextual vectors in model-config order.
struct Corpus {
  const Treebank* treebank = nullptr;
  std::vector<const ContextVectors*> contexts;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double dev_upos = NAN, dev_las = NAN;
  double learning_rate = 0;
};

// epoch, train_loss, dev_UPOS, dev_LAS separated by tabs.
std::string format_epoch_line(const EpochStats& stats);

struct TrainResult {
  std::unique_ptr<JointModel<float>> model;  // best dev epoch, or last without dev
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
};

// Builds labels and vocabularies from `train`, then trains. The pretrained
// table (if any) fixes `pretrained_dim`.
TrainResult train(ModelConfig model_config, const TrainConfig& config, const Corpus& train, const Corpus* dev,
                  const PretrainedTable* pretrained, const std::function<void(const EpochStats&)>& on_epoch = {});

// Fills UPOS, XPOS, FEATS, LEMMA, HEAD and DEPREL; other columns are kept.
Sentence decode_sentence(const JointModel<float>& model, const Sentence& input, const SentenceScores& scores);

Treebank predict(const JointModel<float>& model, const Corpus& input, const PretrainedTable* pretrained, int threads = 0);

}  // namespace jointud
