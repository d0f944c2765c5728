#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bemask/masking.hpp"

namespace bemask {

/// Tiny bag-of-context masked-token predictor. For a prediction position p
/// the input feature is the mean embedding of all non-masked, non-padding
/// tokens in the window concatenated with the embedding at p itself, pushed
/// through one tanh layer and a softmax over the vocabulary. Deliberately
/// small: it exists to exercise batch files end to end and to measure
/// perplexity, not to model language well.
struct ToyModel {
    int32_t vocab_size = 0;
    int32_t dim = 0;     // embedding width d
    int32_t hidden = 0;  // hidden width h

    double learning_rate = 0.1;
    int32_t epochs = 1;
    double init_scale = 0.05;
    uint64_t seed = 0;

    // Row-major parameter tensors. w1 takes the 2d-wide concatenated
    // feature, so its shape is (2*dim) x hidden.
    std::vector<double> embedding;  // vocab_size x dim
    std::vector<double> w1;         // (2*dim) x hidden
    std::vector<double> b1;         // hidden
    std::vector<double> w2;         // hidden x vocab_size
    std::vector<double> b2;         // vocab_size

    int64_t parameter_count() const;
    double parameter(int64_t flat_index) const {
        return const_cast<ToyModel*>(this)->parameter(flat_index);
    }
    /// Read/write access to the flattened parameter vector, used by the
    /// finite-difference check. Index order: embedding, w1, b1, w2, b2.
    double& parameter(int64_t flat_index);
};

/// Uniform init in [-init_scale, init_scale], drawn from a keyed stream so
/// the same seed always builds the same model.
ToyModel make_toy_model(int32_t vocab_size, int32_t dim, int32_t hidden,
                        double learning_rate, int32_t epochs,
                        double init_scale, uint64_t seed);

/// Probability distributions over the vocabulary for the requested
/// positions. Each row sums to 1. A window whose every token is masked or
/// padding uses a zero context vector.
std::vector<std::vector<double>> forward(const ToyModel& model,
                                         const std::vector<int32_t>& input_ids,
                                         const std::vector<uint8_t>& attention_mask,
                                         const std::vector<int32_t>& positions,
                                         int32_t mask_token_id);

struct TrainResult {
    std::vector<double> epoch_loss;  // mean NLL per epoch, nats
    int64_t total_positions = 0;
};

/// Deterministic single-threaded mini-batch gradient descent on the mean
/// cross-entropy at labeled positions. Examples are grouped into training
/// batches by their batch_index, in file order. A non-finite loss aborts
/// with the learning rate and batch id in the message.
TrainResult train(ToyModel& model, const std::vector<MaskedExample>& examples,
                  int32_t mask_token_id);

/// Max relative error between analytic gradients and central finite
/// differences (step 1e-5) over every parameter, on one example.
double grad_check(const ToyModel& model, const MaskedExample& example,
                  int32_t mask_token_id);

struct EvalResult {
    double cross_entropy = 0.0;  // mean NLL over masked positions, nats
    double perplexity = 1.0;     // exp(cross_entropy)
    int64_t masked_position_count = 0;
};

/// Mean NLL and perplexity over every labeled position of the eval set.
/// Zero labeled positions raise ConfigError (the metric is undefined).
EvalResult perplexity(const ToyModel& model,
                      const std::vector<MaskedExample>& examples,
                      int32_t mask_token_id);

/// Versioned binary checkpoint: magic, JSON header with dimensions and
/// hyperparameters, then the row-major little-endian parameter dump.
void save_model(const ToyModel& model, const std::string& path,
                const std::string& provenance_json = "");
ToyModel load_model(const std::string& path);

}  // namespace bemask
