#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::autoenc {

constexpr int kInputDim = 67;
constexpr int kHiddenDim = 64;

enum class Activation { Linear, Tanh };

struct AeTrainConfig {
    int epochs = 60;
    double learning_rate = 0.05;
    int batch_size = 256;  // 0 = full batch
    Activation activation = Activation::Linear;
    std::uint64_t seed = 1;
};

// Single-hidden-layer autoencoder (67 -> 64 -> 67) with per-feature
// standardization fitted on the training normals.
struct AutoencoderModel {
    std::vector<double> feature_mean;  // 67
    std::vector<double> feature_std;   // 67, floored at 1e-9
    std::vector<double> enc_w;         // 64 x 67, row-major
    std::vector<double> enc_b;         // 64
    std::vector<double> dec_w;         // 67 x 64, row-major
    std::vector<double> dec_b;         // 67
    Activation activation = Activation::Linear;
    double first_epoch_mse = 0.0;
    double final_epoch_mse = 0.0;
};

// Trains by seeded mini-batch gradient descent on mean squared
// reconstruction error over standardized inputs. Requires at least
// kHiddenDim vectors. Throws NumericError if the loss stops being finite.
AutoencoderModel train_autoencoder(const std::vector<std::vector<double>>& normals,
                                   const AeTrainConfig& config);

// Mean absolute difference between the standardized input and its
// reconstruction. Throws DataError on a wrong dimension.
double reconstruction_score(const AutoencoderModel& model, std::span<const double> instance);

void save_model(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_model(const std::string& path);

}  // namespace agidet::autoenc
