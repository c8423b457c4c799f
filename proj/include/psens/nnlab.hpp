// Copyright 2026 The psens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Pixel-level sensitivity experiments on synthetic bar images: data
// generation, a 25-8-8-1 sigmoid MLP expressed as a symbolic loss graph,
// full-batch SGD / DP-SGD training and per-pixel partial-sensitivity reports.

#ifndef PSENS_NNLAB_HPP
#define PSENS_NNLAB_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include <psens/exec.hpp>
#include <psens/expr.hpp>
#include <psens/privacy.hpp>
#include <psens/sens.hpp>

namespace psens::nn
{

inline constexpr int kSide = 5;
inline constexpr int kPixels = kSide * kSide;
inline constexpr int kHidden = 8;
// W1 (25x8), W2 (8x8), b2 (8), W3 (8x1).
inline constexpr int kParams = kPixels * kHidden + kHidden * kHidden + kHidden + kHidden;
inline constexpr int kBarIndex = 2;

// Parameter layout inside the flat weight vector.
inline constexpr int kW1Offset = 0;
inline constexpr int kW2Offset = kW1Offset + kPixels * kHidden;
inline constexpr int kB2Offset = kW2Offset + kHidden * kHidden;
inline constexpr int kW3Offset = kB2Offset + kHidden;

enum class Label : int { kVertical = 0, kHorizontal = 1 };

struct DataSpec {
    int n_train_per_class = 1000;
    int n_test_per_class = 100;
    double noise_std = 0.2;
    std::uint64_t seed = 7;

    void validate() const;
};

enum class Split { kTrain, kTest };
std::string_view to_string(Split s) noexcept;

struct Dataset {
    RowMatrixXd images; // one 25-pixel row-major image per row
    Eigen::VectorXi labels;
    Split split = Split::kTrain;

    Eigen::Index size() const noexcept { return images.rows(); }
};

struct SyntheticData {
    DataSpec spec;
    Dataset train;
    Dataset test;
};

// Noise-free base image: white (1.0) with a black (0.0) centre bar.
Eigen::VectorXd base_image(Label label);

SyntheticData gen_synthetic(const DataSpec &spec);

/// Symbolic model: p = sigmoid(W3' sigmoid(W2' sigmoid(W1' x) + b2)) and the
/// binary cross-entropy loss -[y ln p + (1 - y) ln(1 - p)]. Compiled programs
/// are cached on first use.
struct ModelGraph {
    explicit ModelGraph(ExprGraph g) : graph(std::move(g)) {}

    ExprGraph graph;
    NodeId loss_root;
    NodeId prob_root;
    std::vector<std::string> param_vars; // w0 ... w279
    std::vector<std::string> input_vars; // x0 ... x24
    std::string label_var = "y";

    // params, then pixels, then label.
    std::vector<std::string> program_inputs() const;

    const Program &training_program();
    const Program &probability_program();
    const Program &ps_program(PsVariant variant);

private:
    std::optional<Program> m_training;
    std::optional<Program> m_probability;
    std::array<std::optional<Program>, 2> m_ps;
};

ModelGraph build_mlp(ExprGraph graph = ExprGraph());

enum class Optimizer { kSgd, kDpSgd };
std::string_view to_string(Optimizer o) noexcept;
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
    Optimizer optimizer = Optimizer::kSgd;
    double learning_rate = 0.1;
    int max_epochs = 5000;
    double convergence_tol = 1e-7;
    // dpsgd only. learning_rate above is authoritative.
    DpSgdParams dp;
    std::uint64_t init_seed = 42;
    bool record_trajectory = true;
};

struct EpochRecord {
    int epoch;          // number of updates applied so far
    double train_loss;  // mean loss at the current weights
    double test_accuracy;
};

struct TrainResult {
    Eigen::VectorXd initial_weights;
    Eigen::VectorXd weights;
    // Weights after 0, 1, ..., epochs updates (when recorded).
    std::vector<Eigen::VectorXd> trajectory;
    std::vector<EpochRecord> log;
    int epochs = 0;
    bool converged = false;
};

class NumericalFailure : public Error
{
public:
    NumericalFailure(Eigen::Index sample, int epoch);
    Eigen::Index sample_index() const noexcept { return m_sample; }
    int epoch() const noexcept { return m_epoch; }

private:
    Eigen::Index m_sample;
    int m_epoch;
};

// Per layer uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Eigen::VectorXd init_weights(std::uint64_t seed);

// Full-batch gradient descent; the mean of per-sample gradients is
// accumulated in row order. Stops when |loss_t - loss_{t-1}| < convergence_tol.
TrainResult train_sgd(ModelGraph &model, const Dataset &train, const Dataset *test, const TrainConfig &cfg);

// As train_sgd, with per-sample L2 clipping and Gaussian noise of std
// noise_multiplier * clip_bound added to the summed clipped gradients.
// Noise for epoch t comes from the DP sub-stream t of dp.seed.
TrainResult train_dpsgd(ModelGraph &model, const Dataset &train, const Dataset *test, const TrainConfig &cfg);

TrainResult train(ModelGraph &model, const Dataset &train, const Dataset *test, const TrainConfig &cfg);

double mean_loss(ModelGraph &model, const Eigen::VectorXd &weights, const Dataset &data);
double accuracy(ModelGraph &model, const Eigen::VectorXd &weights, const Dataset &data);

// Partial sensitivity of the loss with respect to the 25 pixels. NaN marks
// components that are undefined (gradient norm of zero).
Eigen::VectorXd pixel_partial_sensitivity(ModelGraph &model, const Eigen::VectorXd &weights,
                                          std::span<const double> pixels, int label, PsVariant variant);

struct PsReport {
    PsVariant variant = PsVariant::kFractional;
    RowMatrixXd per_sample_ps; // samples x 25, NaN = undefined
    Eigen::VectorXd grad_norm;
    Eigen::VectorXi labels;

    // Row = class label. NaN where a class has no defined samples.
    RowMatrixXd max_abs_map;
    RowMatrixXd min_signed;
    RowMatrixXd max_signed;

    // Shared bin edges (bins + 1) over the pooled defined values.
    Eigen::VectorXd bin_edges;
    // pixel x bin
    Eigen::MatrixXi histogram;
    Eigen::VectorXi undefined_counts;
};

PsReport ps_report(ModelGraph &model, const Eigen::VectorXd &weights, const Dataset &split, PsVariant variant,
                   int bins = 50);

struct DispersionSummary {
    // Mean |PS| over every defined (sample, pixel) entry.
    double pooled_mean_abs;
    // Per-pixel sample std divided by that pixel's mean |PS|, averaged over pixels.
    double normalized_dispersion;
};

DispersionSummary summarize_dispersion(const PsReport &report);

} // namespace psens::nn

#endif
