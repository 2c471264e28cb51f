// DGCNN subgraph classifier: graph convolutions, sort pooling, a 1-D
// convolutional head, hand-written gradients and Adam training.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "muxlink/dataset.hpp"
#include "muxlink/graph.hpp"

namespace muxlink {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Hyperparams {
  std::vector<int> conv_channels{32, 32, 32, 1};
  std::array<int, 2> conv1d_channels{16, 32};
  int conv1d_kernel2 = 5;
  int dense_units = 128;
  double dropout = 0.5;
  int epochs = 100;
  double learning_rate = 1e-4;
  double sortpool_fraction = 0.60;
  int batch_size = 50;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  int embedding_width() const;  // sum of conv_channels
  void validate() const;
};

/// Trainable weights in one flat vector, addressed through named blocks.
class Model {
 public:
  struct Block {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
  };

  Model(Hyperparams hp, int max_label, int k);

  const Hyperparams& hyperparams() const { return hp_; }
  int max_label() const { return max_label_; }
  int k() const { return k_; }
  int feature_width() const;
  /// Length of the second 1-D convolution's output.
  int conv2_length() const;

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  Eigen::Map<Matrix> block(std::size_t i);
  Eigen::Map<const Matrix> block(std::size_t i) const;
  /// View of block `i` inside an arbitrary vector with this model's layout.
  Eigen::Map<Matrix> block_in(Vector& v, std::size_t i) const;

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every block.
  void initialize(std::uint64_t seed);

 private:
  Hyperparams hp_;
  int max_label_;
  int k_;
  std::vector<Block> blocks_;
  Vector params_;
};

/// Network input: feature matrix and local adjacency of one subgraph.
struct GraphInput {
  Matrix x;
  std::vector<std::vector<std::uint32_t>> adj;
};

GraphInput make_input(const EnclosingSubgraph& sub, int max_label);

/// tanh(D^-1 (A + I) H B), D the degree matrix of A + I.
Matrix conv_layer(const Matrix& h, const std::vector<std::vector<std::uint32_t>>& adj,
                  const Matrix& b);

/// Sorts rows by the last column (descending, ties by row index), keeps the top
/// k, zero-pads to k rows. `order` receives the source row of each kept row.
Matrix sortpool(const Matrix& h, int k, std::vector<Eigen::Index>* order = nullptr);

/// Smallest size s such that at least `fraction` of the sizes are <= s, floored at 10.
int compute_sortpool_k(std::span<const std::size_t> sizes, double fraction = 0.60);
int compute_sortpool_k(const SubgraphDataset& ds, double fraction = 0.60);

/// Softmax outputs [negative, positive] with dropout off.
std::array<double, 2> predict_proba(const Model& model, const GraphInput& in);
/// Positive-class probability with dropout off.
double predict(const Model& model, const GraphInput& in);

/// Cross-entropy loss of one sample; adds its gradient into `grad` (same layout
/// as model.params()). Dropout is applied when `dropout_rng` is non-null.
double loss_and_gradient(const Model& model, const GraphInput& in, int label, Vector& grad,
                         std::mt19937_64* dropout_rng = nullptr);

struct GradCheck {
  double max_relative_error = 0.0;  // |a - n| / max(|a|, |n|, 1e-6)
  std::size_t checked = 0;
  std::size_t at_kinks = 0;  // probe moved a ReLU, max-pool or sort decision; not compared
};

/// Analytic gradient against central differences, one coordinate at a time.
GradCheck grad_check(const Model& model, const GraphInput& in, int label, double epsilon);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Adam on mini-batches; returns the checkpoint with the best validation
/// accuracy (earliest on ties). Fills ds.k when it is zero.
TrainResult train(SubgraphDataset& ds, const Hyperparams& hp, std::ostream* log = nullptr);

double accuracy(const Model& model, std::span<const GraphInput> inputs, std::span<const int> labels,
                unsigned threads = 1);

void save_model(const Model& model, std::ostream& out);
void save_model_file(const Model& model, const std::string& path);
Model load_model(std::istream& in);
Model load_model_file(const std::string& path);

}  // namespace muxlink
