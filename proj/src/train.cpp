#include <cmath>
#include <numeric>
#include <ostream>

#include "muxlink/gnn.hpp"
#include "muxlink/parallel.hpp"

namespace muxlink {

namespace {

// splitmix64 finalizer; derives independent stream seeds from (seed, a, b).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xbf58476d1ce4e5b9ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Vector m, v;
  long step = 0;

  Adam(double learning_rate, Eigen::Index n) : lr(learning_rate), m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  void update(Vector& params, const Vector& grad) {
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

double accuracy(const Model& model, std::span<const GraphInput> inputs, std::span<const int> labels,
                unsigned threads) {
  if (inputs.empty()) return 0.0;
  std::vector<char> hit(inputs.size(), 0);
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    const int predicted = predict(model, inputs[i]) > 0.5 ? 1 : 0;
    hit[i] = predicted == labels[i];
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) /
         static_cast<double>(inputs.size());
}

TrainResult train(SubgraphDataset& ds, const Hyperparams& hp, std::ostream* log) {
  hp.validate();
  if (ds.train.empty()) throw Error("training set is empty");
  if (ds.k == 0) ds.k = compute_sortpool_k(ds, hp.sortpool_fraction);

  Model model(hp, ds.max_label, ds.k);
  model.initialize(mix_seed(hp.seed, 0x1417, 0));

  std::vector<GraphInput> train_in, val_in;
  std::vector<int> train_y, val_y;
  for (const auto& s : ds.train) {
    train_in.push_back(make_input(s.graph, ds.max_label));
    train_y.push_back(s.label);
  }
  for (const auto& s : ds.validation) {
    val_in.push_back(make_input(s.graph, ds.max_label));
    val_y.push_back(s.label);
  }
  // Without a validation split, select on training accuracy.
  const bool use_train_for_selection = val_in.empty();

  const Eigen::Index np = model.params().size();
  Adam adam(hp.learning_rate, np);
  std::vector<std::size_t> perm(train_in.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 shuffle_rng(mix_seed(hp.seed, 0x5eed, 1));

  const auto batch = static_cast<std::size_t>(hp.batch_size);
  std::vector<Vector> sample_grads;
  std::vector<double> sample_loss(batch);
  if (hp.threads > 1) sample_grads.assign(batch, Vector::Zero(np));

  TrainResult result{model, {}, 0, -1.0};
  Vector grad(np);
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += batch) {
      const std::size_t count = std::min(batch, perm.size() - start);
      grad.setZero();
      auto run_sample = [&](std::size_t j, Vector& into) {
        const std::size_t idx = perm[start + j];
        std::mt19937_64 drop(mix_seed(hp.seed, static_cast<std::uint64_t>(epoch), start + j));
        sample_loss[j] = loss_and_gradient(model, train_in[idx], train_y[idx], into, &drop);
      };
      if (hp.threads > 1) {
        parallel_for(count, hp.threads, [&](std::size_t j) {
          sample_grads[j].setZero();
          run_sample(j, sample_grads[j]);
        });
        for (std::size_t j = 0; j < count; ++j) grad += sample_grads[j];
      } else {
        // Adds in batch order like the threaded path; backward() keeps this bit-identical.
        for (std::size_t j = 0; j < count; ++j) run_sample(j, grad);
      }
      for (std::size_t j = 0; j < count; ++j) epoch_loss += sample_loss[j];
      grad /= static_cast<double>(count);
      if (!grad.allFinite()) throw TrainingDiverged("non-finite gradient in epoch " + std::to_string(epoch));
      adam.update(model.params(), grad);
    }
    epoch_loss /= static_cast<double>(perm.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingDiverged("non-finite training loss in epoch " + std::to_string(epoch));

    const double acc = use_train_for_selection ? accuracy(model, train_in, train_y, hp.threads)
                                               : accuracy(model, val_in, val_y, hp.threads);
    result.history.push_back(EpochStats{epoch, epoch_loss, acc});
    if (acc > result.best_validation_accuracy) {
      result.best_validation_accuracy = acc;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (log)
      *log << "epoch " << epoch << " loss " << epoch_loss << " val_acc " << acc
           << (result.best_epoch == epoch ? " *" : "") << "\n";
  }
  if (hp.epochs == 0) result.best_validation_accuracy = 0.0;
  return result;
}

}  // namespace muxlink
