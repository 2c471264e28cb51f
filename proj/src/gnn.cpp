#include <algorithm>
#include <cmath>
#include <numeric>

#include "muxlink/gnn.hpp"

namespace muxlink {

int Hyperparams::embedding_width() const {
  return std::accumulate(conv_channels.begin(), conv_channels.end(), 0);
}

void Hyperparams::validate() const {
  if (conv_channels.empty()) throw Error("hyperparams: need at least one graph convolution");
  for (int c : conv_channels)
    if (c <= 0) throw Error("hyperparams: channel counts must be positive");
  if (conv1d_channels[0] <= 0 || conv1d_channels[1] <= 0 || conv1d_kernel2 <= 0 || dense_units <= 0)
    throw Error("hyperparams: channel counts must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw Error("hyperparams: dropout must be in [0, 1)");
  if (batch_size <= 0 || epochs < 0) throw Error("hyperparams: bad batch size or epoch count");
  if (learning_rate <= 0.0) throw Error("hyperparams: learning rate must be positive");
}

Model::Model(Hyperparams hp, int max_label, int k) : hp_(std::move(hp)), max_label_(max_label), k_(k) {
  hp_.validate();
  if (max_label_ < 1) throw Error("model: max_label must be >= 1");
  if (conv2_length() < 1)
    throw Error("model: sort-pooling k=" + std::to_string(k_) + " too small for the 1-D head");

  Eigen::Index offset = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back(Block{std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  int in = feature_width();
  for (std::size_t l = 0; l < hp_.conv_channels.size(); ++l) {
    add("gconv" + std::to_string(l), in, hp_.conv_channels[l]);
    in = hp_.conv_channels[l];
  }
  const int c1 = hp_.conv1d_channels[0], c2 = hp_.conv1d_channels[1];
  add("conv1_w", c1, hp_.embedding_width());
  add("conv1_b", 1, c1);
  add("conv2_w", c2, hp_.conv1d_kernel2 * c1);
  add("conv2_b", 1, c2);
  add("dense1_w", hp_.dense_units, c2 * conv2_length());
  add("dense1_b", 1, hp_.dense_units);
  add("dense2_w", 2, hp_.dense_units);
  add("dense2_b", 1, 2);
  params_ = Vector::Zero(offset);
}

int Model::feature_width() const { return static_cast<int>(kNumFeatureGateTypes) + max_label_ + 1; }

int Model::conv2_length() const { return k_ / 2 - hp_.conv1d_kernel2 + 1; }

Eigen::Map<Matrix> Model::block(std::size_t i) {
  const auto& b = blocks_[i];
  return Eigen::Map<Matrix>(params_.data() + b.offset, b.rows, b.cols);
}

Eigen::Map<const Matrix> Model::block(std::size_t i) const {
  const auto& b = blocks_[i];
  return Eigen::Map<const Matrix>(params_.data() + b.offset, b.rows, b.cols);
}

Eigen::Map<Matrix> Model::block_in(Vector& v, std::size_t i) const {
  const auto& b = blocks_[i];
  return Eigen::Map<Matrix>(v.data() + b.offset, b.rows, b.cols);
}

void Model::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t layers = hp_.conv_channels.size();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    // Graph-conv weights are (fan_in x out); every other weight is (out x fan_in)
    // and a bias shares the fan-in of the weight before it.
    Eigen::Index fan_in = i < layers ? blocks_[i].rows
                          : (i - layers) % 2 == 0 ? blocks_[i].cols
                                                  : blocks_[i - 1].cols;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto m = block(i);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  }
}

GraphInput make_input(const EnclosingSubgraph& sub, int max_label) {
  return GraphInput{build_features(sub, max_label), sub.adj};
}

namespace {

using Adjacency = std::vector<std::vector<std::uint32_t>>;

std::vector<double> inverse_degree(const Adjacency& adj) {
  std::vector<double> inv(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v) inv[v] = 1.0 / static_cast<double>(adj[v].size() + 1);
  return inv;
}

// D^-1 (A + I) M
Matrix aggregate(const Matrix& m, const Adjacency& adj, const std::vector<double>& inv) {
  Matrix out = m;
  for (std::size_t v = 0; v < adj.size(); ++v) {
    auto row = out.row(static_cast<Eigen::Index>(v));
    for (auto u : adj[v]) row += m.row(u);
    row *= inv[v];
  }
  return out;
}

// (D^-1 (A + I))^T G
Matrix aggregate_transposed(const Matrix& g, const Adjacency& adj, const std::vector<double>& inv) {
  Matrix scaled = g;
  for (std::size_t v = 0; v < adj.size(); ++v) scaled.row(static_cast<Eigen::Index>(v)) *= inv[v];
  Matrix out = scaled;
  for (std::size_t v = 0; v < adj.size(); ++v)
    for (auto u : adj[v]) out.row(u) += scaled.row(static_cast<Eigen::Index>(v));
  return out;
}

struct Cache {
  std::vector<Matrix> h;  // h[0] = features, h[l + 1] = output of layer l
  std::vector<double> inv_deg;
  std::vector<Eigen::Index> order;
  Matrix pooled;  // k x E
  Matrix y1_pre;  // k x c1
  Matrix p1;      // (k/2) x c1, after ReLU and max-pool
  std::vector<Eigen::Index> argmax;
  Matrix windows;  // T x (kernel2 * c1)
  Matrix y2_pre;   // T x c2
  Vector flat;     // ReLU(y2_pre), row-major
  Vector z1, a1, mask, a1_drop, z2;
  std::array<double, 2> prob{};
};

Vector relu(const Vector& v) { return v.cwiseMax(0.0); }

void forward(const Model& model, const GraphInput& in, Cache& c, std::mt19937_64* dropout_rng) {
  const auto& hp = model.hyperparams();
  const std::size_t layers = hp.conv_channels.size();
  if (in.x.cols() != model.feature_width())
    throw Error("feature width " + std::to_string(in.x.cols()) + " does not match model (" +
                std::to_string(model.feature_width()) + ", max_label " +
                std::to_string(model.max_label()) + ")");
  if (static_cast<std::size_t>(in.x.rows()) != in.adj.size())
    throw Error("feature rows do not match adjacency size");

  c.inv_deg = inverse_degree(in.adj);
  c.h.resize(layers + 1);
  c.h[0] = in.x;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix m = c.h[l] * model.block(l);
    c.h[l + 1] = aggregate(m, in.adj, c.inv_deg).array().tanh().matrix();
  }

  const Eigen::Index n = in.x.rows();
  const Eigen::Index width = hp.embedding_width();
  Matrix emb(n, width);
  Eigen::Index col = 0;
  for (std::size_t l = 1; l <= layers; ++l) {
    emb.middleCols(col, c.h[l].cols()) = c.h[l];
    col += c.h[l].cols();
  }
  c.pooled = sortpool(emb, model.k(), &c.order);

  const std::size_t L = layers;
  const auto w1 = model.block(L);
  const auto b1 = model.block(L + 1);
  c.y1_pre = c.pooled * w1.transpose();
  c.y1_pre.rowwise() += b1.row(0);

  const int c1 = hp.conv1d_channels[0];
  const Eigen::Index kp = model.k() / 2;
  c.p1.resize(kp, c1);
  c.argmax.resize(static_cast<std::size_t>(kp * c1));
  for (Eigen::Index p = 0; p < kp; ++p) {
    for (Eigen::Index ch = 0; ch < c1; ++ch) {
      double a = std::max(c.y1_pre(2 * p, ch), 0.0);
      double b = std::max(c.y1_pre(2 * p + 1, ch), 0.0);
      bool second = b > a;
      c.p1(p, ch) = second ? b : a;
      c.argmax[static_cast<std::size_t>(p * c1 + ch)] = second ? 2 * p + 1 : 2 * p;
    }
  }

  const int k2 = hp.conv1d_kernel2;
  const Eigen::Index t_len = model.conv2_length();
  c.windows.resize(t_len, k2 * c1);
  for (Eigen::Index t = 0; t < t_len; ++t)
    c.windows.row(t) = Eigen::Map<const Eigen::RowVectorXd>(c.p1.data() + t * c1, k2 * c1);
  const auto w2 = model.block(L + 2);
  const auto b2 = model.block(L + 3);
  c.y2_pre = c.windows * w2.transpose();
  c.y2_pre.rowwise() += b2.row(0);
  c.flat = Eigen::Map<const Vector>(c.y2_pre.data(), c.y2_pre.size()).cwiseMax(0.0);

  const auto w3 = model.block(L + 4);
  const auto b3 = model.block(L + 5);
  c.z1 = w3 * c.flat + b3.row(0).transpose();
  c.a1 = relu(c.z1);
  if (dropout_rng && hp.dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - hp.dropout);
    c.mask.resize(c.a1.size());
    for (Eigen::Index i = 0; i < c.mask.size(); ++i)
      c.mask[i] = keep(*dropout_rng) ? 1.0 / (1.0 - hp.dropout) : 0.0;
    c.a1_drop = c.a1.cwiseProduct(c.mask);
  } else {
    c.mask = Vector::Ones(c.a1.size());
    c.a1_drop = c.a1;
  }

  const auto w4 = model.block(L + 6);
  const auto b4 = model.block(L + 7);
  c.z2 = w4 * c.a1_drop + b4.row(0).transpose();
  const double zmax = c.z2.maxCoeff();
  const double e0 = std::exp(c.z2[0] - zmax), e1 = std::exp(c.z2[1] - zmax);
  c.prob = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double cross_entropy(const Cache& c, int label) {
  const double zmax = c.z2.maxCoeff();
  const double lse = zmax + std::log(std::exp(c.z2[0] - zmax) + std::exp(c.z2[1] - zmax));
  return lse - c.z2[label];
}

// Adds each block's contribution to `grad` exactly once, fully evaluated first, so
// accumulating into a running sum gives the same bits as into a zeroed buffer.
void backward(const Model& model, const GraphInput& in, const Cache& c, int label, Vector& grad) {
  const auto& hp = model.hyperparams();
  const std::size_t L = hp.conv_channels.size();

  // Softmax + cross-entropy.
  Vector dz2(2);
  dz2 << c.prob[0] - (label == 0 ? 1.0 : 0.0), c.prob[1] - (label == 1 ? 1.0 : 0.0);
  model.block_in(grad, L + 6) += dz2 * c.a1_drop.transpose();
  model.block_in(grad, L + 7).row(0) += dz2.transpose();

  Vector da1 = model.block(L + 6).transpose() * dz2;
  Vector dz1 = da1.cwiseProduct(c.mask);
  for (Eigen::Index i = 0; i < dz1.size(); ++i)
    if (c.z1[i] <= 0.0) dz1[i] = 0.0;
  model.block_in(grad, L + 4) += dz1 * c.flat.transpose();
  model.block_in(grad, L + 5).row(0) += dz1.transpose();

  Vector dflat = model.block(L + 4).transpose() * dz1;
  Matrix dy2 = Eigen::Map<const Matrix>(dflat.data(), c.y2_pre.rows(), c.y2_pre.cols());
  dy2 = (c.y2_pre.array() > 0.0).select(dy2, 0.0);
  model.block_in(grad, L + 2) += (dy2.transpose() * c.windows).eval();
  model.block_in(grad, L + 3).row(0) += dy2.colwise().sum().eval();

  const int c1 = hp.conv1d_channels[0];
  const int k2 = hp.conv1d_kernel2;
  Matrix dwindows = dy2 * model.block(L + 2);
  Matrix dp1 = Matrix::Zero(c.p1.rows(), c.p1.cols());
  for (Eigen::Index t = 0; t < dwindows.rows(); ++t)
    Eigen::Map<Eigen::RowVectorXd>(dp1.data() + t * c1, k2 * c1) += dwindows.row(t);

  Matrix dy1 = Matrix::Zero(c.y1_pre.rows(), c.y1_pre.cols());
  for (Eigen::Index p = 0; p < dp1.rows(); ++p)
    for (Eigen::Index ch = 0; ch < c1; ++ch) {
      auto src = c.argmax[static_cast<std::size_t>(p * c1 + ch)];
      if (c.y1_pre(src, ch) > 0.0) dy1(src, ch) += dp1(p, ch);
    }
  model.block_in(grad, L) += (dy1.transpose() * c.pooled).eval();
  model.block_in(grad, L + 1).row(0) += dy1.colwise().sum().eval();

  Matrix dpooled = dy1 * model.block(L);
  const Eigen::Index n = in.x.rows();
  Matrix demb = Matrix::Zero(n, dpooled.cols());
  for (std::size_t i = 0; i < c.order.size(); ++i)
    demb.row(c.order[i]) += dpooled.row(static_cast<Eigen::Index>(i));

  // Graph convolutions, last layer first. Each layer's output gradient is its
  // slice of the concatenation plus what flows back from the next layer.
  std::vector<Eigen::Index> offsets(L + 1, 0);
  for (std::size_t l = 0; l < L; ++l) offsets[l + 1] = offsets[l] + hp.conv_channels[l];
  Matrix dh_next;
  for (std::size_t l = L; l-- > 0;) {
    Matrix dh = demb.middleCols(offsets[l], hp.conv_channels[l]);
    if (l + 1 < L) dh += dh_next;
    Matrix dz = dh.array() * (1.0 - c.h[l + 1].array().square());
    Matrix dm = aggregate_transposed(dz, in.adj, c.inv_deg);
    model.block_in(grad, l) += (c.h[l].transpose() * dm).eval();
    if (l > 0) dh_next = dm * model.block(l).transpose();
  }
}

}  // namespace

Matrix conv_layer(const Matrix& h, const std::vector<std::vector<std::uint32_t>>& adj,
                  const Matrix& b) {
  if (static_cast<std::size_t>(h.rows()) != adj.size() || h.cols() != b.rows())
    throw Error("conv_layer: shape mismatch");
  Matrix m = h * b;
  return aggregate(m, adj, inverse_degree(adj)).array().tanh().matrix();
}

Matrix sortpool(const Matrix& h, int k, std::vector<Eigen::Index>* order) {
  if (k < 1) throw Error("sortpool: k must be >= 1");
  const Eigen::Index n = h.rows(), last = h.cols() - 1;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return h(a, last) > h(b, last); });
  const Eigen::Index keep = std::min<Eigen::Index>(n, k);
  idx.resize(static_cast<std::size_t>(keep));
  Matrix out = Matrix::Zero(k, h.cols());
  for (Eigen::Index i = 0; i < keep; ++i) out.row(i) = h.row(idx[static_cast<std::size_t>(i)]);
  if (order) *order = std::move(idx);
  return out;
}

int compute_sortpool_k(std::span<const std::size_t> sizes, double fraction) {
  if (sizes.empty()) throw Error("sort-pooling k: empty dataset");
  std::vector<std::size_t> sorted(sizes.begin(), sizes.end());
  std::sort(sorted.begin(), sorted.end());
  auto need = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size()) - 1e-9));
  need = std::clamp<std::size_t>(need, 1, sorted.size());
  return std::max(10, static_cast<int>(sorted[need - 1]));
}

int compute_sortpool_k(const SubgraphDataset& ds, double fraction) {
  std::vector<std::size_t> sizes;
  sizes.reserve(ds.train.size());
  for (const auto& s : ds.train) sizes.push_back(s.graph.size());
  return compute_sortpool_k(sizes, fraction);
}

std::array<double, 2> predict_proba(const Model& model, const GraphInput& in) {
  Cache c;
  forward(model, in, c, nullptr);
  return c.prob;
}

double predict(const Model& model, const GraphInput& in) { return predict_proba(model, in)[1]; }

double loss_and_gradient(const Model& model, const GraphInput& in, int label, Vector& grad,
                         std::mt19937_64* dropout_rng) {
  if (grad.size() != model.params().size()) throw Error("gradient buffer has the wrong size");
  Cache c;
  forward(model, in, c, dropout_rng);
  backward(model, in, c, label, grad);
  return cross_entropy(c, label);
}

namespace {

// Every piecewise decision the forward pass made.
std::vector<std::int64_t> decisions(const Cache& c) {
  std::vector<std::int64_t> d(c.order.begin(), c.order.end());
  d.insert(d.end(), c.argmax.begin(), c.argmax.end());
  for (Eigen::Index i = 0; i < c.y1_pre.size(); ++i) d.push_back(c.y1_pre.data()[i] > 0.0);
  for (Eigen::Index i = 0; i < c.y2_pre.size(); ++i) d.push_back(c.y2_pre.data()[i] > 0.0);
  for (Eigen::Index i = 0; i < c.z1.size(); ++i) d.push_back(c.z1[i] > 0.0);
  return d;
}

}  // namespace

GradCheck grad_check(const Model& model, const GraphInput& in, int label, double epsilon) {
  Vector analytic = Vector::Zero(model.params().size());
  loss_and_gradient(model, in, label, analytic, nullptr);

  Model probe = model;
  Cache base;
  forward(probe, in, base, nullptr);
  const auto base_decisions = decisions(base);
  bool same = true;
  auto loss_at = [&] {
    Cache c;
    forward(probe, in, c, nullptr);
    same = same && decisions(c) == base_decisions;
    return cross_entropy(c, label);
  };
  GradCheck r;
  for (Eigen::Index i = 0; i < probe.params().size(); ++i) {
    const double saved = probe.params()[i];
    same = true;
    probe.params()[i] = saved + epsilon;
    const double up = loss_at();
    probe.params()[i] = saved - epsilon;
    const double down = loss_at();
    probe.params()[i] = saved;
    if (!same) {
      ++r.at_kinks;
      continue;
    }
    ++r.checked;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    r.max_relative_error = std::max(r.max_relative_error, std::abs(a - numeric) / denom);
  }
  return r;
}

}  // namespace muxlink
