// Copyright 2026 The privgnn Authors
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
//
// Minimal trainable node classifiers: a GraphSAGE-style GNN with mean
// aggregation and a plain MLP, with full-batch negative-log-likelihood
// training under Adam, dropout, and batch normalization after the first
// layer. Deliberately small: dense Eigen tensors, desk-scale graphs, no GPU.

#ifndef PRIVGNN_NN_HPP_
#define PRIVGNN_NN_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "privgnn/graph.hpp"
#include "privgnn/rng.hpp"

namespace privgnn {

struct ModelConfig {
  enum class Kind { kGnn, kMlp };

  Kind kind = Kind::kGnn;
  int hidden_dim = 64;
  int num_layers = 2;  // kGnn: 2, kMlp: 3
  double dropout = 0.5;
  double learning_rate = 0.01;
  int epochs = 500;
  bool batch_norm_after_first = true;
  int num_classes = 0;

  static ModelConfig gnn(int num_classes) {
    ModelConfig c;
    c.kind = Kind::kGnn;
    c.num_layers = 2;
    c.num_classes = num_classes;
    return c;
  }

  static ModelConfig mlp(int num_classes) {
    ModelConfig c;
    c.kind = Kind::kMlp;
    c.num_layers = 3;
    c.num_classes = num_classes;
    return c;
  }

  // Hops of graph context a prediction depends on.
  int receptive_depth() const { return kind == Kind::kGnn ? num_layers : 0; }

  void validate() const {
    if (hidden_dim < 1) throw std::invalid_argument("ModelConfig: hidden_dim must be positive");
    if (num_layers < 1) throw std::invalid_argument("ModelConfig: num_layers must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw std::invalid_argument("ModelConfig: dropout must lie in [0,1)");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("ModelConfig: learning_rate must be positive");
    if (epochs < 1) throw std::invalid_argument("ModelConfig: epochs must be positive");
    if (num_classes < 1) throw std::invalid_argument("ModelConfig: num_classes must be positive");
  }
};

struct TrainingLog {
  std::vector<double> losses;  // one NLL value per epoch
};

namespace detail {

// Mean over neighbor rows; rows with no neighbors stay zero.
inline Eigen::MatrixXd neighbor_mean(const Graph& graph, const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    const auto& nbrs = graph.neighbors(v);
    if (nbrs.empty()) continue;
    for (const NodeId u : nbrs) out.row(v) += h.row(u);
    out.row(v) /= static_cast<double>(nbrs.size());
  }
  return out;
}

// Adjoint of neighbor_mean: out_v = sum_{u in adj(v)} g_u / deg(u).
inline Eigen::MatrixXd neighbor_mean_adjoint(const Graph& graph, const Eigen::MatrixXd& g) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  for (NodeId u = 0; u < graph.num_nodes(); ++u) {
    const auto& nbrs = graph.neighbors(u);
    if (nbrs.empty()) continue;
    const double inv_deg = 1.0 / static_cast<double>(nbrs.size());
    for (const NodeId v : nbrs) out.row(v) += g.row(u) * inv_deg;
  }
  return out;
}

inline Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double hi = z.row(i).maxCoeff();
    const double lse = std::log((z.row(i).array() - hi).exp().sum());
    out.row(i) = (z.row(i).array() - hi - lse).matrix();
  }
  return out;
}

}  // namespace detail

// Layered classifier with dense weights, optimizer state, and a
// training/inference mode switch. Weight convention: activations are row
// vectors, z = h * w_self + mean_nbr(h) * w_neigh + bias.
class Model {
 public:
  struct Layer {
    Eigen::MatrixXd w_self;   // d_in x d_out
    Eigen::MatrixXd w_neigh;  // d_in x d_out; empty for MLP layers
    Eigen::VectorXd bias;     // d_out
  };

  struct BatchNorm {
    Eigen::VectorXd scale, shift, running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;
  };

  Model() = default;

  static Model init(const ModelConfig& config, int input_dim, RngStream& rng) {
    config.validate();
    if (input_dim < 1) throw std::invalid_argument("Model::init: input_dim must be positive");
    Model m;
    m.config_ = config;
    m.input_dim_ = input_dim;
    const bool gnn = config.kind == ModelConfig::Kind::kGnn;
    for (int l = 0; l < config.num_layers; ++l) {
      const int d_in = l == 0 ? input_dim : config.hidden_dim;
      const int d_out = l == config.num_layers - 1 ? config.num_classes : config.hidden_dim;
      Layer layer;
      const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
      layer.w_self = draw_matrix(d_in, d_out, bound, rng);
      if (gnn) layer.w_neigh = draw_matrix(d_in, d_out, bound, rng);
      layer.bias = draw_matrix(1, d_out, bound, rng).row(0).transpose();
      m.layers_.push_back(std::move(layer));
    }
    if (config.batch_norm_after_first) {
      const int d = config.num_layers == 1 ? config.num_classes : config.hidden_dim;
      BatchNorm bn;
      bn.scale = Eigen::VectorXd::Ones(d);
      bn.shift = Eigen::VectorXd::Zero(d);
      bn.running_mean = Eigen::VectorXd::Zero(d);
      bn.running_var = Eigen::VectorXd::Ones(d);
      m.bn_ = std::move(bn);
    }
    return m;
  }

  const ModelConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  bool training_mode() const { return training_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::optional<BatchNorm>& batch_norm() { return bn_; }
  const std::optional<BatchNorm>& batch_norm() const { return bn_; }

  // Posterior rows for `nodes` from a full-graph inference pass. Each row is
  // non-negative and sums to 1 (within roundoff of the softmax).
  Eigen::MatrixXd forward(const Graph& graph, const NodeSet& nodes) const {
    const Eigen::MatrixXd logp = forward_logp(graph);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(nodes.size()), config_.num_classes);
    Eigen::Index r = 0;
    for (const NodeId v : nodes.ids()) {
      if (v < 0 || v >= graph.num_nodes()) throw std::out_of_range("forward: node out of range");
      out.row(r++) = logp.row(v).array().exp().matrix();
    }
    return out;
  }

  // Inductive single-node inference from the l-hop neighborhood of v only;
  // values outside that neighborhood cannot influence the result.
  Eigen::VectorXd predict_posterior(const Graph& graph, NodeId v, int l) const {
    const NodeSet hood = l_hop_neighborhood(graph, v, l);
    const InducedSubgraph sub = induced_subgraph(graph, hood);
    const auto it = std::lower_bound(sub.to_parent.begin(), sub.to_parent.end(), v);
    const auto local = static_cast<NodeId>(it - sub.to_parent.begin());
    return forward(sub.graph, NodeSet::of({local})).row(0);
  }

  // Full-batch gradient training with NLL loss and Adam. `labels` aligns
  // with train_nodes.ids(). Deterministic for a fixed rng stream.
  TrainingLog train(const Graph& graph, const NodeSet& train_nodes,
                    std::span<const NodeId> labels, RngStream& rng) {
    check_graph(graph);
    if (train_nodes.empty()) throw std::invalid_argument("train: empty training set");
    if (labels.size() != train_nodes.size())
      throw std::invalid_argument("train: labels must align with train_nodes");
    for (const NodeId y : labels) {
      if (y < 0 || y >= config_.num_classes) throw std::invalid_argument("train: label out of range");
    }
    if (train_nodes.ids().back() >= graph.num_nodes())
      throw std::out_of_range("train: node id out of range");

    AdamState adam = make_adam_state();
    TrainingLog log;
    log.losses.reserve(static_cast<std::size_t>(config_.epochs));
    training_ = true;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      Cache cache;
      const Eigen::MatrixXd logp = forward_internal(graph, /*training=*/true, &rng, &cache);
      const auto [loss, dlogits] = nll_and_grad(logp, train_nodes, labels);
      if (!std::isfinite(loss)) {
        training_ = false;
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      log.losses.push_back(loss);
      const Gradients grads = backward(graph, cache, dlogits);
      adam_step(adam, grads);
    }
    training_ = false;
    for (const Layer& layer : layers_) {
      if (!layer.w_self.allFinite() || !layer.bias.allFinite() ||
          (layer.w_neigh.size() > 0 && !layer.w_neigh.allFinite()))
        throw std::runtime_error("training produced non-finite parameters");
    }
    return log;
  }

  // Loss and analytic parameter gradients at the current parameters, with
  // dropout inactive; used by training internals and gradient checks.
  struct Gradients {
    std::vector<Layer> layers;  // same shapes as the model's layers
    Eigen::VectorXd bn_scale, bn_shift;
  };

  std::pair<double, Gradients> loss_and_gradients(const Graph& graph, const NodeSet& train_nodes,
                                                  std::span<const NodeId> labels,
                                                  bool training_batch_norm = true) {
    check_graph(graph);
    Cache cache;
    const bool saved = training_;
    training_ = training_batch_norm;
    const Eigen::MatrixXd logp = forward_internal(graph, training_batch_norm, nullptr, &cache);
    const auto [loss, dlogits] = nll_and_grad(logp, train_nodes, labels);
    const Gradients grads = backward(graph, cache, dlogits);
    training_ = saved;
    return {loss, grads};
  }

  // Forward pass in the current mode without selecting rows; exposed for
  // evaluation helpers.
  Eigen::MatrixXd forward_logp(const Graph& graph) const {
    check_graph(graph);
    return forward_internal(graph, /*training=*/false, nullptr, nullptr);
  }

 private:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;      // per layer: H_in
    std::vector<Eigen::MatrixXd> agg_inputs;  // per layer: mean_nbr(H_in) (empty for MLP)
    std::vector<Eigen::MatrixXd> post_relu;   // hidden layers only
    std::vector<Eigen::MatrixXd> drop_mask;   // scaled masks; empty when inactive
    Eigen::MatrixXd bn_xhat;
    Eigen::ArrayXd bn_inv_std;
  };

  struct AdamState {
    std::vector<Layer> slots_m, slots_v;
    Eigen::VectorXd bn_scale_m, bn_scale_v, bn_shift_m, bn_shift_v;
    std::int64_t step = 0;
  };

  static Eigen::MatrixXd draw_matrix(int rows, int cols, double bound, RngStream& rng) {
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform_real(-bound, bound);
    return w;
  }

  void check_graph(const Graph& graph) const {
    if (graph.feature_dim() != input_dim_)
      throw std::invalid_argument("model expects feature dim " + std::to_string(input_dim_) +
                                  ", graph has " + std::to_string(graph.feature_dim()));
  }

  Eigen::MatrixXd forward_internal(const Graph& graph, bool training, RngStream* rng,
                                   Cache* cache) const {
    const bool gnn = config_.kind == ModelConfig::Kind::kGnn;
    Eigen::MatrixXd h = graph.feature_matrix();
    const auto num_layers = static_cast<int>(layers_.size());
    for (int l = 0; l < num_layers; ++l) {
      const Layer& layer = layers_[static_cast<std::size_t>(l)];
      Eigen::MatrixXd agg;
      if (gnn) agg = detail::neighbor_mean(graph, h);
      if (cache != nullptr) {
        cache->inputs.push_back(h);
        cache->agg_inputs.push_back(agg);
      }
      Eigen::MatrixXd z = h * layer.w_self;
      if (gnn) z += agg * layer.w_neigh;
      z.rowwise() += layer.bias.transpose();

      if (l == 0 && bn_.has_value()) z = batch_norm_forward(z, training, cache);

      if (l < num_layers - 1) {
        z = z.cwiseMax(0.0);
        if (cache != nullptr) cache->post_relu.push_back(z);
        if (training && config_.dropout > 0.0 && rng != nullptr) {
          Eigen::MatrixXd mask(z.rows(), z.cols());
          const double keep = 1.0 - config_.dropout;
          for (Eigen::Index i = 0; i < z.rows(); ++i)
            for (Eigen::Index j = 0; j < z.cols(); ++j)
              mask(i, j) = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
          z = z.cwiseProduct(mask);
          if (cache != nullptr) cache->drop_mask.push_back(std::move(mask));
        } else if (cache != nullptr) {
          cache->drop_mask.emplace_back();
        }
      }
      h = std::move(z);
    }
    return detail::log_softmax_rows(h);
  }

  Eigen::MatrixXd batch_norm_forward(const Eigen::MatrixXd& z, bool training,
                                     Cache* cache) const {
    const BatchNorm& bn = *bn_;
    const auto m = static_cast<double>(z.rows());
    Eigen::MatrixXd out(z.rows(), z.cols());
    if (training) {
      const Eigen::RowVectorXd mu = z.colwise().mean();
      const Eigen::MatrixXd centered = z.rowwise() - mu;
      const Eigen::ArrayXd var = (centered.array().square().colwise().sum() / m).transpose();
      const Eigen::ArrayXd inv_std = (var + bn.eps).sqrt().inverse();
      Eigen::MatrixXd xhat = centered;
      for (Eigen::Index j = 0; j < xhat.cols(); ++j) xhat.col(j) *= inv_std(j);
      out = xhat;
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        out.col(j) = out.col(j) * bn.scale(j) + Eigen::VectorXd::Constant(out.rows(), bn.shift(j));
      // running statistics track the unbiased batch variance
      auto& mut = const_cast<BatchNorm&>(bn);
      const double corr = m > 1.0 ? m / (m - 1.0) : 1.0;
      mut.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * mu.transpose();
      mut.running_var =
          ((1.0 - bn.momentum) * bn.running_var.array() + bn.momentum * (var * corr)).matrix();
      if (cache != nullptr) {
        cache->bn_xhat = std::move(xhat);
        cache->bn_inv_std = inv_std;
      }
    } else {
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double inv = 1.0 / std::sqrt(bn.running_var(j) + bn.eps);
        out.col(j) =
            ((z.col(j).array() - bn.running_mean(j)) * inv * bn.scale(j) + bn.shift(j)).matrix();
      }
    }
    return out;
  }

  std::pair<double, Eigen::MatrixXd> nll_and_grad(const Eigen::MatrixXd& logp,
                                                  const NodeSet& train_nodes,
                                                  std::span<const NodeId> labels) const {
    const auto t = static_cast<double>(train_nodes.size());
    double loss = 0.0;
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(logp.rows(), logp.cols());
    std::size_t k = 0;
    for (const NodeId v : train_nodes.ids()) {
      const NodeId y = labels[k++];
      loss -= logp(v, y);
      dlogits.row(v) += logp.row(v).array().exp().matrix() / t;
      dlogits(v, y) -= 1.0 / t;
    }
    return {loss / t, dlogits};
  }

  Gradients backward(const Graph& graph, const Cache& cache, const Eigen::MatrixXd& dlogits) const {
    const bool gnn = config_.kind == ModelConfig::Kind::kGnn;
    const auto num_layers = static_cast<int>(layers_.size());
    Gradients grads;
    grads.layers.resize(layers_.size());

    Eigen::MatrixXd delta = dlogits;  // gradient w.r.t. the layer's output
    for (int l = num_layers - 1; l >= 0; --l) {
      const Layer& layer = layers_[static_cast<std::size_t>(l)];
      if (l < num_layers - 1) {
        const auto& mask = cache.drop_mask[static_cast<std::size_t>(l)];
        if (mask.size() > 0) delta = delta.cwiseProduct(mask);
        const auto& act = cache.post_relu[static_cast<std::size_t>(l)];
        delta = delta.cwiseProduct((act.array() > 0.0).cast<double>().matrix());
      }
      if (l == 0 && bn_.has_value()) {
        delta = batch_norm_backward(delta, cache, grads);
      }
      const auto& h_in = cache.inputs[static_cast<std::size_t>(l)];
      Layer& g = grads.layers[static_cast<std::size_t>(l)];
      g.w_self = h_in.transpose() * delta;
      g.bias = delta.colwise().sum().transpose();
      if (gnn) {
        const auto& agg_in = cache.agg_inputs[static_cast<std::size_t>(l)];
        g.w_neigh = agg_in.transpose() * delta;
      }
      if (l > 0) {
        Eigen::MatrixXd dh = delta * layer.w_self.transpose();
        if (gnn) dh += detail::neighbor_mean_adjoint(graph, delta * layer.w_neigh.transpose());
        delta = std::move(dh);
      }
    }
    return grads;
  }

  Eigen::MatrixXd batch_norm_backward(const Eigen::MatrixXd& dy, const Cache& cache,
                                      Gradients& grads) const {
    const BatchNorm& bn = *bn_;
    const auto m = static_cast<double>(dy.rows());
    grads.bn_scale = (dy.cwiseProduct(cache.bn_xhat)).colwise().sum().transpose();
    grads.bn_shift = dy.colwise().sum().transpose();
    Eigen::MatrixXd dxhat = dy;
    for (Eigen::Index j = 0; j < dxhat.cols(); ++j) dxhat.col(j) *= bn.scale(j);
    const Eigen::RowVectorXd sum1 = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum2 = (dxhat.cwiseProduct(cache.bn_xhat)).colwise().sum();
    Eigen::MatrixXd dx(dy.rows(), dy.cols());
    for (Eigen::Index j = 0; j < dx.cols(); ++j) {
      dx.col(j) = ((cache.bn_inv_std(j) / m) *
                   (m * dxhat.col(j).array() - sum1(j) - cache.bn_xhat.col(j).array() * sum2(j)))
                      .matrix();
    }
    return dx;
  }

  AdamState make_adam_state() const {
    AdamState s;
    for (const Layer& layer : layers_) {
      Layer zero;
      zero.w_self = Eigen::MatrixXd::Zero(layer.w_self.rows(), layer.w_self.cols());
      if (layer.w_neigh.size() > 0)
        zero.w_neigh = Eigen::MatrixXd::Zero(layer.w_neigh.rows(), layer.w_neigh.cols());
      zero.bias = Eigen::VectorXd::Zero(layer.bias.size());
      s.slots_m.push_back(zero);
      s.slots_v.push_back(std::move(zero));
    }
    if (bn_.has_value()) {
      s.bn_scale_m = Eigen::VectorXd::Zero(bn_->scale.size());
      s.bn_scale_v = s.bn_scale_m;
      s.bn_shift_m = s.bn_scale_m;
      s.bn_shift_v = s.bn_scale_m;
    }
    return s;
  }

  template <typename T>
  static void adam_update(T& param, const T& grad, T& m, T& v, double lr, std::int64_t t) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v.array().matrix() + (1.0 - kBeta2) * grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  void adam_step(AdamState& s, const Gradients& grads) {
    ++s.step;
    const double lr = config_.learning_rate;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      adam_update(layers_[l].w_self, grads.layers[l].w_self, s.slots_m[l].w_self,
                  s.slots_v[l].w_self, lr, s.step);
      if (layers_[l].w_neigh.size() > 0)
        adam_update(layers_[l].w_neigh, grads.layers[l].w_neigh, s.slots_m[l].w_neigh,
                    s.slots_v[l].w_neigh, lr, s.step);
      adam_update(layers_[l].bias, grads.layers[l].bias, s.slots_m[l].bias, s.slots_v[l].bias, lr,
                  s.step);
    }
    if (bn_.has_value() && grads.bn_scale.size() > 0) {
      adam_update(bn_->scale, grads.bn_scale, s.bn_scale_m, s.bn_scale_v, lr, s.step);
      adam_update(bn_->shift, grads.bn_shift, s.bn_shift_m, s.bn_shift_v, lr, s.step);
    }
  }

  ModelConfig config_;
  int input_dim_ = 0;
  bool training_ = false;
  std::vector<Layer> layers_;
  std::optional<BatchNorm> bn_;
};

// Accuracy of argmax predictions on `nodes` against the graph's labels.
inline double evaluate_accuracy(const Model& model, const Graph& graph, const NodeSet& nodes) {
  if (nodes.empty()) throw std::invalid_argument("evaluate_accuracy: empty node set");
  const Eigen::MatrixXd posterior = model.forward(graph, nodes);
  std::size_t correct = 0, k = 0;
  for (const NodeId v : nodes.ids()) {
    const NodeId truth = graph.label(v);
    if (truth == Graph::kNoLabel)
      throw std::invalid_argument("evaluate_accuracy: node " + std::to_string(v) + " is unlabeled");
    Eigen::Index pred;
    posterior.row(static_cast<Eigen::Index>(k++)).maxCoeff(&pred);
    if (static_cast<NodeId>(pred) == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

// ---------------------------------------------------------------------------
// Checkpoint format (text, hex floats for exact round trips):
//   privgnn-model 1
//   kind gnn|mlp
//   input_dim / hidden_dim / num_layers / num_classes / dropout /
//   learning_rate / epochs / batch_norm_after_first lines
//   tensor <name> <rows> <cols>, then <rows> lines of <cols> hex values
// Optimizer state is not part of a checkpoint.

inline void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path.string());
  const ModelConfig& c = model.config();
  out << "privgnn-model 1\n";
  out << "kind " << (c.kind == ModelConfig::Kind::kGnn ? "gnn" : "mlp") << "\n";
  out << "input_dim " << model.input_dim() << "\n";
  out << "hidden_dim " << c.hidden_dim << "\n";
  out << "num_layers " << c.num_layers << "\n";
  out << "num_classes " << c.num_classes << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", c.dropout);
  out << "dropout " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%a", c.learning_rate);
  out << "learning_rate " << buf << "\n";
  out << "epochs " << c.epochs << "\n";
  out << "batch_norm_after_first " << (c.batch_norm_after_first ? 1 : 0) << "\n";

  const auto write_tensor = [&out, &buf](const std::string& name, const Eigen::MatrixXd& t) {
    out << "tensor " << name << " " << t.rows() << " " << t.cols() << "\n";
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%a", t(i, j));
        out << (j ? " " : "") << buf;
      }
      out << "\n";
    }
  };
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    write_tensor(prefix + "w_self", layer.w_self);
    if (layer.w_neigh.size() > 0) write_tensor(prefix + "w_neigh", layer.w_neigh);
    write_tensor(prefix + "bias", layer.bias.transpose());
  }
  if (model.batch_norm().has_value()) {
    const auto& bn = *model.batch_norm();
    write_tensor("bn1.scale", bn.scale.transpose());
    write_tensor("bn1.shift", bn.shift.transpose());
    write_tensor("bn1.running_mean", bn.running_mean.transpose());
    write_tensor("bn1.running_var", bn.running_var.transpose());
  }
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "privgnn-model" || version != 1)
    throw std::runtime_error("load_model: unrecognized checkpoint header");

  ModelConfig config;
  int input_dim = 0;
  std::string key;
  while (in >> key && key != "tensor") {
    if (key == "kind") {
      in >> word;
      config.kind = word == "gnn" ? ModelConfig::Kind::kGnn : ModelConfig::Kind::kMlp;
    } else if (key == "input_dim") in >> input_dim;
    else if (key == "hidden_dim") in >> config.hidden_dim;
    else if (key == "num_layers") in >> config.num_layers;
    else if (key == "num_classes") in >> config.num_classes;
    else if (key == "dropout") { in >> word; config.dropout = std::strtod(word.c_str(), nullptr); }
    else if (key == "learning_rate") { in >> word; config.learning_rate = std::strtod(word.c_str(), nullptr); }
    else if (key == "epochs") in >> config.epochs;
    else if (key == "batch_norm_after_first") { int b; in >> b; config.batch_norm_after_first = b != 0; }
    else throw std::runtime_error("load_model: unknown key '" + key + "'");
  }

  RngStream dummy(0);
  Model model = Model::init(config, input_dim, dummy);
  const auto read_tensor = [&in](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd t(rows, cols);
    std::string tok;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> tok)) throw std::runtime_error("load_model: truncated tensor data");
        t(i, j) = std::strtod(tok.c_str(), nullptr);
      }
    return t;
  };
  // the first "tensor" keyword was already consumed by the header loop
  bool have_keyword = key == "tensor";
  while (have_keyword) {
    std::string name;
    Eigen::Index rows, cols;
    if (!(in >> name >> rows >> cols)) throw std::runtime_error("load_model: bad tensor header");
    const Eigen::MatrixXd t = read_tensor(rows, cols);
    const auto assign = [&](const std::string& n, auto setter) {
      if (name == n) {
        setter(t);
        return true;
      }
      return false;
    };
    bool matched = false;
    for (std::size_t l = 0; l < model.layers().size() && !matched; ++l) {
      const std::string prefix = "layer" + std::to_string(l) + ".";
      matched = assign(prefix + "w_self", [&](const Eigen::MatrixXd& x) { model.layers()[l].w_self = x; }) ||
                assign(prefix + "w_neigh", [&](const Eigen::MatrixXd& x) { model.layers()[l].w_neigh = x; }) ||
                assign(prefix + "bias", [&](const Eigen::MatrixXd& x) { model.layers()[l].bias = x.row(0).transpose(); });
    }
    if (!matched && model.batch_norm().has_value()) {
      auto& bn = *model.batch_norm();
      matched = assign("bn1.scale", [&](const Eigen::MatrixXd& x) { bn.scale = x.row(0).transpose(); }) ||
                assign("bn1.shift", [&](const Eigen::MatrixXd& x) { bn.shift = x.row(0).transpose(); }) ||
                assign("bn1.running_mean", [&](const Eigen::MatrixXd& x) { bn.running_mean = x.row(0).transpose(); }) ||
                assign("bn1.running_var", [&](const Eigen::MatrixXd& x) { bn.running_var = x.row(0).transpose(); });
    }
    if (!matched) throw std::runtime_error("load_model: unexpected tensor '" + name + "'");
    have_keyword = static_cast<bool>(in >> key) && key == "tensor";
  }
  return model;
}

}  // namespace privgnn

#endif  // PRIVGNN_NN_HPP_
