#pragma once

// Dense kernels of the digraph inception convolution: proximity matrices,
// personalised-PageRank stationary distribution, symmetric normalisations,
// the layer forward pass, readout and reverse-mode gradients.
//
// All matrices are small (tens of nodes) and dense; every kernel is a pure
// function of its inputs.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/graphbuild.hpp"

namespace logmesh {

enum class Fusion { Sum, Concat };
enum class Readout { Mean, Sum, Max };

constexpr std::string_view to_string(Fusion f) { return f == Fusion::Sum ? "sum" : "concat"; }

constexpr std::string_view to_string(Readout r) {
  switch (r) {
    case Readout::Mean: return "mean";
    case Readout::Sum: return "sum";
    case Readout::Max: return "max";
  }
  return "mean";
}

inline Fusion fusion_from_string(std::string_view s) {
  if (s == "sum") return Fusion::Sum;
  if (s == "concat") return Fusion::Concat;
  throw Error(ErrorCode::Validation, "fusion must be 'sum' or 'concat', got '" + std::string(s) + "'");
}

inline Readout readout_from_string(std::string_view s) {
  if (s == "mean") return Readout::Mean;
  if (s == "sum") return Readout::Sum;
  if (s == "max") return Readout::Max;
  throw Error(ErrorCode::Validation, "readout must be mean, sum or max, got '" + std::string(s) + "'");
}

struct ModelConfig {
  int layers = 1;
  int order = 1;  // proximity order k
  int dim = 128;  // per-branch output width of every layer
  double alpha = 0.1;
  Fusion fusion = Fusion::Sum;
  Readout readout = Readout::Mean;

  int branches() const { return order + 1; }
  int fused_dim() const { return fusion == Fusion::Sum ? dim : dim * branches(); }

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (layers < 1) out.push_back("layers must be >= 1");
    if (order < 1 || order > 2) out.push_back("proximity order k must be 1 or 2 (supported range 1..2)");
    if (dim < 1) out.push_back("embedding dimension must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) out.push_back("teleport alpha must be in (0,1)");
    return out;
  }

  void validate() const {
    auto p = problems();
    if (!p.empty()) throw Error(ErrorCode::Validation, p.front());
  }
};

namespace digcn {

/// Edge weights enter through the self-looped adjacency: Ã = A⊙Y + I.
inline Eigen::MatrixXd weighted_tilde_adjacency(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Y) {
  if (A.rows() != A.cols() || A.rows() != Y.rows() || A.cols() != Y.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "A and Y must be square matrices of equal size");
  }
  return A.cwiseProduct(Y) + Eigen::MatrixXd::Identity(A.rows(), A.cols());
}

/// Row-normalised transition matrix D̃⁻¹Ã.
inline Eigen::MatrixXd first_order_proximity(const Eigen::MatrixXd& tilde_a) {
  Eigen::VectorXd deg = tilde_a.rowwise().sum();
  return deg.cwiseInverse().asDiagonal() * tilde_a;
}

struct Stationary {
  Eigen::VectorXd pi;
  double residual = 0.0;
  int iterations = 0;
};

/// Stationary distribution of (1-α)P + (α/n)𝟙𝟙ᵀ by power iteration from the
/// uniform vector.
inline Stationary ppr_stationary(const Eigen::MatrixXd& P, double alpha, double tol = 1e-10,
                                 int max_iter = 10000) {
  const Eigen::Index n = P.rows();
  if (n == 0 || P.cols() != n) throw Error(ErrorCode::ShapeMismatch, "P must be square and non-empty");
  const double teleport = alpha / static_cast<double>(n);
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::RowVectorXd next = (((1.0 - alpha) * (pi * P)).array() + teleport).matrix();
    residual = (next - pi).lpNorm<1>();
    pi = next;
    if (residual < tol) {
      Eigen::RowVectorXd check = (((1.0 - alpha) * (pi * P)).array() + teleport).matrix();
      return {pi.transpose(), (check - pi).lpNorm<1>(), it};
    }
  }
  throw Error(ErrorCode::NoConvergence,
              "PageRank power iteration did not converge, residual " + std::to_string(residual));
}

/// Ψ = ½(Π^½ P Π^-½ + Π^-½ Pᵀ Π^½), symmetrised after assembly.
inline Eigen::MatrixXd psi(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
  Eigen::VectorXd s = pi.cwiseSqrt();
  Eigen::MatrixXd left = s.asDiagonal() * P * s.cwiseInverse().asDiagonal();
  Eigen::MatrixXd right = s.cwiseInverse().asDiagonal() * P.transpose() * s.asDiagonal();
  Eigen::MatrixXd out = 0.5 * (left + right);
  return 0.5 * (out + out.transpose());
}

/// Entries where both inputs are non-zero keep their sum; all others are zero.
inline Eigen::MatrixXd intersect(const Eigen::MatrixXd& m1, const Eigen::MatrixXd& m2) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m1.rows(), m1.cols());
  for (Eigen::Index i = 0; i < m1.rows(); ++i) {
    for (Eigen::Index j = 0; j < m1.cols(); ++j) {
      if (m1(i, j) != 0.0 && m2(i, j) != 0.0) out(i, j) = m1(i, j) + m2(i, j);
    }
  }
  return out;
}

struct SecondOrder {
  Eigen::MatrixXd P2;
  Eigen::MatrixXd Phi;
};

/// Second-order proximity P⁽²⁾ = ¼·Intersect(PPᵀ, PᵀP) and its symmetric
/// normalisation Φ = W^-½ P⁽²⁾ W^-½ with W the row sums (zero rows read as 1).
inline SecondOrder second_order(const Eigen::MatrixXd& P) {
  Eigen::MatrixXd out_in = P * P.transpose();
  Eigen::MatrixXd in_out = P.transpose() * P;
  SecondOrder so;
  so.P2 = 0.25 * intersect(out_in, in_out);
  Eigen::VectorXd w = so.P2.rowwise().sum();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) == 0.0) w(i) = 1.0;
  }
  Eigen::VectorXd w_isqrt = w.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd phi = w_isqrt.asDiagonal() * so.P2 * w_isqrt.asDiagonal();
  so.Phi = 0.5 * (phi + phi.transpose());
  return so;
}

}  // namespace digcn

struct PropagationOperators {
  Eigen::MatrixXd P1;
  Eigen::VectorXd pi;
  Eigen::MatrixXd Psi;
  Eigen::MatrixXd P2;   // empty unless order >= 2
  Eigen::MatrixXd Phi;  // empty unless order >= 2
  double alpha = 0.1;
  int order = 1;
  double stationary_residual = 0.0;

  /// S_b for branch b: identity, Ψ, Φ.
  Eigen::MatrixXd apply(int branch, const Eigen::MatrixXd& H) const {
    switch (branch) {
      case 0: return H;
      case 1: return Psi * H;
      default: return Phi * H;
    }
  }

  Eigen::MatrixXd apply_transpose(int branch, const Eigen::MatrixXd& G) const {
    switch (branch) {
      case 0: return G;
      case 1: return Psi.transpose() * G;
      default: return Phi.transpose() * G;
    }
  }
};

inline PropagationOperators build_operators(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Y,
                                            double alpha, int order) {
  PropagationOperators ops;
  ops.alpha = alpha;
  ops.order = order;
  ops.P1 = digcn::first_order_proximity(digcn::weighted_tilde_adjacency(A, Y));
  auto st = digcn::ppr_stationary(ops.P1, alpha);
  ops.pi = st.pi;
  ops.stationary_residual = st.residual;
  ops.Psi = digcn::psi(ops.P1, ops.pi);
  if (order >= 2) {
    auto so = digcn::second_order(ops.P1);
    ops.P2 = std::move(so.P2);
    ops.Phi = std::move(so.Phi);
  }
  return ops;
}

inline PropagationOperators build_operators(const LogGraph& g, const ModelConfig& cfg) {
  return build_operators(g.A, g.Y, cfg.alpha, cfg.order);
}

/// Bias-free parameters of one inception layer: one matrix per branch.
struct LayerParams {
  std::vector<Eigen::MatrixXd> theta;

  double squared_norm() const {
    double s = 0.0;
    for (const auto& t : theta) s += t.squaredNorm();
    return s;
  }
};

using ModelParams = std::vector<LayerParams>;

inline ModelParams zeros_like(const ModelParams& params) {
  ModelParams out = params;
  for (auto& layer : out) {
    for (auto& t : layer.theta) t.setZero();
  }
  return out;
}

inline double squared_norm(const ModelParams& params) {
  double s = 0.0;
  for (const auto& l : params) s += l.squared_norm();
  return s;
}

struct LayerCache {
  Eigen::MatrixXd input;   // H
  Eigen::MatrixXd preact;  // U = Γ(S_b H Θ_b)
  Eigen::MatrixXd output;  // Z = max(U, 0)
};

inline LayerCache layer_forward(const Eigen::MatrixXd& H, const PropagationOperators& ops,
                                const LayerParams& params, const ModelConfig& cfg) {
  const int branches = cfg.branches();
  if (static_cast<int>(params.theta.size()) != branches) {
    throw Error(ErrorCode::ShapeMismatch, "layer has " + std::to_string(params.theta.size()) +
                                              " parameter matrices, expected " + std::to_string(branches));
  }
  const Eigen::Index out_dim = params.theta[0].cols();
  for (const auto& t : params.theta) {
    if (t.rows() != H.cols()) throw Error(ErrorCode::ShapeMismatch, "parameter rows do not match input width");
    if (cfg.fusion == Fusion::Sum && t.cols() != out_dim) {
      throw Error(ErrorCode::ShapeMismatch, "sum fusion requires equal branch widths");
    }
  }
  if (ops.P1.rows() != H.rows()) throw Error(ErrorCode::ShapeMismatch, "operator size does not match node count");

  LayerCache c;
  c.input = H;
  if (cfg.fusion == Fusion::Sum) {
    c.preact = Eigen::MatrixXd::Zero(H.rows(), out_dim);
    for (int b = 0; b < branches; ++b) c.preact += ops.apply(b, H) * params.theta[static_cast<std::size_t>(b)];
  } else {
    Eigen::Index total = 0;
    for (const auto& t : params.theta) total += t.cols();
    c.preact.resize(H.rows(), total);
    Eigen::Index col = 0;
    for (int b = 0; b < branches; ++b) {
      const auto& t = params.theta[static_cast<std::size_t>(b)];
      c.preact.middleCols(col, t.cols()) = ops.apply(b, H) * t;
      col += t.cols();
    }
  }
  c.output = c.preact.cwiseMax(0.0);
  return c;
}

inline Eigen::VectorXd readout(const Eigen::MatrixXd& Z, Readout mode) {
  if (Z.rows() == 0) throw Error(ErrorCode::EmptyGraph, "readout over a graph with no nodes");
  switch (mode) {
    case Readout::Mean: return Z.colwise().mean().transpose();
    case Readout::Sum: return Z.colwise().sum().transpose();
    case Readout::Max: return Z.colwise().maxCoeff().transpose();
  }
  return {};
}

/// Gradient of the readout w.r.t. node rows, given the gradient w.r.t. z.
/// Max routes each coordinate to the first row attaining it.
inline Eigen::MatrixXd readout_backward(const Eigen::MatrixXd& Z, Readout mode, const Eigen::VectorXd& dz) {
  const Eigen::Index n = Z.rows();
  Eigen::MatrixXd dZ = Eigen::MatrixXd::Zero(n, Z.cols());
  switch (mode) {
    case Readout::Mean: dZ.rowwise() = dz.transpose() / static_cast<double>(n); break;
    case Readout::Sum: dZ.rowwise() = dz.transpose(); break;
    case Readout::Max:
      for (Eigen::Index c = 0; c < Z.cols(); ++c) {
        Eigen::Index arg = 0;
        Z.col(c).maxCoeff(&arg);
        dZ(arg, c) = dz(c);
      }
      break;
  }
  return dZ;
}

struct ForwardResult {
  Eigen::VectorXd z;
  std::vector<LayerCache> layers;

  const Eigen::MatrixXd& node_embeddings() const { return layers.back().output; }
};

inline ForwardResult forward(const Eigen::MatrixXd& X, const PropagationOperators& ops, const ModelParams& params,
                             const ModelConfig& cfg) {
  if (params.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  ForwardResult r;
  r.layers.reserve(params.size());
  const Eigen::MatrixXd* h = &X;
  for (const auto& layer : params) {
    r.layers.push_back(layer_forward(*h, ops, layer, cfg));
    h = &r.layers.back().output;
  }
  r.z = readout(r.layers.back().output, cfg.readout);
  return r;
}

/// Accumulates into `grads` the gradient of a scalar whose derivative with
/// respect to the graph representation is `dz`. Operators are constants.
inline void backward(const ForwardResult& fr, const PropagationOperators& ops, const ModelParams& params,
                     const ModelConfig& cfg, const Eigen::VectorXd& dz, ModelParams& grads) {
  Eigen::MatrixXd dZ = readout_backward(fr.layers.back().output, cfg.readout, dz);
  for (std::size_t l = params.size(); l-- > 0;) {
    const LayerCache& c = fr.layers[l];
    const LayerParams& p = params[l];
    Eigen::MatrixXd dU = dZ.cwiseProduct((c.preact.array() > 0.0).cast<double>().matrix());
    Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(c.input.rows(), c.input.cols());
    Eigen::Index col = 0;
    for (int b = 0; b < cfg.branches(); ++b) {
      const auto& t = p.theta[static_cast<std::size_t>(b)];
      Eigen::MatrixXd dUb = cfg.fusion == Fusion::Sum ? dU : Eigen::MatrixXd(dU.middleCols(col, t.cols()));
      col += t.cols();
      grads[l].theta[static_cast<std::size_t>(b)] += ops.apply(b, c.input).transpose() * dUb;
      if (l > 0) dH += ops.apply_transpose(b, dUb * t.transpose());
    }
    dZ = std::move(dH);
  }
}

/// A graph prepared for repeated evaluation: attributes plus cached operators.
struct PreparedGraph {
  Eigen::MatrixXd X;
  PropagationOperators ops;
};

inline PreparedGraph prepare(const LogGraph& g, const ModelConfig& cfg) {
  return {g.X, build_operators(g, cfg)};
}

struct LossAndGradient {
  double loss = 0.0;
  double distance = 0.0;  // mean squared distance to the center
  ModelParams grad;
};

/// One-class objective over a batch:
///   (1/B) Σ ‖z_m − o‖² + (λ/2) Σ_l ‖Θ_l‖²_F
/// together with its gradient.
inline LossAndGradient svdd_loss_and_gradient(const std::vector<const PreparedGraph*>& batch,
                                              const ModelParams& params, const ModelConfig& cfg,
                                              const Eigen::VectorXd& center, double lambda) {
  LossAndGradient out;
  out.grad = zeros_like(params);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const PreparedGraph* g : batch) {
    ForwardResult fr = forward(g->X, g->ops, params, cfg);
    Eigen::VectorXd diff = fr.z - center;
    out.distance += diff.squaredNorm() * inv_b;
    backward(fr, g->ops, params, cfg, 2.0 * inv_b * diff, out.grad);
  }
  out.loss = out.distance + 0.5 * lambda * squared_norm(params);
  for (std::size_t l = 0; l < params.size(); ++l) {
    for (std::size_t b = 0; b < params[l].theta.size(); ++b) out.grad[l].theta[b] += lambda * params[l].theta[b];
  }
  return out;
}

}  // namespace logmesh
