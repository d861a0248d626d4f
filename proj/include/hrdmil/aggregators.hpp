#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hrdmil/common.hpp"
#include "hrdmil/datamodel.hpp"

namespace hrdmil {

enum class Arch { AttMil, SpatialTransformer };

Arch parse_arch(const std::string& name);  // attmil | transformer
const char* to_string(Arch a);

struct TransformerLayerParams {
    std::vector<double> w_q, w_k, w_v, w_o;  // each d_model x d_model
    std::vector<double> w_ff1;               // d_hidden x d_model
    std::vector<double> b_ff1;               // d_hidden
    std::vector<double> w_ff2;               // d_model x d_hidden
    std::vector<double> b_ff2;               // d_model
};

// Weights for either aggregator. The transformer operates at d_model == d_in
// (residual streams keep the input width); d_hidden is the attMIL gate width
// and the transformer feed-forward width.
struct ModelParams {
    Arch arch = Arch::AttMil;
    uint32_t d_in = 0;
    uint32_t d_hidden = 0;
    uint32_t n_layers = 0;  // transformer only
    uint32_t n_heads = 0;   // transformer only

    // attMIL: gated attention tanh(V h) * sigmoid(U h), score vector w.
    std::vector<double> att_v;  // d_hidden x d_in
    std::vector<double> att_u;  // d_hidden x d_in
    std::vector<double> att_w;  // d_hidden

    // Transformer body.
    std::vector<TransformerLayerParams> layers;
    std::vector<double> w_pool;  // d_in; attention-pooling score vector
    double lambda_decay = 0.0;   // spatial decay rate, >= 0

    // Regression head (w_head is d_hidden for attMIL, d_in for transformer).
    std::vector<double> w_head;
    double b_head = 0.0;

    size_t parameter_count() const;
};

struct Prediction {
    std::string patient_id;
    double y_hat = 0.0;
    std::vector<double> attention;  // per-row pooling weights, sums to 1
};

// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
// lambda = 0.1. Deterministic given seed.
ModelParams init_params(Arch arch, uint32_t d_in, uint32_t d_hidden, uint64_t seed,
                        uint32_t n_layers = 2, uint32_t n_heads = 2);

ModelParams zeros_like(const ModelParams& p);

// Visits every trainable tensor (scalars as 1-element spans) in a fixed
// order shared by the optimizer and the finite-difference checker.
void visit_params(ModelParams& p,
                  const std::function<void(const char* name, std::span<double>)>& fn);

// ---------------------------------------------------------------------------
// attMIL
// ---------------------------------------------------------------------------

struct AttMilCache {
    uint32_t n = 0;
    std::vector<double> h;       // n x d_in (input copied to doubles)
    std::vector<double> t;       // n x d_hidden, tanh(V h)
    std::vector<double> s;       // n x d_hidden, sigmoid(U h)
    std::vector<double> g;       // n x d_hidden, t * s
    std::vector<double> a;       // n, softmax weights
    std::vector<double> z;       // d_hidden, pooled embedding
};

Prediction attmil_forward(const ModelParams& params, const Instance& instance,
                          AttMilCache* cache = nullptr);
// Exact analytic gradients, accumulated into `grads` (shaped via zeros_like).
void attmil_backward(const ModelParams& params, const AttMilCache& cache, double d_yhat,
                     ModelParams& grads);

// ---------------------------------------------------------------------------
// Spatial-decay transformer (simplified): per layer, multi-head self-attention
// with bias[i][j] = -lambda * ||c_i - c_j|| added to the pre-softmax logits,
// residual + GELU feed-forward; attention pooling; linear head.
// ---------------------------------------------------------------------------

std::vector<double> spatial_decay_bias(const std::vector<int32_t>& coords, uint32_t n,
                                       double lambda);

struct TransformerLayerCache {
    std::vector<double> x_in;    // n x d
    std::vector<double> q, k, v; // n x d each
    std::vector<double> attn;    // n_heads x n x n, post-softmax
    std::vector<double> ho;      // n x d, concatenated head outputs
    std::vector<double> x_res;   // n x d, after attention residual
    std::vector<double> f1;      // n x d_hidden, pre-activation
    std::vector<double> g;       // n x d_hidden, gelu(f1)
    std::vector<double> x_out;   // n x d
};

struct TransformerCache {
    uint32_t n = 0;
    std::vector<double> dist;  // n x n pairwise coordinate distances (empty if no coords)
    std::vector<TransformerLayerCache> layers;
    std::vector<double> a;  // n, pooling weights
    std::vector<double> z;  // d, pooled embedding
};

Prediction transformer_forward(const ModelParams& params, const Instance& instance,
                               TransformerCache* cache = nullptr);
void transformer_backward(const ModelParams& params, const TransformerCache& cache,
                          double d_yhat, ModelParams& grads);

// ---------------------------------------------------------------------------
// Arch dispatch used by the training loop.
// ---------------------------------------------------------------------------

struct ModelCache {
    AttMilCache att;
    TransformerCache trans;
};

Prediction model_forward(const ModelParams& params, const Instance& instance,
                         ModelCache* cache = nullptr);
void model_backward(const ModelParams& params, const ModelCache& cache, double d_yhat,
                    ModelParams& grads);

}  // namespace hrdmil
