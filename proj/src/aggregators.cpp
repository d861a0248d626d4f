#include "hrdmil/aggregators.hpp"

#include <cmath>

namespace hrdmil {

Arch parse_arch(const std::string& name) {
    if (name == "attmil") return Arch::AttMil;
    if (name == "transformer") return Arch::SpatialTransformer;
    fail(ErrorCategory::Usage, "unknown architecture: " + name);
}

const char* to_string(Arch a) {
    return a == Arch::AttMil ? "attmil" : "transformer";
}

namespace {

void xavier_fill(std::vector<double>& w, uint32_t fan_in, uint32_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
    for (double& v : w) v = (2.0 * rng.uniform01() - 1.0) * limit;
}

}  // namespace

ModelParams init_params(Arch arch, uint32_t d_in, uint32_t d_hidden, uint64_t seed,
                        uint32_t n_layers, uint32_t n_heads) {
    if (d_in < 1 || d_hidden < 1) fail(ErrorCategory::Usage, "init_params: dims must be >= 1");
    Rng rng(seed);
    ModelParams p;
    p.arch = arch;
    p.d_in = d_in;
    p.d_hidden = d_hidden;

    if (arch == Arch::AttMil) {
        p.att_v.resize(static_cast<size_t>(d_hidden) * d_in);
        p.att_u.resize(static_cast<size_t>(d_hidden) * d_in);
        p.att_w.resize(d_hidden);
        p.w_head.resize(d_hidden);
        xavier_fill(p.att_v, d_in, d_hidden, rng);
        xavier_fill(p.att_u, d_in, d_hidden, rng);
        xavier_fill(p.att_w, d_hidden, 1, rng);
        xavier_fill(p.w_head, d_hidden, 1, rng);
        return p;
    }

    if (n_layers < 1) fail(ErrorCategory::Usage, "init_params: transformer needs n_layers >= 1");
    if (n_heads < 1 || d_in % n_heads != 0)
        fail(ErrorCategory::Usage, "init_params: n_heads must divide d_in");
    p.n_layers = n_layers;
    p.n_heads = n_heads;
    p.layers.resize(n_layers);
    for (auto& layer : p.layers) {
        layer.w_q.resize(static_cast<size_t>(d_in) * d_in);
        layer.w_k.resize(static_cast<size_t>(d_in) * d_in);
        layer.w_v.resize(static_cast<size_t>(d_in) * d_in);
        layer.w_o.resize(static_cast<size_t>(d_in) * d_in);
        layer.w_ff1.resize(static_cast<size_t>(d_hidden) * d_in);
        layer.b_ff1.assign(d_hidden, 0.0);
        layer.w_ff2.resize(static_cast<size_t>(d_in) * d_hidden);
        layer.b_ff2.assign(d_in, 0.0);
        xavier_fill(layer.w_q, d_in, d_in, rng);
        xavier_fill(layer.w_k, d_in, d_in, rng);
        xavier_fill(layer.w_v, d_in, d_in, rng);
        xavier_fill(layer.w_o, d_in, d_in, rng);
        xavier_fill(layer.w_ff1, d_in, d_hidden, rng);
        xavier_fill(layer.w_ff2, d_hidden, d_in, rng);
    }
    p.w_pool.resize(d_in);
    xavier_fill(p.w_pool, d_in, 1, rng);
    p.lambda_decay = 0.1;
    p.w_head.resize(d_in);
    xavier_fill(p.w_head, d_in, 1, rng);
    return p;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z = p;
    auto clear = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
    clear(z.att_v);
    clear(z.att_u);
    clear(z.att_w);
    for (auto& layer : z.layers) {
        clear(layer.w_q);
        clear(layer.w_k);
        clear(layer.w_v);
        clear(layer.w_o);
        clear(layer.w_ff1);
        clear(layer.b_ff1);
        clear(layer.w_ff2);
        clear(layer.b_ff2);
    }
    clear(z.w_pool);
    z.lambda_decay = 0.0;
    clear(z.w_head);
    z.b_head = 0.0;
    return z;
}

void visit_params(ModelParams& p,
                  const std::function<void(const char* name, std::span<double>)>& fn) {
    auto span_of = [](std::vector<double>& v) { return std::span<double>(v); };
    if (p.arch == Arch::AttMil) {
        fn("att_v", span_of(p.att_v));
        fn("att_u", span_of(p.att_u));
        fn("att_w", span_of(p.att_w));
    } else {
        for (auto& layer : p.layers) {
            fn("w_q", span_of(layer.w_q));
            fn("w_k", span_of(layer.w_k));
            fn("w_v", span_of(layer.w_v));
            fn("w_o", span_of(layer.w_o));
            fn("w_ff1", span_of(layer.w_ff1));
            fn("b_ff1", span_of(layer.b_ff1));
            fn("w_ff2", span_of(layer.w_ff2));
            fn("b_ff2", span_of(layer.b_ff2));
        }
        fn("w_pool", span_of(p.w_pool));
        fn("lambda", std::span<double>(&p.lambda_decay, 1));
    }
    fn("w_head", span_of(p.w_head));
    fn("b_head", std::span<double>(&p.b_head, 1));
}

size_t ModelParams::parameter_count() const {
    size_t n = 0;
    visit_params(const_cast<ModelParams&>(*this),
                 [&](const char*, std::span<double> s) { n += s.size(); });
    return n;
}

Prediction model_forward(const ModelParams& params, const Instance& instance,
                         ModelCache* cache) {
    if (params.arch == Arch::AttMil)
        return attmil_forward(params, instance, cache ? &cache->att : nullptr);
    return transformer_forward(params, instance, cache ? &cache->trans : nullptr);
}

void model_backward(const ModelParams& params, const ModelCache& cache, double d_yhat,
                    ModelParams& grads) {
    if (params.arch == Arch::AttMil)
        attmil_backward(params, cache.att, d_yhat, grads);
    else
        transformer_backward(params, cache.trans, d_yhat, grads);
}

}  // namespace hrdmil
