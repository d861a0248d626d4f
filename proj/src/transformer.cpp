#include <cmath>

#include "hrdmil/aggregators.hpp"

namespace hrdmil {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// y = x * W^T with W stored row-major [d_out][d_in].
void linear_nt(const std::vector<double>& x, const std::vector<double>& w, uint32_t n,
               uint32_t d_in, uint32_t d_out, std::vector<double>& y) {
    y.assign(static_cast<size_t>(n) * d_out, 0.0);
    for (uint32_t i = 0; i < n; ++i) {
        const double* xi = x.data() + static_cast<size_t>(i) * d_in;
        double* yi = y.data() + static_cast<size_t>(i) * d_out;
        for (uint32_t o = 0; o < d_out; ++o) {
            const double* wo = w.data() + static_cast<size_t>(o) * d_in;
            double acc = 0.0;
            for (uint32_t j = 0; j < d_in; ++j) acc += xi[j] * wo[j];
            yi[o] = acc;
        }
    }
}

void linear_backward_nt(const std::vector<double>& dy, const std::vector<double>& x,
                        const std::vector<double>& w, uint32_t n, uint32_t d_in, uint32_t d_out,
                        std::vector<double>& dw, std::vector<double>& dx) {
    for (uint32_t i = 0; i < n; ++i) {
        const double* dyi = dy.data() + static_cast<size_t>(i) * d_out;
        const double* xi = x.data() + static_cast<size_t>(i) * d_in;
        double* dxi = dx.data() + static_cast<size_t>(i) * d_in;
        for (uint32_t o = 0; o < d_out; ++o) {
            double g = dyi[o];
            if (g == 0.0) continue;
            double* dwo = dw.data() + static_cast<size_t>(o) * d_in;
            const double* wo = w.data() + static_cast<size_t>(o) * d_in;
            for (uint32_t j = 0; j < d_in; ++j) {
                dwo[j] += g * xi[j];
                dxi[j] += g * wo[j];
            }
        }
    }
}

void softmax_row(double* v, uint32_t n) {
    double mx = v[0];
    for (uint32_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
    double sum = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - mx);
        sum += v[i];
    }
    for (uint32_t i = 0; i < n; ++i) v[i] /= sum;
}

// d_logits from post-softmax weights a and d_a, in place over d_a.
void softmax_backward_row(const double* a, double* da, uint32_t n) {
    double dot = 0.0;
    for (uint32_t i = 0; i < n; ++i) dot += a[i] * da[i];
    for (uint32_t i = 0; i < n; ++i) da[i] = a[i] * (da[i] - dot);
}

}  // namespace

std::vector<double> spatial_decay_bias(const std::vector<int32_t>& coords, uint32_t n,
                                       double lambda) {
    if (coords.size() != static_cast<size_t>(n) * 2)
        fail(ErrorCategory::Validation, "spatial_decay_bias: coords must be n x 2");
    if (lambda < 0.0) fail(ErrorCategory::Usage, "spatial_decay_bias: lambda must be >= 0");
    std::vector<double> bias(static_cast<size_t>(n) * n, 0.0);
    for (uint32_t i = 0; i < n; ++i) {
        for (uint32_t j = i + 1; j < n; ++j) {
            double dx = static_cast<double>(coords[2 * i]) - coords[2 * j];
            double dy = static_cast<double>(coords[2 * i + 1]) - coords[2 * j + 1];
            double b = -lambda * std::sqrt(dx * dx + dy * dy);
            bias[static_cast<size_t>(i) * n + j] = b;
            bias[static_cast<size_t>(j) * n + i] = b;
        }
    }
    return bias;
}

Prediction transformer_forward(const ModelParams& params, const Instance& instance,
                               TransformerCache* cache) {
    if (instance.matrix.dim != params.d_in)
        fail(ErrorCategory::Dimension, "transformer_forward: instance dim " +
                                           std::to_string(instance.matrix.dim) +
                                           " != d_in " + std::to_string(params.d_in));
    const bool has_coords = instance.matrix.has_coords();
    if (params.lambda_decay > 0.0 && !has_coords)
        fail(ErrorCategory::Validation,
             "transformer_forward: lambda > 0 requires patch coordinates");

    const uint32_t n = instance.matrix.n_patches;
    const uint32_t d = params.d_in;
    const uint32_t dff = params.d_hidden;
    const uint32_t nh = params.n_heads;
    const uint32_t dh = d / nh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    TransformerCache local;
    TransformerCache& c = cache ? *cache : local;
    c.n = n;
    c.layers.assign(params.n_layers, {});

    // Pairwise distances once; every layer shares the same decay bias.
    c.dist.clear();
    if (has_coords) {
        c.dist.resize(static_cast<size_t>(n) * n, 0.0);
        for (uint32_t i = 0; i < n; ++i) {
            for (uint32_t j = i + 1; j < n; ++j) {
                double dx = static_cast<double>(instance.matrix.coord(i, 0)) -
                            instance.matrix.coord(j, 0);
                double dy = static_cast<double>(instance.matrix.coord(i, 1)) -
                            instance.matrix.coord(j, 1);
                double dist = std::sqrt(dx * dx + dy * dy);
                c.dist[static_cast<size_t>(i) * n + j] = dist;
                c.dist[static_cast<size_t>(j) * n + i] = dist;
            }
        }
    }

    std::vector<double> x(static_cast<size_t>(n) * d);
    for (uint32_t i = 0; i < n; ++i) {
        auto row = instance.matrix.row(i);
        for (uint32_t j = 0; j < d; ++j) x[static_cast<size_t>(i) * d + j] = row[j];
    }

    for (uint32_t l = 0; l < params.n_layers; ++l) {
        const auto& lp = params.layers[l];
        auto& lc = c.layers[l];
        lc.x_in = x;

        linear_nt(x, lp.w_q, n, d, d, lc.q);
        linear_nt(x, lp.w_k, n, d, d, lc.k);
        linear_nt(x, lp.w_v, n, d, d, lc.v);

        lc.attn.assign(static_cast<size_t>(nh) * n * n, 0.0);
        lc.ho.assign(static_cast<size_t>(n) * d, 0.0);
        for (uint32_t h = 0; h < nh; ++h) {
            const uint32_t off = h * dh;
            double* ah = lc.attn.data() + static_cast<size_t>(h) * n * n;
            for (uint32_t i = 0; i < n; ++i) {
                double* logits = ah + static_cast<size_t>(i) * n;
                const double* qi = lc.q.data() + static_cast<size_t>(i) * d + off;
                for (uint32_t j = 0; j < n; ++j) {
                    const double* kj = lc.k.data() + static_cast<size_t>(j) * d + off;
                    double acc = 0.0;
                    for (uint32_t cdim = 0; cdim < dh; ++cdim) acc += qi[cdim] * kj[cdim];
                    double bias = (params.lambda_decay > 0.0 && !c.dist.empty())
                                      ? -params.lambda_decay *
                                            c.dist[static_cast<size_t>(i) * n + j]
                                      : 0.0;
                    logits[j] = acc * scale + bias;
                }
                softmax_row(logits, n);
                double* hoi = lc.ho.data() + static_cast<size_t>(i) * d + off;
                for (uint32_t j = 0; j < n; ++j) {
                    const double* vj = lc.v.data() + static_cast<size_t>(j) * d + off;
                    double a = logits[j];
                    for (uint32_t cdim = 0; cdim < dh; ++cdim) hoi[cdim] += a * vj[cdim];
                }
            }
        }

        std::vector<double> attn_out;
        linear_nt(lc.ho, lp.w_o, n, d, d, attn_out);
        lc.x_res.resize(static_cast<size_t>(n) * d);
        for (size_t i = 0; i < lc.x_res.size(); ++i) lc.x_res[i] = x[i] + attn_out[i];

        linear_nt(lc.x_res, lp.w_ff1, n, d, dff, lc.f1);
        for (uint32_t i = 0; i < n; ++i)
            for (uint32_t u = 0; u < dff; ++u)
                lc.f1[static_cast<size_t>(i) * dff + u] += lp.b_ff1[u];
        lc.g.resize(lc.f1.size());
        for (size_t i = 0; i < lc.f1.size(); ++i) lc.g[i] = gelu(lc.f1[i]);

        std::vector<double> f2;
        linear_nt(lc.g, lp.w_ff2, n, dff, d, f2);
        lc.x_out.resize(static_cast<size_t>(n) * d);
        for (uint32_t i = 0; i < n; ++i)
            for (uint32_t o = 0; o < d; ++o) {
                size_t idx = static_cast<size_t>(i) * d + o;
                lc.x_out[idx] = lc.x_res[idx] + f2[idx] + lp.b_ff2[o];
            }
        x = lc.x_out;
    }

    // Attention pooling over the final rows, then the regression head.
    c.a.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        const double* xi = x.data() + static_cast<size_t>(i) * d;
        double acc = 0.0;
        for (uint32_t j = 0; j < d; ++j) acc += xi[j] * params.w_pool[j];
        c.a[i] = acc;
    }
    softmax_row(c.a.data(), n);
    c.z.assign(d, 0.0);
    for (uint32_t i = 0; i < n; ++i) {
        const double* xi = x.data() + static_cast<size_t>(i) * d;
        for (uint32_t j = 0; j < d; ++j) c.z[j] += c.a[i] * xi[j];
    }
    double y = params.b_head;
    for (uint32_t j = 0; j < d; ++j) y += params.w_head[j] * c.z[j];
    if (!std::isfinite(y)) fail(ErrorCategory::Numeric, "transformer_forward: non-finite output");

    Prediction pred;
    pred.patient_id = instance.patient_id;
    pred.y_hat = y;
    pred.attention = c.a;
    return pred;
}

void transformer_backward(const ModelParams& params, const TransformerCache& cache,
                          double d_yhat, ModelParams& grads) {
    const uint32_t n = cache.n;
    const uint32_t d = params.d_in;
    const uint32_t dff = params.d_hidden;
    const uint32_t nh = params.n_heads;
    const uint32_t dh = d / nh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::vector<double>& x_final =
        params.n_layers > 0 ? cache.layers.back().x_out : cache.layers.front().x_in;

    // Head and pooling.
    grads.b_head += d_yhat;
    std::vector<double> dz(d);
    for (uint32_t j = 0; j < d; ++j) {
        grads.w_head[j] += d_yhat * cache.z[j];
        dz[j] = d_yhat * params.w_head[j];
    }

    std::vector<double> dx(static_cast<size_t>(n) * d, 0.0);
    std::vector<double> da(n, 0.0);
    for (uint32_t i = 0; i < n; ++i) {
        const double* xi = x_final.data() + static_cast<size_t>(i) * d;
        double* dxi = dx.data() + static_cast<size_t>(i) * d;
        double acc = 0.0;
        for (uint32_t j = 0; j < d; ++j) {
            dxi[j] += cache.a[i] * dz[j];
            acc += xi[j] * dz[j];
        }
        da[i] = acc;
    }
    softmax_backward_row(cache.a.data(), da.data(), n);
    for (uint32_t i = 0; i < n; ++i) {
        const double* xi = x_final.data() + static_cast<size_t>(i) * d;
        double* dxi = dx.data() + static_cast<size_t>(i) * d;
        for (uint32_t j = 0; j < d; ++j) {
            grads.w_pool[j] += da[i] * xi[j];
            dxi[j] += da[i] * params.w_pool[j];
        }
    }

    // Layers in reverse; dx enters as the gradient at x_out.
    for (int l = static_cast<int>(params.n_layers) - 1; l >= 0; --l) {
        const auto& lp = params.layers[l];
        auto& gl = grads.layers[l];
        const auto& lc = cache.layers[l];

        // Feed-forward block: x_out = x_res + g * W2^T + b2.
        std::vector<double> dg(static_cast<size_t>(n) * dff, 0.0);
        std::vector<double> dx_res = dx;  // residual path
        for (uint32_t i = 0; i < n; ++i) {
            const double* dyi = dx.data() + static_cast<size_t>(i) * d;
            for (uint32_t o = 0; o < d; ++o) gl.b_ff2[o] += dyi[o];
        }
        linear_backward_nt(dx, lc.g, lp.w_ff2, n, dff, d, gl.w_ff2, dg);
        for (size_t i = 0; i < dg.size(); ++i) dg[i] *= gelu_grad(lc.f1[i]);
        for (uint32_t i = 0; i < n; ++i) {
            const double* dgi = dg.data() + static_cast<size_t>(i) * dff;
            for (uint32_t u = 0; u < dff; ++u) gl.b_ff1[u] += dgi[u];
        }
        linear_backward_nt(dg, lc.x_res, lp.w_ff1, n, d, dff, gl.w_ff1, dx_res);

        // Attention block: x_res = x_in + ho * Wo^T.
        std::vector<double> dho(static_cast<size_t>(n) * d, 0.0);
        std::vector<double> dx_in = dx_res;  // residual path
        linear_backward_nt(dx_res, lc.ho, lp.w_o, n, d, d, gl.w_o, dho);

        std::vector<double> dq(static_cast<size_t>(n) * d, 0.0);
        std::vector<double> dk(static_cast<size_t>(n) * d, 0.0);
        std::vector<double> dv(static_cast<size_t>(n) * d, 0.0);
        std::vector<double> dlogits(n);
        for (uint32_t h = 0; h < nh; ++h) {
            const uint32_t off = h * dh;
            const double* ah = lc.attn.data() + static_cast<size_t>(h) * n * n;
            for (uint32_t i = 0; i < n; ++i) {
                const double* arow = ah + static_cast<size_t>(i) * n;
                const double* dhoi = dho.data() + static_cast<size_t>(i) * d + off;

                // ho_i = sum_j a_ij v_j  →  d a_ij and d v_j.
                for (uint32_t j = 0; j < n; ++j) {
                    const double* vj = lc.v.data() + static_cast<size_t>(j) * d + off;
                    double* dvj = dv.data() + static_cast<size_t>(j) * d + off;
                    double acc = 0.0;
                    for (uint32_t cdim = 0; cdim < dh; ++cdim) {
                        acc += dhoi[cdim] * vj[cdim];
                        dvj[cdim] += arow[j] * dhoi[cdim];
                    }
                    dlogits[j] = acc;
                }
                softmax_backward_row(arow, dlogits.data(), n);

                if (!cache.dist.empty()) {
                    double acc = 0.0;
                    for (uint32_t j = 0; j < n; ++j)
                        acc += dlogits[j] * cache.dist[static_cast<size_t>(i) * n + j];
                    grads.lambda_decay -= acc;
                }

                double* dqi = dq.data() + static_cast<size_t>(i) * d + off;
                const double* qi = lc.q.data() + static_cast<size_t>(i) * d + off;
                for (uint32_t j = 0; j < n; ++j) {
                    double g = dlogits[j] * scale;
                    if (g == 0.0) continue;
                    const double* kj = lc.k.data() + static_cast<size_t>(j) * d + off;
                    double* dkj = dk.data() + static_cast<size_t>(j) * d + off;
                    for (uint32_t cdim = 0; cdim < dh; ++cdim) {
                        dqi[cdim] += g * kj[cdim];
                        dkj[cdim] += g * qi[cdim];
                    }
                }
            }
        }

        linear_backward_nt(dq, lc.x_in, lp.w_q, n, d, d, gl.w_q, dx_in);
        linear_backward_nt(dk, lc.x_in, lp.w_k, n, d, d, gl.w_k, dx_in);
        linear_backward_nt(dv, lc.x_in, lp.w_v, n, d, d, gl.w_v, dx_in);
        dx = std::move(dx_in);
    }
}

}  // namespace hrdmil
