#include <cmath>

#include "hrdmil/aggregators.hpp"

namespace hrdmil {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable softmax in place.
void softmax(std::vector<double>& v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

}  // namespace

Prediction attmil_forward(const ModelParams& params, const Instance& instance,
                          AttMilCache* cache) {
    if (instance.matrix.dim != params.d_in)
        fail(ErrorCategory::Dimension, "attmil_forward: instance dim " +
                                           std::to_string(instance.matrix.dim) +
                                           " != d_in " + std::to_string(params.d_in));
    const uint32_t n = instance.matrix.n_patches;
    const uint32_t d = params.d_in;
    const uint32_t dh = params.d_hidden;

    AttMilCache local;
    AttMilCache& c = cache ? *cache : local;
    c.n = n;
    c.h.resize(static_cast<size_t>(n) * d);
    c.t.resize(static_cast<size_t>(n) * dh);
    c.s.resize(static_cast<size_t>(n) * dh);
    c.g.resize(static_cast<size_t>(n) * dh);
    c.a.resize(n);
    c.z.assign(dh, 0.0);

    for (uint32_t i = 0; i < n; ++i) {
        auto row = instance.matrix.row(i);
        double* h = c.h.data() + static_cast<size_t>(i) * d;
        for (uint32_t j = 0; j < d; ++j) h[j] = row[j];

        double* t = c.t.data() + static_cast<size_t>(i) * dh;
        double* s = c.s.data() + static_cast<size_t>(i) * dh;
        double* g = c.g.data() + static_cast<size_t>(i) * dh;
        double e = 0.0;
        for (uint32_t o = 0; o < dh; ++o) {
            const double* vrow = params.att_v.data() + static_cast<size_t>(o) * d;
            const double* urow = params.att_u.data() + static_cast<size_t>(o) * d;
            double pv = 0.0, pu = 0.0;
            for (uint32_t j = 0; j < d; ++j) {
                pv += vrow[j] * h[j];
                pu += urow[j] * h[j];
            }
            t[o] = std::tanh(pv);
            s[o] = sigmoid(pu);
            g[o] = t[o] * s[o];
            e += params.att_w[o] * g[o];
        }
        c.a[i] = e;  // raw score; softmax below
    }

    softmax(c.a);
    for (uint32_t i = 0; i < n; ++i) {
        const double* g = c.g.data() + static_cast<size_t>(i) * dh;
        for (uint32_t o = 0; o < dh; ++o) c.z[o] += c.a[i] * g[o];
    }

    double y = params.b_head;
    for (uint32_t o = 0; o < dh; ++o) y += params.w_head[o] * c.z[o];
    if (!std::isfinite(y)) fail(ErrorCategory::Numeric, "attmil_forward: non-finite output");

    Prediction pred;
    pred.patient_id = instance.patient_id;
    pred.y_hat = y;
    pred.attention = c.a;
    return pred;
}

void attmil_backward(const ModelParams& params, const AttMilCache& cache, double d_yhat,
                     ModelParams& grads) {
    const uint32_t n = cache.n;
    const uint32_t d = params.d_in;
    const uint32_t dh = params.d_hidden;

    grads.b_head += d_yhat;
    std::vector<double> dz(dh);
    for (uint32_t o = 0; o < dh; ++o) {
        grads.w_head[o] += d_yhat * cache.z[o];
        dz[o] = d_yhat * params.w_head[o];
    }

    // Through the pooled sum and the softmax.
    std::vector<double> da(n);
    std::vector<double> dg(static_cast<size_t>(n) * dh);
    for (uint32_t i = 0; i < n; ++i) {
        const double* g = cache.g.data() + static_cast<size_t>(i) * dh;
        double* dgi = dg.data() + static_cast<size_t>(i) * dh;
        double acc = 0.0;
        for (uint32_t o = 0; o < dh; ++o) {
            dgi[o] = cache.a[i] * dz[o];
            acc += g[o] * dz[o];
        }
        da[i] = acc;
    }
    double dot = 0.0;
    for (uint32_t i = 0; i < n; ++i) dot += cache.a[i] * da[i];
    for (uint32_t i = 0; i < n; ++i) {
        double de = cache.a[i] * (da[i] - dot);
        const double* g = cache.g.data() + static_cast<size_t>(i) * dh;
        double* dgi = dg.data() + static_cast<size_t>(i) * dh;
        for (uint32_t o = 0; o < dh; ++o) {
            grads.att_w[o] += de * g[o];
            dgi[o] += de * params.att_w[o];
        }
    }

    // Through the gate into V and U.
    for (uint32_t i = 0; i < n; ++i) {
        const double* h = cache.h.data() + static_cast<size_t>(i) * d;
        const double* t = cache.t.data() + static_cast<size_t>(i) * dh;
        const double* s = cache.s.data() + static_cast<size_t>(i) * dh;
        const double* dgi = dg.data() + static_cast<size_t>(i) * dh;
        for (uint32_t o = 0; o < dh; ++o) {
            double dpre_v = dgi[o] * s[o] * (1.0 - t[o] * t[o]);
            double dpre_u = dgi[o] * t[o] * s[o] * (1.0 - s[o]);
            double* gv = grads.att_v.data() + static_cast<size_t>(o) * d;
            double* gu = grads.att_u.data() + static_cast<size_t>(o) * d;
            for (uint32_t j = 0; j < d; ++j) {
                gv[j] += dpre_v * h[j];
                gu[j] += dpre_u * h[j];
            }
        }
    }
}

}  // namespace hrdmil
