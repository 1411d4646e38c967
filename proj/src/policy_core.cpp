#include "scgen/policy_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <json.hpp>

#include "scgen/errors.hpp"
#include "scgen/rng.hpp"

namespace scgen {

using ordered_json = nlohmann::ordered_json;

void validate_layout(const NetworkLayout& l) {
    if (l.heads < 1 || l.heads > 4) {
        throw ValidationError("layout: heads must be in [1,4], got " + std::to_string(l.heads));
    }
    if (l.attn_layers < 2 || l.attn_layers > 4) {
        throw ValidationError("layout: attention layers must be in [2,4], got " +
                              std::to_string(l.attn_layers));
    }
    if (l.model_dim == 0 || l.model_dim % l.heads != 0) {
        throw ValidationError("layout: model_dim must be positive and divisible by heads");
    }
    if (l.feature_dim == 0 || l.max_vehicles == 0 || l.head_hidden == 0 || l.out_dim == 0) {
        throw ValidationError("layout: all dimensions must be positive");
    }
}

namespace {

size_t attn_group_size(size_t d) { return 4 * (d * d + d); }

} // namespace

Network::Network(NetworkLayout layout, uint64_t seed) : layout_(layout), init_seed_(seed) {
    validate_layout(layout_);
    size_t d = layout_.model_dim;
    size_t h = layout_.head_hidden;
    size_t head_in = d + layout_.aux_dim;

    std::vector<size_t> sizes;
    sizes.push_back(d * layout_.feature_dim + d);
    for (size_t i = 0; i < layout_.attn_layers; ++i) sizes.push_back(attn_group_size(d));
    sizes.push_back(h * head_in + h);
    sizes.push_back(h * h + h);
    size_t out_group = layout_.out_dim * h + layout_.out_dim;
    if (layout_.policy_log_std) out_group += layout_.out_dim;
    sizes.push_back(out_group);

    size_t offset = 0;
    for (size_t s : sizes) {
        group_offsets_.push_back(offset);
        group_sizes_.push_back(s);
        offset += s;
    }
    params_.assign(offset, 0.0);

    Rng rng(seed);
    for (size_t g = 0; g < group_sizes_.size(); ++g) fill_group(g, rng);
}

size_t Network::group_of_fan_in(size_t group) const {
    if (group == 0) return layout_.feature_dim;
    if (group <= layout_.attn_layers) return layout_.model_dim;
    if (group == layout_.attn_layers + 1) return layout_.model_dim + layout_.aux_dim;
    return layout_.head_hidden;
}

void Network::fill_group(size_t group, Rng& rng) {
    double lim = 1.0 / std::sqrt(static_cast<double>(group_of_fan_in(group)));
    size_t off = group_offsets_[group];
    for (size_t i = 0; i < group_sizes_[group]; ++i) {
        params_[off + i] = rng.uniform(-lim, lim);
    }
}

std::pair<size_t, size_t> Network::layer_span(size_t group) const {
    if (group >= group_offsets_.size()) {
        throw ValidationError("layer_span: group " + std::to_string(group) + " out of range");
    }
    return {group_offsets_[group], group_sizes_[group]};
}

size_t Network::log_std_offset() const {
    if (!layout_.policy_log_std) {
        throw ValidationError("log_std_offset: layout has no log-std block");
    }
    return params_.size() - layout_.out_dim;
}

void Network::reset_last_layers(size_t k, uint64_t seed) {
    if (k > group_sizes_.size()) {
        throw ValidationError("reset_last_layers: k=" + std::to_string(k) + " exceeds " +
                              std::to_string(group_sizes_.size()) + " layers");
    }
    if (k == 0) return;
    Rng rng(seed);
    for (size_t g = group_sizes_.size() - k; g < group_sizes_.size(); ++g) {
        fill_group(g, rng);
    }
}

namespace {

// y = W x + b with W row-major (rows x cols)
void affine(const double* w, const double* b, const double* x, double* y, size_t rows,
            size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w + r * cols;
        for (size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

} // namespace

std::vector<double> Network::forward(const FeatureMatrix& fm, const std::vector<double>& aux,
                                     Cache* cache) const {
    const size_t F = layout_.feature_dim;
    const size_t d = layout_.model_dim;
    const size_t H = layout_.heads;
    const size_t dh = d / H;
    const size_t hh = layout_.head_hidden;
    if (FeatureMatrix::kFeatures != F) {
        throw ValidationError("forward: feature width mismatch");
    }
    if (aux.size() != layout_.aux_dim) {
        throw ValidationError("forward: aux size " + std::to_string(aux.size()) + " != " +
                              std::to_string(layout_.aux_dim));
    }

    // canonical order over unmasked rows makes pooling sums independent of
    // input row order, bit for bit
    std::vector<size_t> order;
    for (size_t r = 0; r < fm.rows; ++r) {
        if (fm.mask[r]) order.push_back(r);
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        for (size_t f = 0; f < FeatureMatrix::kFeatures; ++f) {
            double va = fm.at(a, f);
            double vb = fm.at(b, f);
            if (va != vb) return va < vb;
        }
        return false;
    });
    const size_t n = order.size();

    Cache local;
    Cache& c = cache ? *cache : local;
    c = Cache{};
    c.order = order;
    c.aux = aux;

    c.input_rows.resize(n * F);
    for (size_t i = 0; i < n; ++i) {
        for (size_t f = 0; f < F; ++f) c.input_rows[i * F + f] = fm.at(order[i], f);
    }

    const double* wp = params_.data() + group_offsets_[0];
    const double* bp = wp + d * F;
    std::vector<double> x0(n * d);
    for (size_t i = 0; i < n; ++i) {
        affine(wp, bp, c.input_rows.data() + i * F, x0.data() + i * d, d, F);
        for (size_t j = 0; j < d; ++j) x0[i * d + j] = std::tanh(x0[i * d + j]);
    }
    c.x.push_back(std::move(x0));

    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (size_t layer = 0; layer < layout_.attn_layers; ++layer) {
        const double* base = params_.data() + group_offsets_[1 + layer];
        const double* wq = base;
        const double* bq = wq + d * d;
        const double* wk = bq + d;
        const double* bk = wk + d * d;
        const double* wv = bk + d;
        const double* bv = wv + d * d;
        const double* wo = bv + d;
        const double* bo = wo + d * d;

        const std::vector<double>& X = c.x.back();
        Cache::AttnCache ac;
        ac.q.resize(n * d);
        ac.k.resize(n * d);
        ac.v.resize(n * d);
        for (size_t i = 0; i < n; ++i) {
            affine(wq, bq, X.data() + i * d, ac.q.data() + i * d, d, d);
            affine(wk, bk, X.data() + i * d, ac.k.data() + i * d, d, d);
            affine(wv, bv, X.data() + i * d, ac.v.data() + i * d, d, d);
        }
        ac.attn.assign(H * n * n, 0.0);
        ac.concat.assign(n * d, 0.0);
        for (size_t h = 0; h < H; ++h) {
            size_t oh = h * dh;
            for (size_t i = 0; i < n; ++i) {
                double* row = ac.attn.data() + (h * n + i) * n;
                double mx = -std::numeric_limits<double>::infinity();
                for (size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (size_t k = 0; k < dh; ++k) {
                        s += ac.q[i * d + oh + k] * ac.k[j * d + oh + k];
                    }
                    row[j] = s * scale;
                    mx = std::max(mx, row[j]);
                }
                double denom = 0.0;
                for (size_t j = 0; j < n; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    denom += row[j];
                }
                for (size_t j = 0; j < n; ++j) row[j] /= denom;
                for (size_t k = 0; k < dh; ++k) {
                    double acc = 0.0;
                    for (size_t j = 0; j < n; ++j) acc += row[j] * ac.v[j * d + oh + k];
                    ac.concat[i * d + oh + k] = acc;
                }
            }
        }
        ac.pre.resize(n * d);
        std::vector<double> y(n * d);
        for (size_t i = 0; i < n; ++i) {
            affine(wo, bo, ac.concat.data() + i * d, ac.pre.data() + i * d, d, d);
            for (size_t j = 0; j < d; ++j) {
                ac.pre[i * d + j] += X[i * d + j];
                y[i * d + j] = std::tanh(ac.pre[i * d + j]);
            }
        }
        c.attn.push_back(std::move(ac));
        c.x.push_back(std::move(y));
    }

    c.pooled.assign(d, 0.0);
    if (n > 0) {
        const std::vector<double>& last = c.x.back();
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) c.pooled[j] += last[i * d + j];
        }
        for (size_t j = 0; j < d; ++j) c.pooled[j] /= static_cast<double>(n);
    }

    std::vector<double> head_in(d + layout_.aux_dim);
    std::copy(c.pooled.begin(), c.pooled.end(), head_in.begin());
    std::copy(aux.begin(), aux.end(), head_in.begin() + static_cast<long>(d));

    const double* w1 = params_.data() + group_offsets_[1 + layout_.attn_layers];
    const double* b1 = w1 + hh * head_in.size();
    c.h1.resize(hh);
    affine(w1, b1, head_in.data(), c.h1.data(), hh, head_in.size());
    for (double& v : c.h1) v = std::tanh(v);

    const double* w2 = params_.data() + group_offsets_[2 + layout_.attn_layers];
    const double* b2 = w2 + hh * hh;
    c.h2.resize(hh);
    affine(w2, b2, c.h1.data(), c.h2.data(), hh, hh);
    for (double& v : c.h2) v = std::tanh(v);

    const double* w3 = params_.data() + group_offsets_[3 + layout_.attn_layers];
    const double* b3 = w3 + layout_.out_dim * hh;
    c.out.resize(layout_.out_dim);
    affine(w3, b3, c.h2.data(), c.out.data(), layout_.out_dim, hh);

    for (double v : c.out) {
        if (!std::isfinite(v)) throw ValidationError("forward: non-finite network output");
    }
    c.valid = true;
    return c.out;
}

std::vector<double> Network::backward(const Cache& c, const std::vector<double>& d_out) const {
    if (!c.valid) throw ValidationError("backward: no forward cache");
    if (d_out.size() != layout_.out_dim) {
        throw ValidationError("backward: upstream gradient size mismatch");
    }
    const size_t F = layout_.feature_dim;
    const size_t d = layout_.model_dim;
    const size_t H = layout_.heads;
    const size_t dh = d / H;
    const size_t hh = layout_.head_hidden;
    const size_t n = c.order.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<double> grads(params_.size(), 0.0);

    // output layer
    {
        double* gw3 = grads.data() + group_offsets_[3 + layout_.attn_layers];
        double* gb3 = gw3 + layout_.out_dim * hh;
        std::vector<double> dh2(hh, 0.0);
        const double* w3 = params_.data() + group_offsets_[3 + layout_.attn_layers];
        for (size_t o = 0; o < layout_.out_dim; ++o) {
            for (size_t k = 0; k < hh; ++k) {
                gw3[o * hh + k] += d_out[o] * c.h2[k];
                dh2[k] += d_out[o] * w3[o * hh + k];
            }
            gb3[o] += d_out[o];
        }
        // second head layer
        std::vector<double> dpre2(hh);
        for (size_t k = 0; k < hh; ++k) dpre2[k] = dh2[k] * (1.0 - c.h2[k] * c.h2[k]);
        double* gw2 = grads.data() + group_offsets_[2 + layout_.attn_layers];
        double* gb2 = gw2 + hh * hh;
        const double* w2 = params_.data() + group_offsets_[2 + layout_.attn_layers];
        std::vector<double> dh1(hh, 0.0);
        for (size_t i = 0; i < hh; ++i) {
            for (size_t j = 0; j < hh; ++j) {
                gw2[i * hh + j] += dpre2[i] * c.h1[j];
                dh1[j] += dpre2[i] * w2[i * hh + j];
            }
            gb2[i] += dpre2[i];
        }
        // first head layer
        size_t head_in_size = d + layout_.aux_dim;
        std::vector<double> head_in(head_in_size);
        std::copy(c.pooled.begin(), c.pooled.end(), head_in.begin());
        std::copy(c.aux.begin(), c.aux.end(), head_in.begin() + static_cast<long>(d));
        std::vector<double> dpre1(hh);
        for (size_t k = 0; k < hh; ++k) dpre1[k] = dh1[k] * (1.0 - c.h1[k] * c.h1[k]);
        double* gw1 = grads.data() + group_offsets_[1 + layout_.attn_layers];
        double* gb1 = gw1 + hh * head_in_size;
        const double* w1 = params_.data() + group_offsets_[1 + layout_.attn_layers];
        std::vector<double> dpooled(d, 0.0);
        for (size_t i = 0; i < hh; ++i) {
            for (size_t j = 0; j < head_in_size; ++j) {
                gw1[i * head_in_size + j] += dpre1[i] * head_in[j];
                if (j < d) dpooled[j] += dpre1[i] * w1[i * head_in_size + j];
            }
            gb1[i] += dpre1[i];
        }

        if (n == 0) return grads;

        // pooling
        std::vector<double> dx(n * d);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) {
                dx[i * d + j] = dpooled[j] / static_cast<double>(n);
            }
        }

        // attention layers, last to first
        for (size_t layer = layout_.attn_layers; layer-- > 0;) {
            const Cache::AttnCache& ac = c.attn[layer];
            const std::vector<double>& X = c.x[layer];
            const std::vector<double>& Y = c.x[layer + 1];
            const double* base = params_.data() + group_offsets_[1 + layer];
            const double* wq = base;
            const double* wk = wq + d * d + d;
            const double* wv = wk + d * d + d;
            const double* wo = wv + d * d + d;
            double* gbase = grads.data() + group_offsets_[1 + layer];
            double* gwq = gbase;
            double* gbq = gwq + d * d;
            double* gwk = gbq + d;
            double* gbk = gwk + d * d;
            double* gwv = gbk + d;
            double* gbv = gwv + d * d;
            double* gwo = gbv + d;
            double* gbo = gwo + d * d;

            std::vector<double> dpre(n * d);
            for (size_t i = 0; i < n * d; ++i) dpre[i] = dx[i] * (1.0 - Y[i] * Y[i]);

            std::vector<double> dx_next(n * d);
            // residual branch
            std::copy(dpre.begin(), dpre.end(), dx_next.begin());

            // output projection
            std::vector<double> dconcat(n * d, 0.0);
            for (size_t i = 0; i < n; ++i) {
                const double* dp = dpre.data() + i * d;
                const double* cc = ac.concat.data() + i * d;
                for (size_t j = 0; j < d; ++j) {
                    for (size_t k = 0; k < d; ++k) {
                        gwo[j * d + k] += dp[j] * cc[k];
                        dconcat[i * d + k] += dp[j] * wo[j * d + k];
                    }
                    gbo[j] += dp[j];
                }
            }

            std::vector<double> dq(n * d, 0.0);
            std::vector<double> dk(n * d, 0.0);
            std::vector<double> dv(n * d, 0.0);
            std::vector<double> da(n), ds(n);
            for (size_t h = 0; h < H; ++h) {
                size_t oh = h * dh;
                for (size_t i = 0; i < n; ++i) {
                    const double* arow = ac.attn.data() + (h * n + i) * n;
                    // dA and dV from concat = A * V
                    double dot = 0.0;
                    for (size_t j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (size_t k = 0; k < dh; ++k) {
                            acc += dconcat[i * d + oh + k] * ac.v[j * d + oh + k];
                            dv[j * d + oh + k] += arow[j] * dconcat[i * d + oh + k];
                        }
                        da[j] = acc;
                        dot += acc * arow[j];
                    }
                    // softmax jacobian
                    for (size_t j = 0; j < n; ++j) ds[j] = arow[j] * (da[j] - dot);
                    for (size_t j = 0; j < n; ++j) {
                        double dsj = ds[j] * scale;
                        for (size_t k = 0; k < dh; ++k) {
                            dq[i * d + oh + k] += dsj * ac.k[j * d + oh + k];
                            dk[j * d + oh + k] += dsj * ac.q[i * d + oh + k];
                        }
                    }
                }
            }

            // input projections q/k/v
            auto back_proj = [&](const std::vector<double>& dout_rows, const double* w, double* gw,
                                 double* gb) {
                for (size_t i = 0; i < n; ++i) {
                    const double* dr = dout_rows.data() + i * d;
                    const double* xi = X.data() + i * d;
                    for (size_t j = 0; j < d; ++j) {
                        for (size_t k = 0; k < d; ++k) {
                            gw[j * d + k] += dr[j] * xi[k];
                            dx_next[i * d + k] += dr[j] * w[j * d + k];
                        }
                        gb[j] += dr[j];
                    }
                }
            };
            back_proj(dq, wq, gwq, gbq);
            back_proj(dk, wk, gwk, gbk);
            back_proj(dv, wv, gwv, gbv);

            dx = std::move(dx_next);
        }

        // per-vehicle projection
        const std::vector<double>& X0 = c.x[0];
        double* gwp = grads.data() + group_offsets_[0];
        double* gbp = gwp + d * F;
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) {
                double dpre0 = dx[i * d + j] * (1.0 - X0[i * d + j] * X0[i * d + j]);
                for (size_t f = 0; f < F; ++f) {
                    gwp[j * F + f] += dpre0 * c.input_rows[i * F + f];
                }
                gbp[j] += dpre0;
            }
        }
    }
    return grads;
}

NetworkLayout policy_layout(size_t model_dim, size_t heads, size_t attn_layers,
                            size_t head_hidden, size_t max_vehicles) {
    NetworkLayout l;
    l.model_dim = model_dim;
    l.heads = heads;
    l.attn_layers = attn_layers;
    l.head_hidden = head_hidden;
    l.max_vehicles = max_vehicles;
    l.out_dim = 2;
    l.policy_log_std = true;
    return l;
}

NetworkLayout value_layout(size_t model_dim, size_t heads, size_t attn_layers, size_t head_hidden,
                           size_t max_vehicles) {
    NetworkLayout l = policy_layout(model_dim, heads, attn_layers, head_hidden, max_vehicles);
    l.out_dim = 1;
    l.policy_log_std = false;
    return l;
}

NetworkLayout disc_layout(size_t model_dim, size_t heads, size_t attn_layers, size_t head_hidden,
                          size_t max_vehicles) {
    NetworkLayout l = value_layout(model_dim, heads, attn_layers, head_hidden, max_vehicles);
    l.aux_dim = 2; // action appended to the pooled embedding
    return l;
}

ActionDistribution forward_policy(const Network& net, const FeatureMatrix& fm,
                                  Network::Cache* cache) {
    ActionDistribution dist;
    dist.mean = net.forward(fm, {}, cache);
    size_t off = net.log_std_offset();
    dist.log_std.resize(dist.mean.size());
    for (size_t i = 0; i < dist.mean.size(); ++i) {
        dist.log_std[i] = std::clamp(net.params()[off + i], ActionDistribution::kLogStdMin,
                                     ActionDistribution::kLogStdMax);
    }
    return dist;
}

double forward_value(const Network& net, const FeatureMatrix& fm, Network::Cache* cache) {
    return net.forward(fm, {}, cache)[0];
}

double forward_disc(const Network& net, const FeatureMatrix& fm, const Action& a,
                    Network::Cache* cache) {
    Action cl = clamp_action(a);
    double logit = net.forward(fm, {cl.accel, cl.steer}, cache)[0];
    double p;
    if (logit >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-logit));
    } else {
        double e = std::exp(logit);
        p = e / (1.0 + e);
    }
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

Action squash_action(const std::vector<double>& z) {
    Action a;
    a.accel = Action::kMaxAccel * std::tanh(z.at(0));
    a.steer = Action::kMaxSteer * std::tanh(z.at(1));
    return a;
}

double gaussian_log_prob(const ActionDistribution& dist, const std::vector<double>& z) {
    constexpr double kLog2Pi = 1.8378770664093453;
    double lp = 0.0;
    for (size_t i = 0; i < dist.mean.size(); ++i) {
        double sigma = std::exp(dist.log_std[i]);
        double u = (z[i] - dist.mean[i]) / sigma;
        lp += -0.5 * u * u - dist.log_std[i] - 0.5 * kLog2Pi;
    }
    return lp;
}

double squashed_log_prob(const ActionDistribution& dist, const std::vector<double>& z) {
    static const double bounds[2] = {Action::kMaxAccel, Action::kMaxSteer};
    double lp = gaussian_log_prob(dist, z);
    for (size_t i = 0; i < z.size(); ++i) {
        // log(1 - tanh(z)^2) = 2 (log 2 - z - softplus(-2z))
        double softplus = z[i] * -2.0;
        softplus = softplus > 30.0 ? softplus : std::log1p(std::exp(softplus));
        double log_dtanh = 2.0 * (std::log(2.0) - z[i] - softplus);
        lp -= std::log(bounds[i]) + log_dtanh;
    }
    return lp;
}

double dist_entropy(const ActionDistribution& dist) {
    constexpr double kLog2PiE = 2.8378770664093453;
    double h = 0.0;
    for (double ls : dist.log_std) h += ls + 0.5 * kLog2PiE;
    return h;
}

namespace {

void hex_encode_doubles(const std::vector<double>& v, std::string& out) {
    static const char* digits = "0123456789abcdef";
    out.reserve(out.size() + v.size() * 16);
    for (double x : v) {
        uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        for (int shift = 60; shift >= 0; shift -= 4) {
            out.push_back(digits[(bits >> shift) & 0xF]);
        }
    }
}

std::vector<double> hex_decode_doubles(const std::string& s) {
    if (s.size() % 16 != 0) throw ArtifactError("checkpoint: parameter hex length invalid");
    std::vector<double> out(s.size() / 16);
    for (size_t i = 0; i < out.size(); ++i) {
        uint64_t bits = 0;
        for (size_t j = 0; j < 16; ++j) {
            char ch = s[i * 16 + j];
            uint64_t nib;
            if (ch >= '0' && ch <= '9') {
                nib = static_cast<uint64_t>(ch - '0');
            } else if (ch >= 'a' && ch <= 'f') {
                nib = static_cast<uint64_t>(ch - 'a' + 10);
            } else {
                throw ArtifactError("checkpoint: invalid hex digit in parameters");
            }
            bits = (bits << 4) | nib;
        }
        std::memcpy(&out[i], &bits, sizeof(double));
    }
    return out;
}

ordered_json layout_to_json(const NetworkLayout& l) {
    ordered_json j;
    j["feature_dim"] = l.feature_dim;
    j["max_vehicles"] = l.max_vehicles;
    j["model_dim"] = l.model_dim;
    j["heads"] = l.heads;
    j["attn_layers"] = l.attn_layers;
    j["head_hidden"] = l.head_hidden;
    j["aux_dim"] = l.aux_dim;
    j["out_dim"] = l.out_dim;
    j["policy_log_std"] = l.policy_log_std;
    return j;
}

NetworkLayout layout_from_json(const ordered_json& j) {
    NetworkLayout l;
    l.feature_dim = j.at("feature_dim").get<size_t>();
    l.max_vehicles = j.at("max_vehicles").get<size_t>();
    l.model_dim = j.at("model_dim").get<size_t>();
    l.heads = j.at("heads").get<size_t>();
    l.attn_layers = j.at("attn_layers").get<size_t>();
    l.head_hidden = j.at("head_hidden").get<size_t>();
    l.aux_dim = j.at("aux_dim").get<size_t>();
    l.out_dim = j.at("out_dim").get<size_t>();
    l.policy_log_std = j.at("policy_log_std").get<bool>();
    return l;
}

} // namespace

std::string network_to_json(const Network& net) {
    ordered_json j;
    j["format_version"] = 1;
    j["layout"] = layout_to_json(net.layout());
    j["seed"] = net.init_seed();
    std::string hex;
    hex_encode_doubles(net.params(), hex);
    j["params"] = std::move(hex);
    return j.dump();
}

Network network_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw ArtifactError("checkpoint: unsupported network format_version");
        }
        NetworkLayout layout = layout_from_json(j.at("layout"));
        uint64_t seed = j.at("seed").get<uint64_t>();
        std::vector<double> params = hex_decode_doubles(j.at("params").get<std::string>());
        Network net(layout, seed);
        if (params.size() != net.param_count()) {
            throw ArtifactError("checkpoint: parameter count does not match layout");
        }
        net.params() = std::move(params);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError(std::string("checkpoint: missing field: ") + e.what());
    } catch (const ValidationError& e) {
        throw ArtifactError(std::string("checkpoint: invalid layout: ") + e.what());
    }
}

Adam::Adam(size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ValidationError("optimizer: size mismatch");
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void Adam::zero_slice(size_t offset, size_t length) {
    if (offset + length > m_.size()) throw ValidationError("optimizer: slice out of range");
    std::fill(m_.begin() + static_cast<long>(offset),
              m_.begin() + static_cast<long>(offset + length), 0.0);
    std::fill(v_.begin() + static_cast<long>(offset),
              v_.begin() + static_cast<long>(offset + length), 0.0);
}

void clip_grad_norm(std::vector<double>& grads, double max_norm) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double s = max_norm / norm;
        for (double& g : grads) g *= s;
    }
}

} // namespace scgen
