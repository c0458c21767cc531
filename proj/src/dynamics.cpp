#include "pessimlab/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>

#include <json.hpp>

namespace pessimlab {

using nlohmann::json;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double swish(double z) { return z * sigmoid(z); }

double swish_grad(double z) {
    const double s = sigmoid(z);
    return s * (1.0 + z * (1.0 - s));
}

// Smooth saturation of the raw log-variance head into (min, max), with a hard
// clamp absorbing the softplus overshoot at the top end.
double clamp_logvar(double raw, double lo, double hi) {
    double lv = hi - softplus(hi - raw);
    lv = lo + softplus(lv - lo);
    return clip(lv, lo, hi);
}

double clamp_logvar_grad(double raw, double lo, double hi) {
    const double lv1 = hi - softplus(hi - raw);
    const double lv2 = lo + softplus(lv1 - lo);
    if (lv2 < lo || lv2 > hi) return 0.0;
    return sigmoid(hi - raw) * sigmoid(lv1 - lo);
}

struct LayerView {
    std::size_t w_offset = 0;
    std::size_t b_offset = 0;
    int in = 0;
    int out = 0;
};

std::vector<LayerView> layer_views(const std::vector<int>& sizes) {
    std::vector<LayerView> views;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        LayerView v;
        v.in = sizes[l];
        v.out = sizes[l + 1];
        v.w_offset = offset;
        offset += static_cast<std::size_t>(v.in) * v.out;
        v.b_offset = offset;
        offset += v.out;
        views.push_back(v);
    }
    return views;
}

}  // namespace

void ModelConfig::validate() const {
    if (n_elite < 1 || n_elite > n_total || n_total > 15)
        throw ValidationError("require 1 <= n_elite <= n_total <= 15");
    if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
        throw ValidationError("validation_fraction must be in (0, 0.5)");
    if (!(logvar_min < logvar_max)) throw ValidationError("logvar_min must be < logvar_max");
    if (hidden_sizes.empty()) throw ValidationError("need at least one hidden layer");
    for (int h : hidden_sizes)
        if (h < 1) throw ValidationError("hidden size must be >= 1");
    if (epochs < 1 || batch_size < 1) throw ValidationError("epochs and batch_size must be >= 1");
    if (!weight_decay.empty() && weight_decay.size() != hidden_sizes.size() + 1)
        throw ValidationError("weight_decay needs one entry per linear layer");
}

std::vector<double> ModelConfig::resolved_weight_decay() const {
    if (!weight_decay.empty()) return weight_decay;
    return std::vector<double>(hidden_sizes.size() + 1, 1e-4);
}

Mlp Mlp::create(const std::vector<int>& sizes, Rng& init_rng) {
    Mlp net;
    net.layer_sizes = sizes;
    const auto views = layer_views(sizes);
    std::size_t count = 0;
    for (const auto& v : views) count += static_cast<std::size_t>(v.in) * v.out + v.out;
    net.params.assign(count, 0.0);
    for (const auto& v : views) {
        const double limit = std::sqrt(6.0 / (v.in + v.out));
        for (int i = 0; i < v.in * v.out; ++i)
            net.params[v.w_offset + i] = init_rng.uniform(-limit, limit);
        // biases stay zero
    }
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t count = 0;
    for (const auto& v : layer_views(layer_sizes)) count += static_cast<std::size_t>(v.in) * v.out + v.out;
    return count;
}

Vec Mlp::forward(const Vec& input) const {
    const auto views = layer_views(layer_sizes);
    Vec x = input;
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        Vec z(v.out);
        for (int o = 0; o < v.out; ++o) {
            double acc = params[v.b_offset + o];
            const double* w = &params[v.w_offset + static_cast<std::size_t>(o) * v.in];
            for (int i = 0; i < v.in; ++i) acc += w[i] * x[i];
            z[o] = acc;
        }
        if (l + 1 < views.size())
            for (double& val : z) val = swish(val);
        x = std::move(z);
    }
    return x;
}

namespace {

// Forward pass keeping pre-activations for backprop.
struct ForwardCache {
    std::vector<Vec> activations;  // x_0 (input) .. x_L (raw output)
    std::vector<Vec> pre_acts;     // z per layer
};

ForwardCache forward_cached(const Mlp& net, const Vec& input) {
    const auto views = layer_views(net.layer_sizes);
    ForwardCache cache;
    cache.activations.push_back(input);
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        Vec z(v.out);
        const Vec& x = cache.activations.back();
        for (int o = 0; o < v.out; ++o) {
            double acc = net.params[v.b_offset + o];
            const double* w = &net.params[v.w_offset + static_cast<std::size_t>(o) * v.in];
            for (int i = 0; i < v.in; ++i) acc += w[i] * x[i];
            z[o] = acc;
        }
        cache.pre_acts.push_back(z);
        if (l + 1 < views.size())
            for (double& val : z) val = swish(val);
        cache.activations.push_back(std::move(z));
    }
    return cache;
}

struct LossTerms {
    double nll_sum = 0.0;            // summed over samples
    std::vector<Vec> d_raw_outputs;  // dNLL/d(raw output) per sample, unscaled
};

LossTerms nll_terms(const Mlp& net, const NllBatch& batch, const ModelConfig& cfg, bool want_grad,
                    std::vector<ForwardCache>* caches) {
    const std::size_t d_out = batch.targets.front().size();
    LossTerms terms;
    for (std::size_t s = 0; s < batch.inputs.size(); ++s) {
        ForwardCache cache = forward_cached(net, batch.inputs[s]);
        const Vec& raw = cache.activations.back();
        const Vec& target = batch.targets[s];
        Vec d_raw(want_grad ? raw.size() : 0, 0.0);
        for (std::size_t d = 0; d < d_out; ++d) {
            const double mu = raw[d];
            const double raw_lv = raw[d_out + d];
            const double lv = clamp_logvar(raw_lv, cfg.logvar_min, cfg.logvar_max);
            const double inv_var = std::exp(-lv);
            const double resid = target[d] - mu;
            terms.nll_sum += 0.5 * (kLog2Pi + lv + resid * resid * inv_var);
            if (want_grad) {
                d_raw[d] = -resid * inv_var;
                d_raw[d_out + d] = 0.5 * (1.0 - resid * resid * inv_var) *
                                   clamp_logvar_grad(raw_lv, cfg.logvar_min, cfg.logvar_max);
            }
        }
        if (want_grad) {
            terms.d_raw_outputs.push_back(std::move(d_raw));
            caches->push_back(std::move(cache));
        }
    }
    return terms;
}

double weight_decay_term(const Mlp& net, const ModelConfig& cfg) {
    const auto views = layer_views(net.layer_sizes);
    const auto wd = cfg.resolved_weight_decay();
    double total = 0.0;
    for (std::size_t l = 0; l < views.size(); ++l) {
        if (wd[l] == 0.0) continue;
        const auto& v = views[l];
        double sq = 0.0;
        for (int i = 0; i < v.in * v.out; ++i) {
            const double w = net.params[v.w_offset + i];
            sq += w * w;
        }
        total += wd[l] * sq;
    }
    return total;
}

}  // namespace

double nll_loss(const Mlp& member, const NllBatch& batch, const ModelConfig& cfg) {
    if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size())
        throw ValidationError("empty or mismatched batch");
    const LossTerms terms = nll_terms(member, batch, cfg, false, nullptr);
    const double loss = terms.nll_sum / static_cast<double>(batch.inputs.size()) +
                        weight_decay_term(member, cfg);
    if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss");
    return loss;
}

Vec nll_gradient(const Mlp& member, const NllBatch& batch, const ModelConfig& cfg) {
    if (batch.inputs.empty() || batch.inputs.size() != batch.targets.size())
        throw ValidationError("empty or mismatched batch");
    const auto views = layer_views(member.layer_sizes);
    std::vector<ForwardCache> caches;
    caches.reserve(batch.inputs.size());
    LossTerms terms = nll_terms(member, batch, cfg, true, &caches);

    Vec grad(member.params.size(), 0.0);
    const double scale = 1.0 / static_cast<double>(batch.inputs.size());
    for (std::size_t s = 0; s < batch.inputs.size(); ++s) {
        const ForwardCache& cache = caches[s];
        Vec delta = terms.d_raw_outputs[s];  // gradient wrt layer output
        for (std::size_t li = views.size(); li-- > 0;) {
            const auto& v = views[li];
            const Vec& x = cache.activations[li];
            for (int o = 0; o < v.out; ++o) {
                const double d = delta[o] * scale;
                grad[v.b_offset + o] += d;
                double* gw = &grad[v.w_offset + static_cast<std::size_t>(o) * v.in];
                for (int i = 0; i < v.in; ++i) gw[i] += d * x[i];
            }
            if (li == 0) break;
            Vec prev(v.in, 0.0);
            for (int i = 0; i < v.in; ++i) {
                double acc = 0.0;
                for (int o = 0; o < v.out; ++o)
                    acc += delta[o] * member.params[v.w_offset + static_cast<std::size_t>(o) * v.in + i];
                prev[i] = acc * swish_grad(cache.pre_acts[li - 1][i]);
            }
            delta = std::move(prev);
        }
    }
    const auto wd = cfg.resolved_weight_decay();
    for (std::size_t l = 0; l < views.size(); ++l) {
        if (wd[l] == 0.0) continue;
        const auto& v = views[l];
        for (int i = 0; i < v.in * v.out; ++i)
            grad[v.w_offset + i] += 2.0 * wd[l] * member.params[v.w_offset + i];
    }
    return grad;
}

namespace {

struct Adam {
    Vec m, v;
    int t = 0;
    double lr;
    static constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    explicit Adam(std::size_t n, double learning_rate) : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}

    void step(Vec& params, const Vec& grad) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

std::vector<int> full_layer_sizes(const ModelConfig& cfg, std::size_t d_in, std::size_t d_out) {
    std::vector<int> sizes{static_cast<int>(d_in)};
    sizes.insert(sizes.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
    sizes.push_back(static_cast<int>(2 * d_out));
    return sizes;
}

double validation_mse(const Mlp& net, const NllBatch& val) {
    const std::size_t d_out = val.targets.front().size();
    double total = 0.0;
    for (std::size_t s = 0; s < val.inputs.size(); ++s) {
        const Vec out = net.forward(val.inputs[s]);
        double sq = 0.0;
        for (std::size_t d = 0; d < d_out; ++d) {
            const double r = out[d] - val.targets[s][d];
            sq += r * r;
        }
        total += sq / static_cast<double>(d_out);
    }
    return total / static_cast<double>(val.inputs.size());
}

}  // namespace

std::vector<std::size_t> EnsembleModel::elite_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < elite_mask.size(); ++i)
        if (elite_mask[i]) idx.push_back(i);
    return idx;
}

EnsembleModel train_ensemble(const Dataset& ds, const ModelConfig& cfg, int workers) {
    cfg.validate();
    if (ds.size() < 10) throw ValidationError("dataset too small to train (need J >= 10)");
    if (workers <= 0) workers = default_workers();

    const std::size_t d_s = ds.state_dim();
    const std::size_t d_a = ds.action_dim();
    const std::size_t d_out = d_s + 1;

    NllBatch all;
    all.inputs.reserve(ds.size());
    all.targets.reserve(ds.size());
    for (const Transition& tr : ds.transitions) {
        all.inputs.push_back(normalize_input(ds.norm, tr.state, tr.action));
        Vec target(d_out);
        for (std::size_t i = 0; i < d_s; ++i) target[i] = tr.next_state[i] - tr.state[i];
        target[d_s] = tr.reward;
        all.targets.push_back(std::move(target));
    }

    // Shared validation split across members; members differ only in
    // initialization and minibatch ordering.
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng split_rng(mix_seed(cfg.seed, 0x5917));
    split_rng.shuffle(perm);
    const std::size_t n_val =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ds.size() * cfg.validation_fraction)));
    if (n_val >= ds.size()) throw ValidationError("dataset too small for validation split");
    std::vector<std::size_t> train_idx(perm.begin(), perm.end() - n_val);
    std::vector<std::size_t> val_idx(perm.end() - n_val, perm.end());

    NllBatch val;
    for (std::size_t i : val_idx) {
        val.inputs.push_back(all.inputs[i]);
        val.targets.push_back(all.targets[i]);
    }

    EnsembleModel model;
    model.config = cfg;
    model.d_s = d_s;
    model.d_a = d_a;
    model.norm = ds.norm;
    model.train_env_id = ds.meta.env_id;
    model.train_tier = ds.meta.tier;
    model.train_seed = ds.meta.seed;
    model.members.resize(cfg.n_total);
    model.train_meta.validation_mse.assign(cfg.n_total, 0.0);
    model.train_meta.epochs_run = cfg.epochs;

    const auto sizes = full_layer_sizes(cfg, d_s + d_a, d_out);
    std::string failure;
    std::mutex failure_mutex;

    parallel_for(static_cast<std::size_t>(cfg.n_total), workers, [&](std::size_t member) {
        try {
            Rng init_rng(mix_seed(cfg.seed, 0x11a0 + member));
            Mlp net = Mlp::create(sizes, init_rng);
            Adam opt(net.params.size(), cfg.learning_rate);
            Rng shuffle_rng(mix_seed(cfg.seed, 0x22b0 + member));
            std::vector<std::size_t> order = train_idx;
            NllBatch batch;
            for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
                shuffle_rng.shuffle(order);
                for (std::size_t start = 0; start < order.size();
                     start += static_cast<std::size_t>(cfg.batch_size)) {
                    const std::size_t stop =
                        std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                    batch.inputs.clear();
                    batch.targets.clear();
                    for (std::size_t k = start; k < stop; ++k) {
                        batch.inputs.push_back(all.inputs[order[k]]);
                        batch.targets.push_back(all.targets[order[k]]);
                    }
                    const Vec grad = nll_gradient(net, batch, cfg);
                    if (!all_finite(grad))
                        throw std::runtime_error("non-finite loss gradient in member " +
                                                 std::to_string(member) + " epoch " +
                                                 std::to_string(epoch));
                    opt.step(net.params, grad);
                }
            }
            if (!all_finite(net.params))
                throw std::runtime_error("non-finite parameters in member " + std::to_string(member));
            model.train_meta.validation_mse[member] = validation_mse(net, val);
            model.members[member] = std::move(net);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (failure.empty()) failure = e.what();
        }
    });
    if (!failure.empty()) throw std::runtime_error(failure);

    // Elites: lowest validation MSE, ties broken by member index.
    std::vector<std::size_t> order(model.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.train_meta.validation_mse[a] < model.train_meta.validation_mse[b];
    });
    model.elite_mask.assign(model.members.size(), false);
    for (int k = 0; k < cfg.n_elite; ++k) model.elite_mask[order[k]] = true;
    return model;
}

DiagonalGaussian predict_member(const EnsembleModel& model, std::size_t member, const Vec& state,
                                const Vec& action) {
    if (!all_finite(state) || !all_finite(action)) throw ValidationError("non-finite input");
    const Vec input = normalize_input(model.norm, state, action);
    const Vec raw = model.members[member].forward(input);
    const std::size_t d_out = model.output_dim();
    DiagonalGaussian g;
    g.mean.resize(d_out);
    g.var.resize(d_out);
    for (std::size_t d = 0; d < model.d_s; ++d) g.mean[d] = state[d] + raw[d];
    g.mean[model.d_s] = raw[model.d_s];
    for (std::size_t d = 0; d < d_out; ++d)
        g.var[d] = std::exp(clamp_logvar(raw[d_out + d], model.config.logvar_min, model.config.logvar_max));
    return g;
}

EnsemblePrediction predict(const EnsembleModel& model, const Vec& state, const Vec& action) {
    EnsemblePrediction pred;
    pred.members.reserve(model.members.size());
    for (std::size_t i = 0; i < model.members.size(); ++i)
        pred.members.push_back(predict_member(model, i, state, action));
    pred.elite_mask = model.elite_mask;
    return pred;
}

SampleResult sample_next(const EnsembleModel& model, const Vec& state, const Vec& action, Rng& rng) {
    const auto elites = model.elite_indices();
    if (elites.empty()) throw ValidationError("model has no elites");
    const std::size_t member = elites[rng.index(elites.size())];
    const DiagonalGaussian g = predict_member(model, member, state, action);
    SampleResult out;
    out.member_index = member;
    out.next_state.resize(model.d_s);
    Vec draw(g.mean.size());
    for (std::size_t d = 0; d < g.mean.size(); ++d)
        draw[d] = g.mean[d] + std::sqrt(g.var[d]) * rng.normal();
    for (std::size_t d = 0; d < model.d_s; ++d) out.next_state[d] = draw[d];
    out.reward = draw[model.d_s];
    return out;
}

namespace {

void append_le_double(std::string& buf, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t swapped = 0;
        for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xffULL) << (8 * (7 - i));
        bits = swapped;
    }
    char raw[8];
    std::memcpy(raw, &bits, 8);
    buf.append(raw, 8);
}

double read_le_double(const char* p) {
    std::uint64_t bits;
    std::memcpy(&bits, p, 8);
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t swapped = 0;
        for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xffULL) << (8 * (7 - i));
        bits = swapped;
    }
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

json config_to_json(const ModelConfig& cfg) {
    return json{{"n_total", cfg.n_total},
                {"n_elite", cfg.n_elite},
                {"hidden_sizes", cfg.hidden_sizes},
                {"learning_rate", cfg.learning_rate},
                {"weight_decay", cfg.weight_decay},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"logvar_min", cfg.logvar_min},
                {"logvar_max", cfg.logvar_max},
                {"validation_fraction", cfg.validation_fraction},
                {"seed", cfg.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.n_total = j.at("n_total").get<int>();
    cfg.n_elite = j.at("n_elite").get<int>();
    cfg.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.weight_decay = j.at("weight_decay").get<std::vector<double>>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.logvar_min = j.at("logvar_min").get<double>();
    cfg.logvar_max = j.at("logvar_max").get<double>();
    cfg.validation_fraction = j.at("validation_fraction").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

void save_model(const EnsembleModel& model, const std::string& path) {
    json header{{"format", "pessimlab-ensemble-v1"},
                {"config", config_to_json(model.config)},
                {"d_s", model.d_s},
                {"d_a", model.d_a},
                {"norm", {{"input_mean", model.norm.input_mean}, {"input_std", model.norm.input_std}}},
                {"train_meta",
                 {{"validation_mse", model.train_meta.validation_mse},
                  {"epochs_run", model.train_meta.epochs_run}}},
                {"elite_mask", std::vector<int>(model.elite_mask.begin(), model.elite_mask.end())},
                {"train_source",
                 {{"env_id", model.train_env_id}, {"tier", model.train_tier}, {"seed", model.train_seed}}},
                {"layer_sizes", model.members.empty() ? std::vector<int>{} : model.members.front().layer_sizes}};

    std::string blob = header.dump();
    blob.push_back('\n');
    for (const Mlp& member : model.members)
        for (double p : member.params) append_le_double(blob, p);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

EnsembleModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("missing file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw ValidationError("truncated checkpoint: " + path);
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "pessimlab-ensemble-v1")
        throw ValidationError("not a pessimlab checkpoint: " + path);

    EnsembleModel model;
    model.config = config_from_json(header.at("config"));
    model.d_s = header.at("d_s").get<std::size_t>();
    model.d_a = header.at("d_a").get<std::size_t>();
    model.norm.input_mean = header.at("norm").at("input_mean").get<Vec>();
    model.norm.input_std = header.at("norm").at("input_std").get<Vec>();
    model.train_meta.validation_mse = header.at("train_meta").at("validation_mse").get<Vec>();
    model.train_meta.epochs_run = header.at("train_meta").at("epochs_run").get<int>();
    const auto mask = header.at("elite_mask").get<std::vector<int>>();
    model.elite_mask.assign(mask.begin(), mask.end());
    model.train_env_id = header.at("train_source").at("env_id").get<std::string>();
    model.train_tier = header.at("train_source").at("tier").get<std::string>();
    model.train_seed = header.at("train_source").at("seed").get<std::uint64_t>();
    const auto sizes = header.at("layer_sizes").get<std::vector<int>>();

    Mlp proto;
    proto.layer_sizes = sizes;
    const std::size_t per_member = proto.param_count();
    std::string block((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (block.size() != per_member * 8 * static_cast<std::size_t>(model.config.n_total))
        throw ValidationError("checkpoint parameter block has wrong size: " + path);
    const char* p = block.data();
    for (int member = 0; member < model.config.n_total; ++member) {
        Mlp net;
        net.layer_sizes = sizes;
        net.params.resize(per_member);
        for (std::size_t i = 0; i < per_member; ++i, p += 8) net.params[i] = read_le_double(p);
        model.members.push_back(std::move(net));
    }
    return model;
}

}  // namespace pessimlab
