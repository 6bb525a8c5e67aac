#include "promptaug/probe.hpp"

#include "promptaug/error.hpp"
#include "promptaug/io.hpp"
#include "promptaug/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>

using nlohmann::json;

namespace promptaug::probe {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lr) || !positive(eps)) {
        throw ConfigError("train: lr and eps must be positive");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw ConfigError("train: weight_decay must be non-negative");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train: betas must lie in [0, 1)");
    }
    if (real_batch_cap == 0 || synthetic_batch == 0) {
        throw ConfigError("train: batch sizes must be positive");
    }
    if (patience < 1) {
        throw ConfigError("train: patience must be at least 1");
    }
    if (max_epochs < 1) {
        throw ConfigError("train: max_epochs must be at least 1");
    }
}

json to_json(const TrainConfig& cfg) {
    return {{"lr", cfg.lr},
            {"weight_decay", cfg.weight_decay},
            {"betas", {cfg.beta1, cfg.beta2}},
            {"eps", cfg.eps},
            {"real_batch_cap", cfg.real_batch_cap},
            {"synthetic_batch", cfg.synthetic_batch},
            {"patience", cfg.patience},
            {"max_epochs", cfg.max_epochs},
            {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.lr = j.value("lr", cfg.lr);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    if (j.contains("betas")) {
        cfg.beta1 = j["betas"].at(0).get<double>();
        cfg.beta2 = j["betas"].at(1).get<double>();
    }
    cfg.eps = j.value("eps", cfg.eps);
    cfg.real_batch_cap = j.value("real_batch_cap", cfg.real_batch_cap);
    cfg.synthetic_batch = j.value("synthetic_batch", cfg.synthetic_batch);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t classes,
                                   std::span<const std::size_t> labels) {
    const std::size_t batch = labels.size();
    if (classes == 0 || logits.size() != batch * classes) {
        throw DataError("cross-entropy: logits shape does not match labels");
    }
    if (batch == 0) {
        throw DataError("cross-entropy: empty batch");
    }
    CrossEntropy out;
    out.grad_logits.resize(logits.size());
    const double inv_batch = 1.0 / static_cast<double>(batch);
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        const auto row = logits.subspan(r * classes, classes);
        if (labels[r] >= classes) {
            throw DataError("cross-entropy: label " + std::to_string(labels[r]) + " out of range");
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (const double z : row) {
            if (!std::isfinite(z)) {
                throw DataError("cross-entropy: non-finite logit");
            }
            mx = std::max(mx, z);
        }
        double sum = 0.0;
        for (const double z : row) {
            sum += std::exp(z - mx);
        }
        const double log_sum = std::log(sum);
        total += log_sum - (row[labels[r]] - mx);
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(row[c] - mx - log_sum);
            out.grad_logits[r * classes + c] = (p - (c == labels[r] ? 1.0 : 0.0)) * inv_batch;
        }
    }
    out.loss = total * inv_batch;
    return out;
}

std::vector<double> LinearHead::logits(const Batch& batch) const {
    if (batch.d != d) {
        throw DataError("feature dimension " + std::to_string(batch.d) + " does not match model dimension " +
                        std::to_string(d));
    }
    std::vector<double> z(batch.size() * classes);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const double* x = batch.x.data() + r * d;
        for (std::size_t c = 0; c < classes; ++c) {
            const double* w = W.data() + c * d;
            double acc = b[c];
            for (std::size_t k = 0; k < d; ++k) {
                acc += w[k] * x[k];
            }
            z[r * classes + c] = acc;
        }
    }
    return z;
}

LossAndGrad ce_loss(const LinearHead& head, const Batch& batch) {
    const auto z = head.logits(batch);
    const auto ce = softmax_cross_entropy(z, head.classes, batch.y);
    LossAndGrad out{ce.loss, std::vector<double>(head.W.size(), 0.0), std::vector<double>(head.classes, 0.0)};
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const double* x = batch.x.data() + r * head.d;
        for (std::size_t c = 0; c < head.classes; ++c) {
            const double g = ce.grad_logits[r * head.classes + c];
            out.gb[c] += g;
            double* gw = out.gW.data() + c * head.d;
            for (std::size_t k = 0; k < head.d; ++k) {
                gw[k] += g * x[k];
            }
        }
    }
    return out;
}

LossAndGrad combined_loss(const LinearHead& head, const Batch& real, const Batch& synthetic) {
    if (real.size() == 0 || synthetic.size() == 0) {
        throw DataError("combined loss needs non-empty real and synthetic batches");
    }
    auto out = ce_loss(head, real);
    const auto syn = ce_loss(head, synthetic);
    out.loss += syn.loss;
    for (std::size_t i = 0; i < out.gW.size(); ++i) {
        out.gW[i] += syn.gW[i];
    }
    for (std::size_t i = 0; i < out.gb.size(); ++i) {
        out.gb[i] += syn.gb[i];
    }
    return out;
}

ProbeModel ProbeModel::from_head(const LinearHead& head, std::vector<StyleLabel> classes) {
    if (classes.size() != head.classes) {
        throw DataError("class list does not match the head");
    }
    ProbeModel m{std::move(classes), head.d, {}, {}};
    m.W.assign(head.W.begin(), head.W.end());
    m.b.assign(head.b.begin(), head.b.end());
    return m;
}

LinearHead ProbeModel::to_head() const {
    LinearHead head(classes.size(), d);
    head.W.assign(W.begin(), W.end());
    head.b.assign(b.begin(), b.end());
    return head;
}

namespace {

Batch to_batch(const embed::EmbeddingMatrix& m, const std::map<StyleLabel, std::size_t>& class_index,
               std::string_view what) {
    Batch batch;
    batch.d = m.d();
    batch.x.assign(m.data().begin(), m.data().end());
    batch.y.reserve(m.n());
    for (const auto& row : m.rows()) {
        const auto it = class_index.find(row.label);
        if (it == class_index.end()) {
            throw DataError(std::string(what) + " set contains style '" + row.label.str() +
                            "' that has no real training data");
        }
        batch.y.push_back(it->second);
    }
    return batch;
}

void gather(const Batch& from, std::span<const std::size_t> rows, Batch& into) {
    into.d = from.d;
    into.x.resize(rows.size() * from.d);
    into.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(from.x.begin() + static_cast<std::ptrdiff_t>(rows[i] * from.d), from.d,
                    into.x.begin() + static_cast<std::ptrdiff_t>(i * from.d));
        into.y[i] = from.y[rows[i]];
    }
}

} // namespace

TrainResult train_probe(const embed::EmbeddingMatrix& real, const embed::EmbeddingMatrix* synthetic,
                        const embed::EmbeddingMatrix& val, const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    if (real.empty()) {
        throw DataError("cannot train a probe without real training embeddings");
    }
    if (val.empty()) {
        throw DataError("cannot train a probe without validation embeddings");
    }
    if (val.d() != real.d() || (synthetic && !synthetic->empty() && synthetic->d() != real.d())) {
        throw DataError("real, synthetic and validation embeddings must share one dimension");
    }

    std::vector<StyleLabel> classes;
    for (const auto& row : real.rows()) {
        classes.push_back(row.label);
    }
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::map<StyleLabel, std::size_t> class_index;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        class_index[classes[i]] = i;
    }

    const Batch real_all = to_batch(real, class_index, "real");
    const Batch val_all = to_batch(val, class_index, "validation");
    const bool use_syn = synthetic && !synthetic->empty();
    const Batch syn_all = use_syn ? to_batch(*synthetic, class_index, "synthetic") : Batch{};

    LinearHead head(classes.size(), real.d());
    AdamWState w_state(head.W.size());
    AdamWState b_state(head.b.size());

    Rng shuffle_rng(derive_seed(cfg.seed, "probe/shuffle"));
    Rng syn_rng(derive_seed(cfg.seed, "probe/synthetic"));
    const std::size_t real_batch = std::min(cfg.real_batch_cap, real_all.size());

    std::vector<std::size_t> order(real_all.size());
    std::vector<std::size_t> syn_rows(cfg.synthetic_batch);
    Batch rb;
    Batch sb;

    TrainResult result;
    LinearHead best = head;
    EarlyStopper stopper(cfg.patience);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += real_batch) {
            const std::size_t count = std::min(real_batch, order.size() - start);
            gather(real_all, std::span(order).subspan(start, count), rb);
            LossAndGrad lg;
            if (use_syn) {
                for (auto& r : syn_rows) {
                    r = static_cast<std::size_t>(syn_rng.uniform(syn_all.size()));
                }
                gather(syn_all, syn_rows, sb);
                lg = combined_loss(head, rb, sb);
            } else {
                lg = ce_loss(head, rb);
            }
            adamw_step(head.W, lg.gW, w_state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
            adamw_step(head.b, lg.gb, b_state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, 0.0);
            loss_sum += lg.loss;
            ++steps;
        }
        double val_loss = ce_loss(head, val_all).loss;
        if (hooks.val_loss) {
            val_loss = hooks.val_loss(epoch, val_loss);
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(steps), val_loss, steps});
        if (stopper.update(epoch, val_loss)) {
            best = head;
        }
        if (stopper.should_stop()) {
            result.stopped_early = true;
            break;
        }
    }
    result.best_epoch = stopper.best_epoch();
    result.model = ProbeModel::from_head(best, std::move(classes));
    return result;
}

std::vector<std::size_t> predict(const ProbeModel& model, const embed::EmbeddingMatrix& emb) {
    if (!emb.empty() && emb.d() != model.d) {
        throw DataError("embedding dimension " + std::to_string(emb.d()) + " does not match probe dimension " +
                        std::to_string(model.d));
    }
    const std::size_t classes = model.classes.size();
    std::vector<std::size_t> out(emb.n(), 0);
    for (std::size_t r = 0; r < emb.n(); ++r) {
        const auto x = emb.row(r);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) {
            double z = model.b[c];
            for (std::size_t k = 0; k < model.d; ++k) {
                z += static_cast<double>(model.W[c * model.d + k]) * x[k];
            }
            if (z > best) {
                best = z;
                out[r] = c;
            }
        }
    }
    return out;
}

std::vector<StyleLabel> predict_labels(const ProbeModel& model, const embed::EmbeddingMatrix& emb) {
    std::vector<StyleLabel> labels;
    for (const auto c : predict(model, emb)) {
        labels.push_back(model.classes[c]);
    }
    return labels;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes[offset + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

fs::path metadata_path(const fs::path& path) {
    return fs::path(path.string() + ".json");
}

} // namespace

void save_probe(const ProbeModel& model, const fs::path& path, const json& metadata) {
    std::vector<std::uint8_t> out(kProbeMagic.begin(), kProbeMagic.end());
    put_u32(out, static_cast<std::uint32_t>(model.classes.size()));
    put_u32(out, static_cast<std::uint32_t>(model.d));
    for (const float v : model.W) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    for (const float v : model.b) {
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    write_bytes(path, out);
    json classes = json::array();
    for (const auto& c : model.classes) {
        classes.push_back(c.str());
    }
    json meta = metadata.is_object() ? metadata : json::object();
    meta["classes"] = classes;
    write_text(metadata_path(path), meta.dump(1) + "\n");
}

ProbeModel load_probe(const fs::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kProbeMagic.data(), 5) != 0) {
        throw DataError(path.string() + ": bad magic at offset 0 (expected PRBV1)");
    }
    if (bytes.size() < 13) {
        throw DataError(path.string() + ": truncated header at offset " + std::to_string(bytes.size()));
    }
    const std::size_t classes = get_u32(bytes, 5);
    const std::size_t d = get_u32(bytes, 9);
    const std::size_t expected = 13 + (classes * d + classes) * 4;
    if (bytes.size() != expected) {
        throw DataError(path.string() + ": truncated or oversized body at offset " +
                        std::to_string(std::min(bytes.size(), expected)));
    }
    ProbeModel m;
    m.d = d;
    m.W.resize(classes * d);
    m.b.resize(classes);
    std::size_t off = 13;
    for (auto& v : m.W) {
        v = std::bit_cast<float>(get_u32(bytes, off));
        off += 4;
    }
    for (auto& v : m.b) {
        v = std::bit_cast<float>(get_u32(bytes, off));
        off += 4;
    }
    json meta;
    try {
        meta = json::parse(read_text(metadata_path(path)));
        for (const auto& c : meta.at("classes")) {
            m.classes.emplace_back(c.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw DataError(metadata_path(path).string() + ": " + e.what());
    }
    if (m.classes.size() != classes) {
        throw DataError(path.string() + ": metadata lists " + std::to_string(m.classes.size()) + " classes, file has " +
                        std::to_string(classes));
    }
    return m;
}

} // namespace promptaug::probe
