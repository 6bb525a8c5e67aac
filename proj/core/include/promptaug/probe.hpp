#pragma once

#include "promptaug/embed.hpp"
#include "promptaug/style.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace promptaug::probe {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t real_batch_cap = 32; // real batch = min(cap, n_r)
    std::size_t synthetic_batch = 512;
    int patience = 5;
    int max_epochs = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// --- math -----------------------------------------------------------------------

struct CrossEntropy {
    double loss = 0.0;
    std::vector<double> grad_logits; // B x C, gradient of the mean loss
};

/// Mean of -log softmax(logits)[label] over the batch, computed with the row
/// maximum subtracted. Non-finite logits or labels >= C throw DataError.
CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t classes,
                                   std::span<const std::size_t> labels);

/// Rows of features with their class indices.
struct Batch {
    std::size_t d = 0;
    std::vector<double> x; // size() x d
    std::vector<std::size_t> y;

    std::size_t size() const noexcept { return y.size(); }
};

/// Linear head in double precision: logits = W x + b.
struct LinearHead {
    std::size_t classes = 0;
    std::size_t d = 0;
    std::vector<double> W; // classes x d
    std::vector<double> b; // classes

    LinearHead() = default;
    LinearHead(std::size_t classes, std::size_t d) : classes(classes), d(d), W(classes * d, 0.0), b(classes, 0.0) {}

    std::vector<double> logits(const Batch& batch) const;
};

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> gW;
    std::vector<double> gb;
};

/// Plain cross-entropy of one batch with gradients for W and b.
LossAndGrad ce_loss(const LinearHead& head, const Batch& batch);

/// L = CE(real) + CE(synthetic); gradients are the sums of the per-batch gradients.
/// Both batches must be non-empty with dimension head.d.
LossAndGrad combined_loss(const LinearHead& head, const Batch& real, const Batch& synthetic);

struct AdamWState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;

    explicit AdamWState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2;  m^ = m/(1-b1^t);  v^ = v/(1-b2^t)
/// p <- p - lr * m^/(sqrt(v^)+eps) - lr * weight_decay * p
void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, double lr,
                double beta1, double beta2, double eps, double weight_decay);

/// Stops after `patience` consecutive epochs without a strictly lower loss.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience);

    /// Records one epoch's loss; returns true when it is the new best.
    bool update(int epoch, double loss);
    bool should_stop() const noexcept { return m_bad_epochs >= m_patience; }
    int best_epoch() const noexcept { return m_best_epoch; }
    double best_loss() const noexcept { return m_best_loss; }

private:
    int m_patience;
    int m_bad_epochs = 0;
    int m_best_epoch = -1;
    double m_best_loss = 0.0;
};

// --- model and training ------------------------------------------------------------

struct ProbeModel {
    std::vector<StyleLabel> classes;
    std::size_t d = 0;
    std::vector<float> W; // classes x d
    std::vector<float> b;

    static ProbeModel from_head(const LinearHead& head, std::vector<StyleLabel> classes);
    LinearHead to_head() const;

    bool operator==(const ProbeModel&) const = default;
};

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0; // mean step loss over the epoch
    double val_loss = 0.0;
    std::size_t steps = 0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
    ProbeModel model; // parameters after the best validation epoch
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    bool stopped_early = false;
};

struct TrainHooks {
    /// Replaces the computed validation loss (epoch, computed) -> used. For tests.
    std::function<double(int, double)> val_loss;
};

/// Zero-initialized head over the classes present in `real` (canonical order).
/// Each epoch is one shuffled pass over the real set in batches of
/// min(real_batch_cap, n_r); with a synthetic set, every step also draws
/// synthetic_batch rows with replacement and minimizes the combined loss.
/// After each epoch the validation cross-entropy on `val` drives early stopping.
TrainResult train_probe(const embed::EmbeddingMatrix& real, const embed::EmbeddingMatrix* synthetic,
                        const embed::EmbeddingMatrix& val, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Class index per row: argmax of W x + b, lowest index on ties.
std::vector<std::size_t> predict(const ProbeModel& model, const embed::EmbeddingMatrix& emb);
std::vector<StyleLabel> predict_labels(const ProbeModel& model, const embed::EmbeddingMatrix& emb);

// --- checkpoint ---------------------------------------------------------------------

inline constexpr std::string_view kProbeMagic = "PRBV1";

/// "PRBV1" | u32 C | u32 d | W (C*d f32) | b (C f32), little-endian, plus `<path>.json`
/// holding the class order and `metadata`.
void save_probe(const ProbeModel& model, const std::filesystem::path& path, const nlohmann::json& metadata = {});
ProbeModel load_probe(const std::filesystem::path& path);

} // namespace promptaug::probe
