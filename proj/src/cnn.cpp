#include "barb/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "barb/adam.hpp"
#include "barb/errors.hpp"
#include "barb/rng.hpp"

namespace barb {

std::string to_string(Modality m) {
    switch (m) {
        case Modality::flair_ac: return "flair_ac";
        case Modality::flair_lv: return "flair_lv";
        case Modality::t2_ac: return "t2_ac";
        case Modality::t2_lv: return "t2_lv";
    }
    throw ValueError("unknown modality");
}

Modality modality_from_string(const std::string& name) {
    for (Modality m : kAllModalities) {
        if (to_string(m) == name) return m;
    }
    throw ValueError("unknown modality '" + name + "'");
}

void CnnConfig::validate() const {
    if (conv_filters.empty()) throw ValueError("CnnConfig: conv_filters must be nonempty");
    if (kernel_side < 1) throw ValueError("CnnConfig: kernel_side must be >= 1");
    if (dense_widths.empty() || dense_widths.back() != 1) {
        throw ValueError("CnnConfig: dense_widths must end in an output width of 1");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ValueError("CnnConfig: dropout_rate must lie in [0,1)");
    }
    if (batch_size < 2) throw ValueError("CnnConfig: batch_size must be >= 2");
    if (learning_rate < 0.0) throw ValueError("CnnConfig: learning_rate must be >= 0");
}

std::vector<LayerShape> shape_chain(const CnnConfig& config) {
    config.validate();
    std::vector<LayerShape> chain;
    std::size_t h = config.input_side, w = config.input_side, c = 1;
    for (std::size_t b = 0; b < config.conv_filters.size(); ++b) {
        const std::string idx = std::to_string(b + 1);
        if (h < config.kernel_side || w < config.kernel_side) {
            throw DimensionError("shape underflow at conv" + idx + ": input " + std::to_string(h) +
                                 "x" + std::to_string(w) + " smaller than kernel " +
                                 std::to_string(config.kernel_side));
        }
        h = h - config.kernel_side + 1;
        w = w - config.kernel_side + 1;
        c = config.conv_filters[b];
        chain.push_back({"conv" + idx, {h, w, c}});
        chain.push_back({"bn" + idx, {h, w, c}});
        chain.push_back({"act" + idx, {h, w, c}});
        if (h < 2 || w < 2) {
            throw DimensionError("shape underflow at pool" + idx + ": feature map " +
                                 std::to_string(h) + "x" + std::to_string(w) +
                                 " smaller than 2x2 window");
        }
        h /= 2;
        w /= 2;
        chain.push_back({"pool" + idx, {h, w, c}});
    }
    chain.push_back({"flatten", {h * w * c}});
    std::size_t f = h * w * c;
    for (std::size_t d = 0; d < config.dense_widths.size(); ++d) {
        const std::string idx = std::to_string(d + 1);
        f = config.dense_widths[d];
        chain.push_back({"dense" + idx, {f}});
        if (d == 0) {
            chain.push_back({"bn_dense", {f}});
            chain.push_back({"act_dense1", {f}});
            chain.push_back({"dropout", {f}});
        } else if (d + 1 < config.dense_widths.size()) {
            chain.push_back({"act_dense" + idx, {f}});
        }
    }
    return chain;
}

CnnModel::CnnModel(CnnConfig config, Modality modality)
    : config_(std::move(config)), modality_(modality) {}

void CnnModel::set_target_scaling(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
        throw ValueError("target scaling must be finite with sd > 0");
    }
    target_mean_ = mean;
    target_sd_ = sd;
}

CnnModel build_model(const CnnConfig& config, Modality modality) {
    shape_chain(config);  // validates the whole stack before any allocation
    CnnModel model(config, modality);
    Rng init_rng(derive_seed(config.seed, "init/" + to_string(modality)));
    Network& net = model.net_;
    std::size_t in_c = 1;
    std::size_t side = config.input_side;
    auto add = [&net](std::unique_ptr<Layer> l, const std::string& label) {
        l->label = label;
        net.add(std::move(l));
    };
    for (std::size_t b = 0; b < config.conv_filters.size(); ++b) {
        const std::string idx = std::to_string(b + 1);
        const std::size_t filters = config.conv_filters[b];
        add(std::make_unique<Conv2dLayer>(in_c, filters, config.kernel_side, init_rng),
            "conv" + idx);
        add(std::make_unique<BatchNormLayer>(filters), "bn" + idx);
        add(std::make_unique<ActivationLayer>(Activation::relu), "act" + idx);
        add(std::make_unique<MaxPool2Layer>(), "pool" + idx);
        side = (side - config.kernel_side + 1) / 2;
        in_c = filters;
    }
    add(std::make_unique<FlattenLayer>(), "flatten");
    std::size_t in_f = side * side * in_c;
    for (std::size_t d = 0; d < config.dense_widths.size(); ++d) {
        const std::string idx = std::to_string(d + 1);
        const std::size_t units = config.dense_widths[d];
        add(std::make_unique<DenseLayer>(in_f, units, init_rng), "dense" + idx);
        if (d == 0) {
            add(std::make_unique<BatchNormLayer>(units), "bn_dense");
            add(std::make_unique<ActivationLayer>(Activation::relu), "act_dense1");
            add(std::make_unique<DropoutLayer>(config.dropout_rate), "dropout");
        } else if (d + 1 < config.dense_widths.size()) {
            add(std::make_unique<ActivationLayer>(Activation::relu), "act_dense" + idx);
        }
        in_f = units;
    }
    return model;
}

ParamCounts count_parameters(CnnModel& model) {
    ParamCounts counts;
    for (const ParamRef& p : model.net().params()) {
        counts.total += p.tensor->size();
        if (p.trainable) {
            counts.trainable += p.tensor->size();
        } else {
            counts.non_trainable += p.tensor->size();
        }
    }
    return counts;
}

Tensor flip_lr(const Tensor& image) {
    if (image.rank() != 3) throw DimensionError("flip_lr: image must be rank 3 (H,W,C)");
    const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
    Tensor out(image.shape);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                out.at3(y, x, ch) = image.at3(y, w - 1 - x, ch);
            }
        }
    }
    return out;
}

std::vector<LabeledImage> mirror_augment(const std::vector<LabeledImage>& dataset) {
    std::vector<LabeledImage> out;
    out.reserve(dataset.size() * 2);
    for (const LabeledImage& item : dataset) {
        out.push_back(item);
        out.push_back({item.subject_id, flip_lr(item.image), item.age});
    }
    return out;
}

void train_cnn(CnnModel& model, const std::vector<LabeledImage>& train_set) {
    const CnnConfig& cfg = model.config();
    if (train_set.empty()) throw ValueError("train_cnn: empty training set");
    const std::size_t side = cfg.input_side;
    double mean = 0.0;
    for (const LabeledImage& item : train_set) {
        if (item.image.shape != std::vector<std::size_t>{side, side, 1}) {
            throw DimensionError("train_cnn: image for subject " + item.subject_id +
                                 " does not match input side " + std::to_string(side));
        }
        if (!std::isfinite(item.age) || item.age <= 0.0) {
            throw ValueError("train_cnn: age must be finite and positive (subject " +
                             item.subject_id + ")");
        }
        mean += item.age;
    }
    mean /= static_cast<double>(train_set.size());
    double var = 0.0;
    for (const LabeledImage& item : train_set) var += (item.age - mean) * (item.age - mean);
    var /= static_cast<double>(train_set.size());
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    model.set_target_scaling(mean, sd);

    std::vector<Tensor*> params = model.net().trainable_tensors();
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    AdamState adam = AdamState::init(params, adam_cfg);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Streams restart each epoch so the loss trace depends only on the
        // parameter values.
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
        Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);

        double epoch_sq_sum = 0.0;
        std::size_t epoch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            if (n < 2) break;  // batchnorm cannot take a single-sample batch
            Tensor batch({n, side, side, 1});
            Tensor targets({n, 1});
            for (std::size_t i = 0; i < n; ++i) {
                const LabeledImage& item = train_set[order[start + i]];
                std::copy(item.image.data.begin(), item.image.data.end(),
                          batch.data.begin() + i * side * side);
                targets.data[i] = (item.age - mean) / sd;
            }
            const double loss = reverse_gradients(model.net(), batch, targets, dropout_rng);
            if (!std::isfinite(loss)) {
                throw DivergenceError("train_cnn: non-finite loss at epoch " +
                                      std::to_string(epoch + 1));
            }
            adam_step(params, adam);
            epoch_sq_sum += loss * static_cast<double>(n);
            epoch_count += n;
        }
        if (epoch_count == 0) {
            throw ValueError("train_cnn: no batch of size >= 2 could be formed");
        }
        model.append_history(epoch_sq_sum / static_cast<double>(epoch_count) * sd * sd);
    }
}

double predict_age(CnnModel& model, const Tensor& image) {
    const std::size_t side = model.config().input_side;
    if (image.shape != std::vector<std::size_t>{side, side, 1}) {
        throw DimensionError("predict_age: image shape " + image.shape_str() +
                             " does not match input side " + std::to_string(side));
    }
    Tensor batch = image;
    batch.shape = {1, side, side, 1};
    Tensor out = model.net().forward_infer(batch);
    return model.target_mean() + model.target_sd() * out.data[0];
}

}  // namespace barb
