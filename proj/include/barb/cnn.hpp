#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "barb/layers.hpp"
#include "barb/modality.hpp"
#include "barb/tensor.hpp"

namespace barb {

struct CnnConfig {
    std::size_t input_side = 512;
    std::vector<std::size_t> conv_filters = {16, 32, 64};
    std::size_t kernel_side = 3;
    std::vector<std::size_t> dense_widths = {16, 4, 1};
    double dropout_rate = 0.5;
    std::size_t batch_size = 20;
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;  // throws ValueError on bad fields
};

struct LayerShape {
    std::string label;
    std::vector<std::size_t> dims;  // unbatched output shape
};

// Output shape of every layer in the stack, input excluded. Pure arithmetic;
// throws DimensionError naming the first layer whose output underflows.
std::vector<LayerShape> shape_chain(const CnnConfig& config);

struct ParamCounts {
    std::size_t total = 0;
    std::size_t trainable = 0;
    std::size_t non_trainable = 0;
};

struct LabeledImage {
    std::string subject_id;
    Tensor image;  // (side, side, 1), values in [0,1]
    double age = 0.0;
};

class CnnModel {
public:
    CnnModel() = default;
    CnnModel(CnnConfig config, Modality modality);

    const CnnConfig& config() const { return config_; }
    Modality modality() const { return modality_; }
    Network& net() { return net_; }
    const std::vector<double>& history() const { return history_; }

    // Affine target scaling learned at train time; identity until trained.
    double target_mean() const { return target_mean_; }
    double target_sd() const { return target_sd_; }
    void set_target_scaling(double mean, double sd);
    void append_history(double loss) { history_.push_back(loss); }
    void set_history(std::vector<double> h) { history_ = std::move(h); }

private:
    CnnConfig config_;
    Modality modality_ = Modality::flair_ac;
    Network net_;
    std::vector<double> history_;
    double target_mean_ = 0.0;
    double target_sd_ = 1.0;

    friend CnnModel build_model(const CnnConfig&, Modality);
};

// conv/batchnorm/relu/maxpool blocks per conv_filters entry, then
// flatten -> dense -> batchnorm -> relu -> dropout -> dense -> relu ->
// dense(1, linear). Weights seeded from (config.seed, modality).
CnnModel build_model(const CnnConfig& config, Modality modality);

ParamCounts count_parameters(CnnModel& model);

// Left-right flip (columns reversed); channels preserved.
Tensor flip_lr(const Tensor& image);

// Every original followed immediately by its flip, ages copied.
std::vector<LabeledImage> mirror_augment(const std::vector<LabeledImage>& dataset);

// Minimizes mean-squared-error on age. Targets are standardized internally
// (the scaling is stored on the model); history records per-epoch mean
// training loss in years^2. Deterministic given config.seed.
void train_cnn(CnnModel& model, const std::vector<LabeledImage>& train_set);

double predict_age(CnnModel& model, const Tensor& image);

}  // namespace barb
