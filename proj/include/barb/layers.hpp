#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "barb/rng.hpp"
#include "barb/tensor.hpp"

namespace barb {

enum class Mode { train, infer };

// Free tensor ops on single samples. Layers below apply the same math to
// batches and add the reverse pass.

// input (H, W, Cin), kernels (K, K, Cin, Cout), bias (Cout)
// -> (H-K+1, W-K+1, Cout), cross-correlation, valid padding, stride 1.
Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, const Tensor& bias);

// input (H, W, C) -> (floor(H/2), floor(W/2), C); trailing odd row/column dropped.
Tensor maxpool2x2(const Tensor& input);

// input (F), weights (F, U), bias (U) -> (U)
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

// Inverted dropout: train mode zeroes with probability `rate` and scales
// survivors by 1/(1-rate); infer mode is the identity.
Tensor dropout_forward(const Tensor& input, double rate, Mode mode, Rng& rng);

struct BatchNormParams {
    Tensor gamma;         // trainable
    Tensor beta;          // trainable
    Tensor running_mean;  // updated in train mode only
    Tensor running_var;
    double epsilon = 1e-5;
    double momentum = 0.99;

    explicit BatchNormParams(std::size_t channels, double eps = 1e-5, double mom = 0.99);
    BatchNormParams() = default;
};

// batch (N, F) or (N, H, W, C), per-channel statistics over the remaining axes.
// Train mode requires N >= 2 and updates the running statistics in place.
Tensor batchnorm_forward(const Tensor& batch, BatchNormParams& params, Mode mode);

enum class Activation { relu, linear };

struct LayerSpec {
    enum class Kind { conv2d, batchnorm, maxpool2, flatten, dense, dropout, activation };
    Kind kind;
    std::size_t filters = 0;  // conv2d
    std::size_t kernel = 0;   // conv2d
    std::size_t units = 0;    // dense
    double rate = 0.0;        // dropout
    double epsilon = 1e-5;    // batchnorm
    double momentum = 0.99;   // batchnorm
    Activation act = Activation::relu;

    static LayerSpec conv2d(std::size_t filters, std::size_t kernel);
    static LayerSpec batchnorm(double epsilon = 1e-5, double momentum = 0.99);
    static LayerSpec maxpool2();
    static LayerSpec flatten();
    static LayerSpec dense(std::size_t units);
    static LayerSpec dropout(double rate);
    static LayerSpec activation(Activation a);
};

struct ParamRef {
    std::string name;
    Tensor* tensor;
    bool trainable;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, Mode mode, Rng& rng) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<ParamRef>& out) {}
    virtual const char* kind() const = 0;

    std::string label;

protected:
    void require_cache(const char* op) const;
    bool has_cache_ = false;
};

class Conv2dLayer : public Layer {
public:
    Conv2dLayer(std::size_t in_channels, std::size_t filters, std::size_t kernel, Rng& init_rng);

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    const char* kind() const override { return "conv2d"; }

    Tensor kernels;  // (K, K, Cin, Cout)
    Tensor bias;     // (Cout)

private:
    Tensor input_;
};

class BatchNormLayer : public Layer {
public:
    BatchNormLayer(std::size_t channels, double epsilon = 1e-5, double momentum = 0.99);

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    const char* kind() const override { return "batchnorm"; }

    BatchNormParams params;

private:
    Tensor xhat_;
    std::vector<double> inv_std_;
    Mode mode_ = Mode::train;
    std::size_t rows_ = 0;  // reduction count per channel
};

class ActivationLayer : public Layer {
public:
    explicit ActivationLayer(Activation act) : act_(act) {}

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "activation"; }

private:
    Activation act_;
    Tensor input_;
};

class MaxPool2Layer : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "maxpool2"; }

private:
    std::vector<std::size_t> in_shape_;
    std::vector<std::size_t> argmax_;
};

class FlattenLayer : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "flatten"; }

private:
    std::vector<std::size_t> in_shape_;
};

class DenseLayer : public Layer {
public:
    DenseLayer(std::size_t in_features, std::size_t units, Rng& init_rng);

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    const char* kind() const override { return "dense"; }

    Tensor weights;  // (F, U)
    Tensor bias;     // (U)

private:
    Tensor input_;
};

class DropoutLayer : public Layer {
public:
    explicit DropoutLayer(double rate);

    Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "dropout"; }

    double rate() const { return rate_; }

private:
    double rate_;
    std::vector<double> mask_;
};

// Ordered layer stack with shared forward/backward plumbing. Batched input:
// rank 4 (N, H, W, C) through the conv stage, rank 2 (N, F) after flatten.
class Network {
public:
    void add(std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& x, Mode mode, Rng& rng);
    Tensor forward_infer(const Tensor& x);
    void backward(const Tensor& grad_out);

    std::vector<ParamRef> params();
    std::vector<Tensor*> trainable_tensors();
    void zero_grads();

    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

struct MseResult {
    double loss;
    Tensor grad;  // d(loss)/d(pred)
};

// Mean over all elements of (pred - target)^2.
MseResult mse_loss(const Tensor& pred, const Tensor& target);

// Forward in train mode, mean-squared-error loss, reverse pass. Gradients of
// every trainable parameter are populated; running statistics receive none.
// Returns the batch loss.
double reverse_gradients(Network& net, const Tensor& batch_x, const Tensor& targets, Rng& rng);

}  // namespace barb
