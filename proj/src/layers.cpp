#include "barb/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "barb/errors.hpp"

namespace barb {

namespace {

void check_conv_shapes(const std::vector<std::size_t>& in, const Tensor& kernels,
                       const Tensor& bias) {
    if (kernels.rank() != 4) throw DimensionError("conv2d: kernels must be rank 4 (K,K,Cin,Cout)");
    const std::size_t k = kernels.dim(0);
    if (kernels.dim(1) != k) throw DimensionError("conv2d: kernel must be square");
    if (k < 1) throw DimensionError("conv2d: kernel side must be >= 1");
    const std::size_t h = in[0], w = in[1], cin = in[2];
    if (kernels.dim(2) != cin) {
        throw DimensionError("conv2d: input channels " + std::to_string(cin) +
                             " do not match kernel Cin " + std::to_string(kernels.dim(2)));
    }
    if (bias.rank() != 1 || bias.dim(0) != kernels.dim(3)) {
        throw DimensionError("conv2d: bias length must equal Cout");
    }
    if (h < k || w < k) {
        throw DimensionError("conv2d: input " + std::to_string(h) + "x" + std::to_string(w) +
                             " smaller than kernel " + std::to_string(k));
    }
}

// x (N,H,W,Ci) * kernels (K,K,Ci,Co) + bias -> y (N,Ho,Wo,Co)
Tensor conv_forward_batched(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
    const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), ci = x.dim(3);
    const std::size_t k = kernels.dim(0), co = kernels.dim(3);
    const std::size_t ho = h - k + 1, wo = w - k + 1;
    Tensor y({n, ho, wo, co});
    const double* xd = x.data.data();
    const double* kd = kernels.data.data();
    const double* bd = bias.data.data();
    double* yd = y.data.data();
    for (std::size_t in = 0; in < n; ++in) {
        const double* xi = xd + in * h * w * ci;
        double* yi = yd + in * ho * wo * co;
        for (std::size_t oy = 0; oy < ho; ++oy) {
            for (std::size_t ox = 0; ox < wo; ++ox) {
                double* out = yi + (oy * wo + ox) * co;
                for (std::size_t c = 0; c < co; ++c) out[c] = bd[c];
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const double* xrow = xi + ((oy + ky) * w + ox) * ci;
                    const double* krow = kd + ky * k * ci * co;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const double* xpix = xrow + kx * ci;
                        const double* kpix = krow + kx * ci * co;
                        for (std::size_t c_in = 0; c_in < ci; ++c_in) {
                            const double a = xpix[c_in];
                            const double* kvec = kpix + c_in * co;
                            for (std::size_t c = 0; c < co; ++c) out[c] += a * kvec[c];
                        }
                    }
                }
            }
        }
    }
    return y;
}

}  // namespace

Tensor conv2d_valid(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    if (input.rank() != 3) throw DimensionError("conv2d: input must be rank 3 (H,W,C)");
    check_conv_shapes(input.shape, kernels, bias);
    Tensor batched = input;
    batched.shape = {1, input.dim(0), input.dim(1), input.dim(2)};
    Tensor y = conv_forward_batched(batched, kernels, bias);
    y.shape = {y.dim(1), y.dim(2), y.dim(3)};
    return y;
}

Tensor maxpool2x2(const Tensor& input) {
    if (input.rank() != 3) throw DimensionError("maxpool2x2: input must be rank 3 (H,W,C)");
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    if (h < 2 || w < 2) {
        throw DimensionError("maxpool2x2: input " + std::to_string(h) + "x" + std::to_string(w) +
                             " smaller than 2x2 window");
    }
    Tensor y({h / 2, w / 2, c});
    for (std::size_t oy = 0; oy < h / 2; ++oy) {
        for (std::size_t ox = 0; ox < w / 2; ++ox) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                double m = input.at3(2 * oy, 2 * ox, ch);
                m = std::max(m, input.at3(2 * oy, 2 * ox + 1, ch));
                m = std::max(m, input.at3(2 * oy + 1, 2 * ox, ch));
                m = std::max(m, input.at3(2 * oy + 1, 2 * ox + 1, ch));
                y.at3(oy, ox, ch) = m;
            }
        }
    }
    return y;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 1) throw DimensionError("dense: input must be rank 1");
    if (weights.rank() != 2 || weights.dim(0) != input.dim(0)) {
        throw DimensionError("dense: weights must be (F,U) with F = input length");
    }
    const std::size_t f = weights.dim(0), u = weights.dim(1);
    if (bias.rank() != 1 || bias.dim(0) != u) throw DimensionError("dense: bias length must equal U");
    Tensor y({u});
    for (std::size_t j = 0; j < u; ++j) y.data[j] = bias.data[j];
    for (std::size_t i = 0; i < f; ++i) {
        const double a = input.data[i];
        const double* wrow = weights.data.data() + i * u;
        for (std::size_t j = 0; j < u; ++j) y.data[j] += a * wrow[j];
    }
    return y;
}

Tensor dropout_forward(const Tensor& input, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ValueError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (mode == Mode::infer || rate == 0.0) return input;
    Tensor y = input;
    const double scale = 1.0 / (1.0 - rate);
    for (double& v : y.data) v = rng.uniform01() < rate ? 0.0 : v * scale;
    return y;
}

BatchNormParams::BatchNormParams(std::size_t channels, double eps, double mom)
    : gamma({channels}, 1.0),
      beta({channels}, 0.0),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0),
      epsilon(eps),
      momentum(mom) {
    if (eps <= 0.0) throw ValueError("batchnorm: epsilon must be > 0");
}

namespace {

struct BnView {
    std::size_t rows;      // reduction count per channel
    std::size_t channels;  // last axis
};

BnView bn_view(const Tensor& batch, const BatchNormParams& params) {
    if (batch.rank() != 2 && batch.rank() != 4) {
        throw DimensionError("batchnorm: batch must be rank 2 (N,F) or rank 4 (N,H,W,C)");
    }
    const std::size_t channels = batch.shape.back();
    if (channels != params.gamma.dim(0)) {
        throw DimensionError("batchnorm: channel count " + std::to_string(channels) +
                             " does not match parameters (" + std::to_string(params.gamma.dim(0)) +
                             ")");
    }
    return {batch.size() / channels, channels};
}

}  // namespace

Tensor batchnorm_forward(const Tensor& batch, BatchNormParams& params, Mode mode) {
    const BnView v = bn_view(batch, params);
    Tensor y(batch.shape);
    if (mode == Mode::infer) {
        for (std::size_t c = 0; c < v.channels; ++c) {
            const double inv = 1.0 / std::sqrt(params.running_var.data[c] + params.epsilon);
            const double g = params.gamma.data[c], b = params.beta.data[c];
            const double mu = params.running_mean.data[c];
            for (std::size_t r = 0; r < v.rows; ++r) {
                const std::size_t i = r * v.channels + c;
                y.data[i] = g * (batch.data[i] - mu) * inv + b;
            }
        }
        return y;
    }
    if (batch.dim(0) < 2) {
        throw ValueError("batchnorm: train mode needs batch size >= 2, got " +
                         std::to_string(batch.dim(0)));
    }
    std::vector<double> mean(v.channels, 0.0), var(v.channels, 0.0);
    for (std::size_t r = 0; r < v.rows; ++r) {
        for (std::size_t c = 0; c < v.channels; ++c) mean[c] += batch.data[r * v.channels + c];
    }
    for (double& m : mean) m /= static_cast<double>(v.rows);
    for (std::size_t r = 0; r < v.rows; ++r) {
        for (std::size_t c = 0; c < v.channels; ++c) {
            const double d = batch.data[r * v.channels + c] - mean[c];
            var[c] += d * d;
        }
    }
    for (double& s : var) s /= static_cast<double>(v.rows);
    for (std::size_t c = 0; c < v.channels; ++c) {
        const double inv = 1.0 / std::sqrt(var[c] + params.epsilon);
        const double g = params.gamma.data[c], b = params.beta.data[c];
        for (std::size_t r = 0; r < v.rows; ++r) {
            const std::size_t i = r * v.channels + c;
            y.data[i] = g * (batch.data[i] - mean[c]) * inv + b;
        }
        params.running_mean.data[c] =
            params.momentum * params.running_mean.data[c] + (1.0 - params.momentum) * mean[c];
        params.running_var.data[c] =
            params.momentum * params.running_var.data[c] + (1.0 - params.momentum) * var[c];
    }
    return y;
}

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel) {
    if (kernel < 1) throw ValueError("LayerSpec: kernel side must be >= 1");
    LayerSpec s;
    s.kind = Kind::conv2d;
    s.filters = filters;
    s.kernel = kernel;
    return s;
}

LayerSpec LayerSpec::batchnorm(double epsilon, double momentum) {
    if (epsilon <= 0.0) throw ValueError("LayerSpec: epsilon must be > 0");
    LayerSpec s;
    s.kind = Kind::batchnorm;
    s.epsilon = epsilon;
    s.momentum = momentum;
    return s;
}

LayerSpec LayerSpec::maxpool2() {
    LayerSpec s;
    s.kind = Kind::maxpool2;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = Kind::flatten;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
    LayerSpec s;
    s.kind = Kind::dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::dropout(double rate) {
    if (rate < 0.0 || rate >= 1.0) throw ValueError("LayerSpec: dropout rate must lie in [0,1)");
    LayerSpec s;
    s.kind = Kind::dropout;
    s.rate = rate;
    return s;
}

LayerSpec LayerSpec::activation(Activation a) {
    LayerSpec s;
    s.kind = Kind::activation;
    s.act = a;
    return s;
}

void Layer::require_cache(const char* op) const {
    if (!has_cache_) {
        throw StateError(std::string(op) + ": backward called before forward" +
                         (label.empty() ? "" : " in layer " + label));
    }
}

namespace {

// Fan-in scaled uniform on [-sqrt(6/fan_in), sqrt(6/fan_in)], biases zero.
void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-limit, limit);
}

}  // namespace

Conv2dLayer::Conv2dLayer(std::size_t in_channels, std::size_t filters, std::size_t kernel,
                         Rng& init_rng)
    : kernels({kernel, kernel, in_channels, filters}), bias({filters}, 0.0) {
    init_uniform(kernels, kernel * kernel * in_channels, init_rng);
    kernels.alloc_grad();
    bias.alloc_grad();
}

Tensor Conv2dLayer::forward(const Tensor& x, Mode mode, Rng&) {
    if (x.rank() != 4) throw DimensionError("conv2d: batched input must be rank 4 (N,H,W,C)");
    check_conv_shapes({x.dim(1), x.dim(2), x.dim(3)}, kernels, bias);
    input_ = x;
    has_cache_ = true;
    return conv_forward_batched(x, kernels, bias);
}

Tensor Conv2dLayer::backward(const Tensor& grad_out) {
    require_cache("conv2d");
    const std::size_t n = input_.dim(0), h = input_.dim(1), w = input_.dim(2), ci = input_.dim(3);
    const std::size_t k = kernels.dim(0), co = kernels.dim(3);
    const std::size_t ho = h - k + 1, wo = w - k + 1;
    if (grad_out.shape != std::vector<std::size_t>{n, ho, wo, co}) {
        throw DimensionError("conv2d backward: gradient shape mismatch");
    }
    Tensor dx(input_.shape);
    const double* xd = input_.data.data();
    const double* kd = kernels.data.data();
    const double* gd = grad_out.data.data();
    double* dxd = dx.data.data();
    double* dkd = kernels.grad.data();
    double* dbd = bias.grad.data();
    for (std::size_t in = 0; in < n; ++in) {
        const double* xi = xd + in * h * w * ci;
        const double* gi = gd + in * ho * wo * co;
        double* dxi = dxd + in * h * w * ci;
        for (std::size_t oy = 0; oy < ho; ++oy) {
            for (std::size_t ox = 0; ox < wo; ++ox) {
                const double* g = gi + (oy * wo + ox) * co;
                for (std::size_t c = 0; c < co; ++c) dbd[c] += g[c];
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const std::size_t row = ((oy + ky) * w + ox) * ci;
                    const double* krow = kd + ky * k * ci * co;
                    double* dkrow = dkd + ky * k * ci * co;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const double* xpix = xi + row + kx * ci;
                        double* dxpix = dxi + row + kx * ci;
                        const double* kpix = krow + kx * ci * co;
                        double* dkpix = dkrow + kx * ci * co;
                        for (std::size_t c_in = 0; c_in < ci; ++c_in) {
                            const double a = xpix[c_in];
                            const double* kvec = kpix + c_in * co;
                            double* dkvec = dkpix + c_in * co;
                            double acc = 0.0;
                            for (std::size_t c = 0; c < co; ++c) {
                                dkvec[c] += a * g[c];
                                acc += kvec[c] * g[c];
                            }
                            dxpix[c_in] += acc;
                        }
                    }
                }
            }
        }
    }
    has_cache_ = false;
    return dx;
}

void Conv2dLayer::collect_params(std::vector<ParamRef>& out) {
    out.push_back({label + "/kernel", &kernels, true});
    out.push_back({label + "/bias", &bias, true});
}

BatchNormLayer::BatchNormLayer(std::size_t channels, double epsilon, double momentum)
    : params(channels, epsilon, momentum) {
    params.gamma.alloc_grad();
    params.beta.alloc_grad();
}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode, Rng&) {
    const BnView v = bn_view(x, params);
    mode_ = mode;
    Tensor y = batchnorm_forward(x, params, mode);
    if (mode == Mode::train) {
        // xhat is recoverable from y: xhat = (y - beta) / gamma only when
        // gamma != 0, so cache it explicitly alongside 1/sqrt(var+eps).
        xhat_ = Tensor(x.shape);
        inv_std_.assign(v.channels, 0.0);
        std::vector<double> mean(v.channels, 0.0), var(v.channels, 0.0);
        for (std::size_t r = 0; r < v.rows; ++r)
            for (std::size_t c = 0; c < v.channels; ++c) mean[c] += x.data[r * v.channels + c];
        for (double& m : mean) m /= static_cast<double>(v.rows);
        for (std::size_t r = 0; r < v.rows; ++r)
            for (std::size_t c = 0; c < v.channels; ++c) {
                const double d = x.data[r * v.channels + c] - mean[c];
                var[c] += d * d;
            }
        for (double& s : var) s /= static_cast<double>(v.rows);
        for (std::size_t c = 0; c < v.channels; ++c) {
            inv_std_[c] = 1.0 / std::sqrt(var[c] + params.epsilon);
            for (std::size_t r = 0; r < v.rows; ++r) {
                const std::size_t i = r * v.channels + c;
                xhat_.data[i] = (x.data[i] - mean[c]) * inv_std_[c];
            }
        }
    }
    rows_ = v.rows;
    has_cache_ = true;
    return y;
}

Tensor BatchNormLayer::backward(const Tensor& grad_out) {
    require_cache("batchnorm");
    const std::size_t channels = params.gamma.dim(0);
    Tensor dx(grad_out.shape);
    if (mode_ == Mode::infer) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double scale =
                params.gamma.data[c] / std::sqrt(params.running_var.data[c] + params.epsilon);
            for (std::size_t r = 0; r < rows_; ++r) {
                const std::size_t i = r * channels + c;
                dx.data[i] = grad_out.data[i] * scale;
            }
        }
        has_cache_ = false;
        return dx;
    }
    const double m = static_cast<double>(rows_);
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const std::size_t i = r * channels + c;
            sum_g += grad_out.data[i];
            sum_gx += grad_out.data[i] * xhat_.data[i];
        }
        params.gamma.grad[c] += sum_gx;
        params.beta.grad[c] += sum_g;
        const double g = params.gamma.data[c];
        const double inv = inv_std_[c];
        for (std::size_t r = 0; r < rows_; ++r) {
            const std::size_t i = r * channels + c;
            dx.data[i] =
                g * inv / m * (m * grad_out.data[i] - sum_g - xhat_.data[i] * sum_gx);
        }
    }
    has_cache_ = false;
    return dx;
}

void BatchNormLayer::collect_params(std::vector<ParamRef>& out) {
    out.push_back({label + "/gamma", &params.gamma, true});
    out.push_back({label + "/beta", &params.beta, true});
    out.push_back({label + "/running_mean", &params.running_mean, false});
    out.push_back({label + "/running_var", &params.running_var, false});
}

Tensor ActivationLayer::forward(const Tensor& x, Mode, Rng&) {
    input_ = x;
    has_cache_ = true;
    if (act_ == Activation::linear) return x;
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor ActivationLayer::backward(const Tensor& grad_out) {
    require_cache("activation");
    require_same_shape(grad_out, input_, "activation backward");
    has_cache_ = false;
    if (act_ == Activation::linear) return grad_out;
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        if (input_.data[i] <= 0.0) dx.data[i] = 0.0;
    }
    return dx;
}

Tensor MaxPool2Layer::forward(const Tensor& x, Mode, Rng&) {
    if (x.rank() != 4) throw DimensionError("maxpool2: batched input must be rank 4 (N,H,W,C)");
    const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    if (h < 2 || w < 2) {
        throw DimensionError("maxpool2: input " + std::to_string(h) + "x" + std::to_string(w) +
                             " smaller than 2x2 window");
    }
    const std::size_t ho = h / 2, wo = w / 2;
    Tensor y({n, ho, wo, c});
    in_shape_ = x.shape;
    argmax_.assign(y.size(), 0);
    for (std::size_t in = 0; in < n; ++in) {
        for (std::size_t oy = 0; oy < ho; ++oy) {
            for (std::size_t ox = 0; ox < wo; ++ox) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_i = 0;
                    for (std::size_t dy = 0; dy < 2; ++dy) {
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const std::size_t i =
                                ((in * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                            if (x.data[i] > best) {
                                best = x.data[i];
                                best_i = i;
                            }
                        }
                    }
                    const std::size_t o = ((in * ho + oy) * wo + ox) * c + ch;
                    y.data[o] = best;
                    argmax_[o] = best_i;
                }
            }
        }
    }
    has_cache_ = true;
    return y;
}

Tensor MaxPool2Layer::backward(const Tensor& grad_out) {
    require_cache("maxpool2");
    if (grad_out.size() != argmax_.size()) {
        throw DimensionError("maxpool2 backward: gradient shape mismatch");
    }
    Tensor dx(in_shape_);
    for (std::size_t o = 0; o < grad_out.size(); ++o) dx.data[argmax_[o]] += grad_out.data[o];
    has_cache_ = false;
    return dx;
}

Tensor FlattenLayer::forward(const Tensor& x, Mode, Rng&) {
    if (x.rank() < 2) throw DimensionError("flatten: batched input must have rank >= 2");
    in_shape_ = x.shape;
    Tensor y = x;
    y.shape = {x.dim(0), x.size() / x.dim(0)};
    has_cache_ = true;
    return y;
}

Tensor FlattenLayer::backward(const Tensor& grad_out) {
    require_cache("flatten");
    if (grad_out.size() != shape_size(in_shape_)) {
        throw DimensionError("flatten backward: gradient size mismatch");
    }
    Tensor dx = grad_out;
    dx.shape = in_shape_;
    has_cache_ = false;
    return dx;
}

DenseLayer::DenseLayer(std::size_t in_features, std::size_t units, Rng& init_rng)
    : weights({in_features, units}), bias({units}, 0.0) {
    init_uniform(weights, in_features, init_rng);
    weights.alloc_grad();
    bias.alloc_grad();
}

Tensor DenseLayer::forward(const Tensor& x, Mode, Rng&) {
    if (x.rank() != 2) throw DimensionError("dense: batched input must be rank 2 (N,F)");
    const std::size_t f = weights.dim(0), u = weights.dim(1);
    if (x.dim(1) != f) {
        throw DimensionError("dense: input width " + std::to_string(x.dim(1)) +
                             " does not match weights (" + std::to_string(f) + ")");
    }
    input_ = x;
    const std::size_t n = x.dim(0);
    Tensor y({n, u});
    for (std::size_t r = 0; r < n; ++r) {
        double* yr = y.data.data() + r * u;
        for (std::size_t j = 0; j < u; ++j) yr[j] = bias.data[j];
        const double* xr = x.data.data() + r * f;
        for (std::size_t i = 0; i < f; ++i) {
            const double a = xr[i];
            const double* wrow = weights.data.data() + i * u;
            for (std::size_t j = 0; j < u; ++j) yr[j] += a * wrow[j];
        }
    }
    has_cache_ = true;
    return y;
}

Tensor DenseLayer::backward(const Tensor& grad_out) {
    require_cache("dense");
    const std::size_t f = weights.dim(0), u = weights.dim(1), n = input_.dim(0);
    if (grad_out.shape != std::vector<std::size_t>{n, u}) {
        throw DimensionError("dense backward: gradient shape mismatch");
    }
    Tensor dx({n, f});
    for (std::size_t r = 0; r < n; ++r) {
        const double* gr = grad_out.data.data() + r * u;
        const double* xr = input_.data.data() + r * f;
        double* dxr = dx.data.data() + r * f;
        for (std::size_t j = 0; j < u; ++j) bias.grad[j] += gr[j];
        for (std::size_t i = 0; i < f; ++i) {
            const double a = xr[i];
            const double* wrow = weights.data.data() + i * u;
            double* dwrow = weights.grad.data() + i * u;
            double acc = 0.0;
            for (std::size_t j = 0; j < u; ++j) {
                dwrow[j] += a * gr[j];
                acc += wrow[j] * gr[j];
            }
            dxr[i] = acc;
        }
    }
    has_cache_ = false;
    return dx;
}

void DenseLayer::collect_params(std::vector<ParamRef>& out) {
    out.push_back({label + "/weights", &weights, true});
    out.push_back({label + "/bias", &bias, true});
}

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ValueError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    }
}

Tensor DropoutLayer::forward(const Tensor& x, Mode mode, Rng& rng) {
    has_cache_ = true;
    if (mode == Mode::infer || rate_ == 0.0) {
        mask_.clear();
        return x;
    }
    const double scale = 1.0 / (1.0 - rate_);
    mask_.resize(x.size());
    Tensor y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask_[i] = rng.uniform01() < rate_ ? 0.0 : scale;
        y.data[i] *= mask_[i];
    }
    return y;
}

Tensor DropoutLayer::backward(const Tensor& grad_out) {
    require_cache("dropout");
    has_cache_ = false;
    if (mask_.empty()) return grad_out;
    if (grad_out.size() != mask_.size()) {
        throw DimensionError("dropout backward: gradient shape mismatch");
    }
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
}

void Network::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

Tensor Network::forward(const Tensor& x, Mode mode, Rng& rng) {
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur, mode, rng);
    return cur;
}

Tensor Network::forward_infer(const Tensor& x) {
    Rng dummy(0);
    return forward(x, Mode::infer, dummy);
}

void Network::backward(const Tensor& grad_out) {
    Tensor cur = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
}

std::vector<ParamRef> Network::params() {
    std::vector<ParamRef> out;
    for (auto& l : layers_) l->collect_params(out);
    return out;
}

std::vector<Tensor*> Network::trainable_tensors() {
    std::vector<Tensor*> out;
    for (auto p : params()) {
        if (p.trainable) out.push_back(p.tensor);
    }
    return out;
}

void Network::zero_grads() {
    for (auto p : params()) {
        if (p.trainable) p.tensor->zero_grad();
    }
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    const double n = static_cast<double>(pred.size());
    MseResult r{0.0, Tensor(pred.shape)};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        r.loss += d * d;
        r.grad.data[i] = 2.0 * d / n;
    }
    r.loss /= n;
    return r;
}

double reverse_gradients(Network& net, const Tensor& batch_x, const Tensor& targets, Rng& rng) {
    net.zero_grads();
    Tensor pred = net.forward(batch_x, Mode::train, rng);
    MseResult r = mse_loss(pred, targets);
    net.backward(r.grad);
    return r.loss;
}

}  // namespace barb
