#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace barb {

// Dense row-major tensor of doubles. `grad`, when allocated, mirrors `data`
// element for element. Images and activations use channels-last layout:
// rank 3 is (H, W, C), rank 4 activations are (N, H, W, C), conv kernels
// are (K, K, Cin, Cout), dense batches are (N, F).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    bool has_grad() const { return !grad.empty(); }
    void alloc_grad();
    void zero_grad();

    double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at3(std::size_t y, std::size_t x, std::size_t c) {
        return data[(y * shape[1] + x) * shape[2] + c];
    }
    double at3(std::size_t y, std::size_t x, std::size_t c) const {
        return data[(y * shape[1] + x) * shape[2] + c];
    }

    std::string shape_str() const;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
bool same_shape(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

// Throws DimensionError unless shapes match.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace barb
