#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace chunksr {

// Dense 4-D float tensor, (N, C, H, W) row-major contiguous.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f) {}

    size_t numel() const { return static_cast<size_t>(n) * c * h * w; }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const;

    float& at(int ni, int ci, int yi, int xi) {
        return data[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
    }
    float at(int ni, int ci, int yi, int xi) const {
        return data[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
    }

    float* plane(int ni, int ci) {
        return data.data() + (static_cast<size_t>(ni) * c + ci) * h * w;
    }
    const float* plane(int ni, int ci) const {
        return data.data() + (static_cast<size_t>(ni) * c + ci) * h * w;
    }

    float* image(int ni) { return data.data() + static_cast<size_t>(ni) * c * h * w; }
    const float* image(int ni) const {
        return data.data() + static_cast<size_t>(ni) * c * h * w;
    }

    // Copy of image ni as a (1, C, H, W) tensor.
    Tensor slice_image(int ni) const;
};

// Throws std::invalid_argument naming the op and both shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

bool all_finite(const Tensor& t);
bool all_finite(const std::vector<float>& v);

}  // namespace chunksr
