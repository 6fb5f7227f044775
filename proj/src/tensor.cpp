#include "chunksr/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace chunksr {

std::string Tensor::shape_str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor Tensor::slice_image(int ni) const {
    Tensor out(1, c, h, w);
    std::memcpy(out.data.data(), image(ni), sizeof(float) * c * h * w);
    return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    a.shape_str() + " vs " + b.shape_str());
    }
}

bool all_finite(const Tensor& t) { return all_finite(t.data); }

bool all_finite(const std::vector<float>& v) {
    for (float x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace chunksr
