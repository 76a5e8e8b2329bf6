#include "moira/tensor.hpp"

#include "moira/common.hpp"
#include "moira/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace moira {

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> data) {
    Tensor2 t;
    t.rows = data.size();
    t.cols = data.size() ? data.begin()->size() : 0;
    t.values.reserve(t.rows * t.cols);
    for (const auto& r : data) {
        if (r.size() != t.cols)
            fail_runtime("from_rows: ragged initializer (expected %zu cols, got %zu)",
                         t.cols, r.size());
        t.values.insert(t.values.end(), r.begin(), r.end());
    }
    return t;
}

Tensor2 Tensor2::row_vector(std::initializer_list<double> data) {
    Tensor2 t(1, data.size());
    std::copy(data.begin(), data.end(), t.values.begin());
    return t;
}

bool Tensor2::all_finite() const {
    for (double x : values)
        if (!std::isfinite(x)) return false;
    return true;
}

Tensor2 transposed(const Tensor2& a) {
    Tensor2 out(a.cols, a.rows);
    kernels::active().transpose(out.data(), a.data(), a.rows, a.cols);
    return out;
}

double cosine_sim(const Tensor2& a, const Tensor2& b) {
    if (a.size() != b.size())
        fail_runtime("cosine_sim: element counts differ (%zu vs %zu)", a.size(), b.size());
    if (a.size() == 0) fail_runtime("cosine_sim: empty input");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    const double denom = std::max(std::sqrt(na) * std::sqrt(nb), kCosineNormFloor);
    return dot / denom;
}

} // namespace moira
