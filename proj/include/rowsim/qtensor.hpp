#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace rowsim {

// Round-to-nearest with ties to even, then saturate to int8. All quantized
// paths in the model funnel through this so the rounding behaviour is defined
// in exactly one place.
inline std::int8_t saturate_round_int8(double value) {
    if (!std::isfinite(value))
        throw std::invalid_argument("quantize: non-finite value");
    const double r = std::nearbyint(value); // FE_TONEAREST: half to even
    if (r <= -128.0) return std::int8_t{-128};
    if (r >= 127.0) return std::int8_t{127};
    return static_cast<std::int8_t>(r);
}

// Symmetric per-tensor int8 tensor: value = data[i] * scale, zero point 0.
// dims are semantic per layer (documented at each use site), row-major data.
struct QTensor {
    std::vector<std::int64_t> dims;
    std::vector<std::int8_t> data;
    double scale = 1.0;

    QTensor() = default;
    QTensor(std::vector<std::int64_t> d, double s)
        : dims(std::move(d)), data(element_count(dims)), scale(s) {
        check();
    }
    QTensor(std::vector<std::int64_t> d, std::vector<std::int8_t> values, double s)
        : dims(std::move(d)), data(std::move(values)), scale(s) {
        check();
    }

    static std::int64_t element_count(const std::vector<std::int64_t>& dims) {
        std::int64_t n = 1;
        for (auto e : dims) {
            if (e < 0) throw std::invalid_argument("QTensor: negative extent");
            n *= e;
        }
        return n;
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

    double dequant(std::int64_t i) const { return data[static_cast<std::size_t>(i)] * scale; }

    std::vector<double> dequantize() const {
        std::vector<double> out(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i] * scale;
        return out;
    }

    void check() const {
        if (dims.empty() || dims.size() > 4)
            throw std::invalid_argument("QTensor: 1 to 4 axes required");
        if (element_count(dims) != static_cast<std::int64_t>(data.size()))
            throw std::invalid_argument("QTensor: data length does not match dims");
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw std::invalid_argument("QTensor: scale must be positive and finite");
    }
};

// Quantize real values with round-half-to-even and saturation.
inline QTensor quantize(const std::vector<double>& values,
                        double scale,
                        std::vector<std::int64_t> dims = {}) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("quantize: scale must be positive and finite");
    if (dims.empty()) dims = {static_cast<std::int64_t>(values.size())};
    QTensor t(std::move(dims), scale);
    if (t.size() != static_cast<std::int64_t>(values.size()))
        throw std::invalid_argument("quantize: dims do not match value count");
    for (std::size_t i = 0; i < values.size(); ++i)
        t.data[i] = saturate_round_int8(values[i] / scale);
    return t;
}

// Rescale a 32-bit accumulator carrying scale `acc_scale` to an int8 value at
// `out_scale`.
inline std::int8_t requantize_acc(std::int32_t acc, double acc_scale, double out_scale) {
    return saturate_round_int8(static_cast<double>(acc) * (acc_scale / out_scale));
}

inline QTensor requantize(const std::vector<std::int32_t>& acc,
                          std::vector<std::int64_t> dims,
                          double acc_scale,
                          double out_scale) {
    QTensor t(std::move(dims), out_scale);
    if (t.size() != static_cast<std::int64_t>(acc.size()))
        throw std::invalid_argument("requantize: dims do not match accumulator count");
    const double f = acc_scale / out_scale;
    for (std::size_t i = 0; i < acc.size(); ++i)
        t.data[i] = saturate_round_int8(static_cast<double>(acc[i]) * f);
    return t;
}

// Output scale calibrated from the max-abs real value of an accumulator
// tensor; 1.0 for an all-zero tensor so downstream math stays defined.
inline double calibrate_scale(const std::vector<std::int32_t>& acc, double acc_scale) {
    std::int64_t maxa = 0;
    for (auto v : acc) maxa = std::max<std::int64_t>(maxa, std::abs(static_cast<std::int64_t>(v)));
    if (maxa == 0) return 1.0;
    return static_cast<double>(maxa) * acc_scale / 127.0;
}

// Deterministic int8 stream. mt19937_64 masked to a byte is exactly uniform
// (256 divides 2^64) and avoids distribution-object portability quirks.
class Int8Stream {
public:
    explicit Int8Stream(std::uint64_t seed) : rng_(seed) {}
    std::int8_t next() {
        return static_cast<std::int8_t>(static_cast<int>(rng_() & 0xFF) - 128);
    }
    QTensor tensor(std::vector<std::int64_t> dims, double scale) {
        QTensor t(std::move(dims), scale);
        for (auto& v : t.data) v = next();
        return t;
    }

private:
    std::mt19937_64 rng_;
};

} // namespace rowsim
