#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "rowsim/oracle.hpp"
#include "rowsim/qtensor.hpp"

using namespace rowsim;
using namespace rowsim::oracle;

namespace {

// Test-side scalar matmul, kept deliberately plain and separate from the
// library path it checks.
std::vector<std::int32_t> naive_matmul(const std::vector<std::int8_t>& a,
                                       const std::vector<std::int8_t>& b,
                                       std::int64_t m, std::int64_t k, std::int64_t n) {
    std::vector<std::int32_t> c(static_cast<std::size_t>(m * n), 0);
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            std::int32_t acc = 0;
            for (std::int64_t kk = 0; kk < k; ++kk)
                acc += static_cast<std::int32_t>(a[i * k + kk]) *
                       static_cast<std::int32_t>(b[j * k + kk]); // b row-major [n,k]
            c[static_cast<std::size_t>(i * n + j)] = acc;
        }
    return c;
}

QTensor random_tensor(std::vector<std::int64_t> dims, double scale, std::uint64_t seed) {
    Int8Stream s(seed);
    return s.tensor(std::move(dims), scale);
}

} // namespace

TEST_CASE("softmax_row") {
    SECTION("equal logits give a uniform row") {
        const auto p = softmax_row({3.5, 3.5, 3.5});
        for (double v : p) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    }
    SECTION("a 20+ gap saturates") {
        const auto p = softmax_row({25.0, 1.0});
        REQUIRE(p[0] > 1.0 - 1e-9);
        REQUIRE(p[1] < 1e-9);
    }
    SECTION("sums to one for 1000 random rows") {
        std::mt19937_64 rng(99);
        for (int it = 0; it < 1000; ++it) {
            const std::size_t n = 1 + rng() % 64;
            std::vector<double> row(n);
            for (auto& v : row) v = (static_cast<double>(rng() % 20001) - 10000.0) / 250.0;
            const auto p = softmax_row(row);
            double sum = 0.0;
            for (double v : p) {
                REQUIRE(v >= 0.0);
                sum += v;
            }
            REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
        }
    }
    SECTION("non-finite entries rejected") {
        REQUIRE_THROWS_AS(softmax_row({1.0, INFINITY}), std::invalid_argument);
    }
}

TEST_CASE("gelu table") {
    SECTION("zero maps to zero") {
        const auto table = build_gelu_table(1.0 / 64.0, 1.0 / 64.0);
        REQUIRE(static_cast<int>(gelu_lut(0, table)) == 0);
    }
    SECTION("large positive x passes through within one step") {
        const double s = 1.0 / 32.0; // domain reaches ~4 where erf has saturated
        const auto table = build_gelu_table(s, s);
        for (int x = 112; x <= 127; ++x)
            REQUIRE(std::abs(static_cast<int>(gelu_lut(static_cast<std::int8_t>(x), table)) - x) <= 1);
    }
    SECTION("x = -1.0 lands at the erf value") {
        const double s = 1.0 / 64.0;
        const auto table = build_gelu_table(s, s);
        // -1 * Phi(-1) = -0.158655..., / (1/64) = -10.15 -> -10
        const double expect = -1.0 * 0.5 * (1.0 + std::erf(-1.0 / std::sqrt(2.0)));
        REQUIRE(static_cast<int>(gelu_lut(-64, table)) ==
                static_cast<int>(saturate_round_int8(expect / s)));
        REQUIRE(static_cast<int>(gelu_lut(-64, table)) == -10);
    }
    SECTION("table entries stay within one step of the real function") {
        const double s_in = 1.0 / 48.0, s_out = 1.0 / 40.0;
        const auto table = build_gelu_table(s_in, s_out);
        for (int i = -128; i <= 127; ++i) {
            const double exact = gelu_ref(i * s_in);
            const double got = static_cast<int>(gelu_lut(static_cast<std::int8_t>(i), table)) * s_out;
            REQUIRE(std::abs(got - exact) <= s_out / 2.0 + 1e-12);
        }
    }
    SECTION("monotone non-decreasing on the non-negative domain") {
        // Exact GELU dips on [-2, -0.75], so global int8 monotonicity cannot
        // hold for fine input scales; the non-negative half is monotone.
        const auto table = build_gelu_table(1.0 / 64.0, 1.0 / 64.0);
        for (int i = 0; i < 127; ++i)
            REQUIRE(static_cast<int>(gelu_lut(static_cast<std::int8_t>(i + 1), table)) >=
                    static_cast<int>(gelu_lut(static_cast<std::int8_t>(i), table)));
    }
}

TEST_CASE("layernorm_row") {
    SECTION("constant row returns beta") {
        const std::vector<std::int8_t> row(8, 42);
        const std::vector<double> gamma(8, 1.0), beta(8, 0.0);
        const auto out = layernorm_row(row, 0.1, gamma, beta, 0.01);
        for (auto v : out) REQUIRE(static_cast<int>(v) == 0);

        const std::vector<double> beta2(8, 0.5);
        const auto out2 = layernorm_row(row, 0.1, gamma, beta2, 0.01);
        for (auto v : out2) REQUIRE(static_cast<int>(v) == 50);
    }
    SECTION("row [-1, 1] is its own normalization") {
        const double s = 1.0 / 127.0;
        const std::vector<std::int8_t> row{-127, 127}; // dequantizes to [-1, 1]
        const auto out = layernorm_row(row, s, {1.0, 1.0}, {0.0, 0.0}, s);
        REQUIRE(static_cast<int>(out[0]) == -127);
        REQUIRE(static_cast<int>(out[1]) == 127);
    }
    SECTION("pre-requantization mean is zero for random rows") {
        std::mt19937_64 rng(3);
        for (int it = 0; it < 200; ++it) {
            const std::size_t n = 2 + rng() % 96;
            std::vector<std::int8_t> row(n);
            for (auto& v : row) v = static_cast<std::int8_t>(static_cast<int>(rng() & 0xFF) - 128);
            const std::vector<double> gamma(n, 1.0), beta(n, 0.0);
            const auto real = layernorm_row_real(row, 0.05, gamma, beta);
            double mean = 0.0;
            for (double v : real) mean += v;
            mean /= static_cast<double>(n);
            REQUIRE(std::abs(mean) < 1e-6);
        }
    }
    SECTION("rows shorter than two are rejected") {
        REQUIRE_THROWS_AS(layernorm_row({1}, 1.0, {1.0}, {0.0}, 1.0), std::invalid_argument);
    }
}

TEST_CASE("residual_add") {
    SECTION("adding zeros is the identity at matched scales") {
        const QTensor a = random_tensor({4, 4}, 0.1, 8);
        QTensor z({4, 4}, 0.1);
        const QTensor out = residual_add(a, z);
        REQUIRE(out.data == a.data);
        REQUIRE(out.scale == a.scale);
    }
    SECTION("a + a doubles with saturation") {
        QTensor a({5}, std::vector<std::int8_t>{-128, -100, 0, 64, 127}, 0.25);
        const QTensor out = residual_add(a, a, 0.25);
        REQUIRE(out.data == std::vector<std::int8_t>{-128, -128, 0, 127, 127});
    }
    SECTION("commutes") {
        const QTensor a = random_tensor({3, 7}, 0.07, 21);
        const QTensor b = random_tensor({3, 7}, 0.11, 22);
        const QTensor ab = residual_add(a, b);
        const QTensor ba = residual_add(b, a);
        REQUIRE(ab.data == ba.data);
        REQUIRE(ab.scale == ba.scale);
    }
    SECTION("dims must match") {
        const QTensor a = random_tensor({2, 3}, 0.1, 1);
        const QTensor b = random_tensor({3, 2}, 0.1, 2);
        REQUIRE_THROWS_AS(residual_add(a, b), std::invalid_argument);
    }
}

TEST_CASE("oracle_conv4x4") {
    SECTION("all-zero input annihilates") {
        QTensor in({8, 8, 3}, 0.5);
        const QTensor w = random_tensor({4, 4, 4, 3}, 0.5, 13);
        const auto out = oracle_conv4x4(in, w);
        for (auto v : out.acc) REQUIRE(v == 0);
        for (auto v : out.tensor.data) REQUIRE(v == 0);
    }
    SECTION("ones give the patch size") {
        QTensor in({4, 4, 3}, std::vector<std::int8_t>(48, 1), 1.0);
        QTensor w({1, 4, 4, 3}, std::vector<std::int8_t>(48, 1), 1.0);
        const auto out = oracle_conv4x4(in, w);
        REQUIRE(out.acc.size() == 1);
        REQUIRE(out.acc[0] == 48);
    }
    SECTION("full-resolution shape") {
        const QTensor in = random_tensor({224, 224, 3}, 0.02, 31);
        const QTensor w = random_tensor({96, 4, 4, 3}, 0.01, 32);
        const auto out = oracle_conv4x4(in, w);
        REQUIRE(out.dims == std::vector<std::int64_t>{56, 56, 96});
    }
    SECTION("dimension mismatch is an error") {
        const QTensor in = random_tensor({8, 8, 3}, 0.1, 1);
        const QTensor w = random_tensor({4, 4, 4, 2}, 0.1, 2);
        REQUIRE_THROWS_AS(oracle_conv4x4(in, w), std::invalid_argument);
        const QTensor odd = random_tensor({6, 8, 3}, 0.1, 3);
        const QTensor w3 = random_tensor({4, 4, 4, 3}, 0.1, 4);
        REQUIRE_THROWS_AS(oracle_conv4x4(odd, w3), std::invalid_argument);
    }
    SECTION("equals oracle_fc on im2col rows, accumulator-exact") {
        std::mt19937_64 rng(77);
        for (int it = 0; it < 50; ++it) {
            const std::int64_t h = 4 * (1 + static_cast<std::int64_t>(rng() % 6));
            const std::int64_t w = 4 * (1 + static_cast<std::int64_t>(rng() % 6));
            const std::int64_t c = 1 + static_cast<std::int64_t>(rng() % 4);
            const std::int64_t co = 1 + static_cast<std::int64_t>(rng() % 8);
            const QTensor in = random_tensor({h, w, c}, 0.03, rng());
            const QTensor kw = random_tensor({co, 4, 4, c}, 0.02, rng());
            const auto conv = oracle_conv4x4(in, kw);

            const QTensor rows = im2col_patches(in);
            QTensor wmat({co, 16 * c}, kw.data, kw.scale); // same memory order
            const auto fc = oracle_fc(rows, wmat);
            REQUIRE(conv.acc == fc.acc);
        }
    }
}

TEST_CASE("oracle_fc") {
    SECTION("width-one identity") {
        QTensor in({3, 1}, std::vector<std::int8_t>{5, -7, 19}, 1.0);
        QTensor w({1, 1}, std::vector<std::int8_t>{1}, 1.0);
        const auto out = oracle_fc(in, w, Activation::None, 1.0);
        REQUIRE(out.acc == std::vector<std::int32_t>{5, -7, 19});
        REQUIRE(out.tensor.data == in.data);
    }
    SECTION("hand dot product") {
        QTensor in({1, 4}, std::vector<std::int8_t>{1, 2, 3, 4}, 1.0);
        QTensor w({1, 4}, std::vector<std::int8_t>{1, 1, 1, 1}, 1.0);
        const auto out = oracle_fc(in, w);
        REQUIRE(out.acc == std::vector<std::int32_t>{10});
    }
    SECTION("seed-42 case matches the scalar triple loop") {
        const QTensor in = random_tensor({7, 96}, 0.05, 42);
        const QTensor w = random_tensor({96, 96}, 0.05, 43);
        const auto out = oracle_fc(in, w);
        REQUIRE(out.acc == naive_matmul(in.data, w.data, 7, 96, 96));
    }
    SECTION("1000 random instances match the scalar triple loop") {
        std::mt19937_64 rng(1000);
        for (int it = 0; it < 1000; ++it) {
            const std::int64_t t = 1 + static_cast<std::int64_t>(rng() % 32);
            const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 32);
            const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 32);
            const QTensor in = random_tensor({t, k}, 0.1, rng());
            const QTensor w = random_tensor({n, k}, 0.1, rng());
            REQUIRE(oracle_fc(in, w).acc == naive_matmul(in.data, w.data, t, k, n));
        }
    }
    SECTION("gelu activation applies the table to the requantized output") {
        const QTensor in = random_tensor({3, 16}, 0.05, 9);
        const QTensor w = random_tensor({8, 16}, 0.05, 10);
        const auto plain = oracle_fc(in, w);
        const auto acted = oracle_fc(in, w, Activation::Gelu);
        REQUIRE(plain.acc == acted.acc); // accumulators are pre-activation
        const auto table = build_gelu_table(plain.tensor.scale, plain.tensor.scale);
        for (std::size_t i = 0; i < plain.tensor.data.size(); ++i)
            REQUIRE(acted.tensor.data[i] == gelu_lut(plain.tensor.data[i], table));
    }
    SECTION("inner dimension mismatch is an error") {
        const QTensor in = random_tensor({2, 8}, 0.1, 1);
        const QTensor w = random_tensor({4, 9}, 0.1, 2);
        REQUIRE_THROWS_AS(oracle_fc(in, w), std::invalid_argument);
    }
}

TEST_CASE("oracle_attention_window") {
    SECTION("single token attends only to itself") {
        const QTensor q = random_tensor({1, 8}, 0.1, 50);
        const QTensor k = random_tensor({1, 8}, 0.1, 51);
        const QTensor v = random_tensor({1, 8}, 0.1, 52);
        const auto r = oracle_attention_window(q, k, v, v.scale);
        REQUIRE_THAT(r.probs[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
        // A_q = 127 at scale 1/127, so the output requantizes back to V's row
        REQUIRE(r.output.tensor.data == v.data);
    }
    SECTION("identical K rows give uniform attention") {
        const std::int64_t t = 6, d = 8;
        const QTensor q = random_tensor({t, d}, 0.1, 60);
        QTensor k({t, d}, 0.1);
        const QTensor krow = random_tensor({1, d}, 0.1, 61);
        for (std::int64_t i = 0; i < t; ++i)
            for (std::int64_t e = 0; e < d; ++e) k.data[i * d + e] = krow.data[e];
        const QTensor v = random_tensor({t, d}, 0.1, 62);
        const auto r = oracle_attention_window(q, k, v);
        for (std::int64_t i = 0; i < t; ++i)
            for (std::int64_t j = 0; j < t; ++j)
                REQUIRE_THAT(r.probs[i * t + j],
                             Catch::Matchers::WithinAbs(1.0 / static_cast<double>(t), 1e-12));
    }
    SECTION("seed-7 case matches an independent scalar evaluation") {
        const std::int64_t t = 49, d = 32;
        const QTensor q = random_tensor({t, d}, 0.04, 7);
        const QTensor k = random_tensor({t, d}, 0.04, 8);
        const QTensor v = random_tensor({t, d}, 0.05, 9);
        const auto r = oracle_attention_window(q, k, v);

        // scores straight from the definition
        const auto scores = naive_matmul(q.data, k.data, t, d, t);
        REQUIRE(r.score_acc == scores);
        // probabilities via a locally written softmax
        for (std::int64_t i = 0; i < t; ++i) {
            std::vector<double> row(static_cast<std::size_t>(t));
            double m = -1e300;
            for (std::int64_t j = 0; j < t; ++j) {
                row[j] = scores[i * t + j] * q.scale * k.scale / std::sqrt(static_cast<double>(d));
                m = std::max(m, row[j]);
            }
            double sum = 0.0;
            for (auto& x : row) {
                x = std::exp(x - m);
                sum += x;
            }
            for (std::int64_t j = 0; j < t; ++j) {
                REQUIRE_THAT(r.probs[i * t + j], Catch::Matchers::WithinAbs(row[j] / sum, 1e-12));
            }
        }
        // aggregation from the quantized probabilities
        std::vector<std::int32_t> av(static_cast<std::size_t>(t * d), 0);
        for (std::int64_t i = 0; i < t; ++i)
            for (std::int64_t e = 0; e < d; ++e) {
                std::int32_t acc = 0;
                for (std::int64_t j = 0; j < t; ++j)
                    acc += static_cast<std::int32_t>(r.probs_q.data[i * t + j]) *
                           static_cast<std::int32_t>(v.data[j * d + e]);
                av[i * d + e] = acc;
            }
        REQUIRE(r.output.acc == av);
    }
    SECTION("probability rows are non-negative and sum to one") {
        std::mt19937_64 rng(70);
        for (int it = 0; it < 200; ++it) {
            const std::int64_t t = 1 + static_cast<std::int64_t>(rng() % 16);
            const std::int64_t d = 1 + static_cast<std::int64_t>(rng() % 16);
            const auto r = oracle_attention_window(random_tensor({t, d}, 0.05, rng()),
                                                   random_tensor({t, d}, 0.05, rng()),
                                                   random_tensor({t, d}, 0.05, rng()));
            for (std::int64_t i = 0; i < t; ++i) {
                double sum = 0.0;
                for (std::int64_t j = 0; j < t; ++j) {
                    REQUIRE(r.probs[i * t + j] >= 0.0);
                    sum += r.probs[i * t + j];
                }
                REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
            }
        }
    }
    SECTION("zero-width heads are rejected") {
        QTensor q({2, 0}, 0.1), k({2, 0}, 0.1), v({2, 0}, 0.1);
        REQUIRE_THROWS_AS(oracle_attention_window(q, k, v), std::invalid_argument);
    }
}
