#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prognos/numeric.hpp"
#include "prognos/rng.hpp"

using namespace prognos;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (auto& v : m.values) v = rng.next_uniform(-2.0, 2.0);
    return m;
}

}  // namespace

TEST_CASE("matmul basics") {
    Matrix b(3, 2);
    b.values = {1, 2, 3, 4, 5, 6};

    SECTION("identity leaves the operand unchanged") {
        const Matrix out = matmul(identity(3), b);
        REQUIRE(out.values == b.values);
    }
    SECTION("hand-multiplied 2x2 by 2x1") {
        Matrix a(2, 2);
        a.values = {1, 2, 3, 4};
        Matrix v(2, 1);
        v.values = {5, 6};
        const Matrix out = matmul(a, v);
        REQUIRE(out.rows == 2);
        REQUIRE(out.cols == 1);
        REQUIRE(out.values[0] == 17.0);
        REQUIRE(out.values[1] == 39.0);
    }
    SECTION("zero matrix annihilates") {
        const Matrix out = matmul(Matrix(4, 3), b);
        for (double v : out.values) REQUIRE(v == 0.0);
    }
    SECTION("dimension mismatch throws") {
        REQUIRE_THROWS_AS(matmul(b, b), std::invalid_argument);
    }
}

TEST_CASE("matmul is associative to 1e-10 on random matrices") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 4, 3);
        const Matrix b = random_matrix(rng, 3, 5);
        const Matrix c = random_matrix(rng, 5, 2);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.values.size(); ++i)
            REQUIRE(std::abs(left.values[i] - right.values[i]) < 1e-10);
    }
}

TEST_CASE("activations") {
    Matrix x(1, 3);
    x.values = {0.0, 2.0, -100.0};
    const Matrix s = activate(x, Activation::sigmoid);
    REQUIRE(s.values[0] == 0.5);
    // high-precision reference value for sigmoid(2)
    REQUIRE(s.values[1] == Catch::Approx(0.8807970779778824).epsilon(1e-15));
    REQUIRE(s.values[2] >= 0.0);
    REQUIRE(s.values[2] < 1e-40);

    const Matrix t = activate(x, Activation::tanh);
    REQUIRE(t.values[0] == 0.0);
    REQUIRE(t.values[2] >= -1.0);
    for (double v : s.values) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("splitmix64 stream is pinned") {
    // reference outputs computed from the published splitmix64 constants
    Rng rng(42);
    REQUIRE(rng.next_u64() == 0xBDD732262FEB6E95ULL);
    REQUIRE(rng.next_u64() == 0x28EFE333B266F103ULL);
    REQUIRE(rng.next_u64() == 0x47526757130F9F52ULL);
    Rng rng1(1);
    REQUIRE(rng1.next_u64() == 0x910A2DEC89025CC1ULL);

    Rng a(9001), b(9001);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng d(42);
    REQUIRE(d.next_double() == 0.7415648787718233);
    REQUIRE(d.next_double() == 0.1599103928769201);
}

TEST_CASE("derive_seed separates substreams") {
    const auto k1 = derive_seed(5, 1, 10, 0);
    const auto k2 = derive_seed(5, 1, 10, 1);
    const auto k3 = derive_seed(5, 2, 10, 0);
    REQUIRE(k1 != k2);
    REQUIRE(k1 != k3);
    REQUIRE(derive_seed(5, 1, 10, 0) == k1);
}

TEST_CASE("sample_mask") {
    SECTION("rate 0 gives all ones") {
        Rng rng(3);
        const auto m = sample_mask(rng, 64, 0.0);
        for (double v : m) REQUIRE(v == 1.0);
    }
    SECTION("nonzero entries carry the inverted scale exactly") {
        Rng rng(3);
        const auto m = sample_mask(rng, 1000, 0.2);
        for (double v : m) REQUIRE((v == 0.0 || v == 1.25));
    }
    SECTION("empirical mean is 1 within 2% at rate 0.5") {
        Rng rng(11);
        const auto m = sample_mask(rng, 100000, 0.5);
        double sum = 0.0;
        for (double v : m) sum += v;
        const double mean = sum / static_cast<double>(m.size());
        REQUIRE(mean > 0.98);
        REQUIRE(mean < 1.02);
    }
    SECTION("rate >= 1 is rejected") {
        Rng rng(3);
        REQUIRE_THROWS_AS(sample_mask(rng, 4, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(sample_mask(rng, 4, -0.1), std::invalid_argument);
    }
    SECTION("same seed, same mask") {
        Rng a(77), b(77);
        REQUIRE(sample_mask(a, 256, 0.3) == sample_mask(b, 256, 0.3));
    }
}

TEST_CASE("quantile linear interpolation") {
    REQUIRE(quantile({1, 2, 3}, 0.5) == 2.0);
    REQUIRE(quantile({3, 1}, 0.5) == 2.0);
    // h = 0.1 * 10 = 1.0 exactly on the 11-point grid
    REQUIRE(quantile({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.10) == 1.0);
    REQUIRE(quantile({5.0}, 0.9) == 5.0);
    REQUIRE_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(quantile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("quantile is monotone in q") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(1 + rng.next_below(40));
        for (auto& x : v) x = rng.next_uniform(-10.0, 10.0);
        double q1 = rng.next_double();
        double q2 = rng.next_double();
        if (q1 > q2) std::swap(q1, q2);
        REQUIRE(quantile(v, q1) <= quantile(v, q2));
    }
}
