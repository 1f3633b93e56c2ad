#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sbv/refine.hpp"

using namespace sbv;

namespace {

double total_variation(const DisparityMap& m) {
    double tv = 0.0;
    for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u) {
            if (u + 1 < m.width) tv += std::abs(m.at(u, v) - m.at(u + 1, v));
            if (v + 1 < m.height) tv += std::abs(m.at(u, v) - m.at(u, v + 1));
        }
    return tv;
}

// Dense solve of (M + lambda*L) x = M d for a tiny system, by Gaussian
// elimination with partial pivoting. Rows/cols index pixels row-major.
std::vector<double> dense_wls_oracle(const std::vector<double>& d, const std::vector<int>& mask,
                                     int width, int height, double lambda) {
    const int n = width * height;
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
    auto idx = [width](int u, int v) { return v * width + u; };
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            const int i = idx(u, v);
            auto& row = a[static_cast<std::size_t>(i)];
            row[static_cast<std::size_t>(i)] = mask[static_cast<std::size_t>(i)];
            row[static_cast<std::size_t>(n)] =
                mask[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
            const int nbors[4][2] = {{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}};
            for (const auto& nb : nbors) {
                if (nb[0] < 0 || nb[0] >= width || nb[1] < 0 || nb[1] >= height) continue;
                const int j = idx(nb[0], nb[1]);
                row[static_cast<std::size_t>(i)] += lambda;
                row[static_cast<std::size_t>(j)] -= lambda;
            }
        }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::abs(a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)]))
                piv = r;
        std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(piv)]);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                             a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c2 = col; c2 <= n; ++c2)
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c2)] -=
                    f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
        }
    }
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)] /
                                         a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    return x;
}

}  // namespace

TEST_CASE("fill_invalid fixtures") {
    DisparityMap a(3, 1);
    a.at(0, 0) = 5.0f;
    a.at(1, 0) = invalid_value();
    a.at(2, 0) = invalid_value();
    const DisparityMap fa = fill_invalid(a);
    CHECK(fa.at(0, 0) == 5.0f);
    CHECK(fa.at(1, 0) == 5.0f);
    CHECK(fa.at(2, 0) == 5.0f);

    DisparityMap b(2, 1);
    b.at(0, 0) = invalid_value();
    b.at(1, 0) = 7.0f;
    const DisparityMap fb = fill_invalid(b);
    CHECK(fb.at(0, 0) == 7.0f);
    CHECK(fb.at(1, 0) == 7.0f);

    DisparityMap c(4, 3, 2.5f);
    const DisparityMap fc = fill_invalid(c);
    CHECK(fc.values == c.values);

    CHECK_THROWS_AS(fill_invalid(DisparityMap(4, 4, invalid_value())), NoDataError);
}

TEST_CASE("fill_invalid: empty rows copy from the nearest non-empty row") {
    DisparityMap m(2, 4, invalid_value());
    m.at(0, 1) = 3.0f;  // row 1 is the only one with data
    m.at(1, 3) = 9.0f;  // row 3 has data too
    const DisparityMap f = fill_invalid(m);
    CHECK(f.at(0, 0) == 3.0f);  // row 0 copies row 1
    CHECK(f.at(1, 0) == 3.0f);
    CHECK(f.at(0, 2) == 3.0f);  // row 2 ties between rows 1 and 3, upper wins
    CHECK(f.at(0, 3) == 9.0f);
    for (float v : f.values) CHECK(is_valid(v));
}

TEST_CASE("wls: lambda 0 is the identity on valid pixels") {
    std::mt19937_64 rng(7);
    DisparityMap disp(16, 12);
    for (float& v : disp.values) v = static_cast<float>(rng() % 50);
    disp.at(4, 4) = invalid_value();
    GrayImage guide(16, 12, 100);
    WlsParams params;
    params.lambda = 0.0;
    const DisparityMap out = wls_filter(disp, guide, params);
    for (int v = 0; v < 12; ++v)
        for (int u = 0; u < 16; ++u) {
            if (is_valid(disp.at(u, v))) CHECK(out.at(u, v) == disp.at(u, v));
            CHECK(is_valid(out.at(u, v)));  // output is dense
        }
}

TEST_CASE("wls: constant maps are exact fixed points") {
    std::mt19937_64 rng(11);
    DisparityMap disp(20, 15, 12.25f);
    GrayImage guide(20, 15);
    for (auto& p : guide.pixels) p = static_cast<std::uint8_t>(rng() % 256);
    const DisparityMap out = wls_filter(disp, guide, WlsParams{});
    for (float v : out.values) CHECK(v == 12.25f);
}

TEST_CASE("wls: 1x3 gap fill matches the dense-solve oracle") {
    DisparityMap disp(3, 1);
    disp.at(0, 0) = 0.0f;
    disp.at(1, 0) = invalid_value();
    disp.at(2, 0) = 2.0f;
    const GrayImage guide(3, 1, 128);
    WlsParams params;
    params.lambda = 1e6;
    const DisparityMap out = wls_filter(disp, guide, params);

    CHECK(out.at(1, 0) > 0.0f);
    CHECK(out.at(1, 0) < 2.0f);

    // Oracle: exact minimizer of the full objective. At this lambda both the
    // oracle and the split-lambda sweeps collapse to the valid-pixel mean.
    const auto oracle =
        dense_wls_oracle({0.0, 0.0, 2.0}, {1, 0, 1}, 3, 1, params.lambda);
    CHECK(oracle[1] == doctest::Approx(1.0).epsilon(1e-9));
    for (int u = 0; u < 3; ++u)
        CHECK(std::abs(out.at(u, 0) - oracle[static_cast<std::size_t>(u)]) < 1e-3);
}

TEST_CASE("wls output stays inside the valid input range") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<float> val(3.0f, 17.0f);
    for (int trial = 0; trial < 5; ++trial) {
        DisparityMap disp(24, 18);
        GrayImage guide(24, 18);
        for (float& v : disp.values) v = val(rng);
        for (auto& p : guide.pixels) p = static_cast<std::uint8_t>(rng() % 256);
        for (int k = 0; k < 60; ++k)
            disp.values[rng() % disp.values.size()] = invalid_value();
        float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
        for (float v : disp.values)
            if (is_valid(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const DisparityMap out = wls_filter(disp, guide, WlsParams{});
        for (float v : out.values) {
            CHECK(v >= lo - 1e-6f);
            CHECK(v <= hi + 1e-6f);
        }
    }
}

TEST_CASE("wls: huge lambda on a uniform guide approaches the valid-pixel mean") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> val(10.0f, 20.0f);
    DisparityMap disp(48, 32);
    for (float& v : disp.values) v = val(rng);
    for (int k = 0; k < 300; ++k) disp.values[rng() % disp.values.size()] = invalid_value();

    double mean = 0.0;
    std::size_t n = 0;
    for (float v : disp.values)
        if (is_valid(v)) {
            mean += v;
            ++n;
        }
    mean /= static_cast<double>(n);

    GrayImage guide(48, 32, 140);
    WlsParams params;
    params.lambda = 1e6;
    const DisparityMap out = wls_filter(disp, guide, params);
    for (float v : out.values) CHECK(std::abs(v - mean) <= 0.01 * mean);
}

TEST_CASE("wls preserves a disparity step that coincides with a guide edge") {
    const int W = 32, H = 16, edge = 16;
    DisparityMap disp(W, H);
    GrayImage guide(W, H);
    for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u) {
            disp.at(u, v) = (u < edge) ? 10.0f : 20.0f;
            guide.at(u, v) = (u < edge) ? 0 : 128;
        }
    WlsParams params;  // lambda 8000, sigma_color 8
    const DisparityMap out = wls_filter(disp, guide, params);
    for (int v = 0; v < H; ++v) {
        const double step = out.at(edge, v) - out.at(edge - 1, v);
        CHECK(step >= 0.8 * 10.0);
    }
}

TEST_CASE("wls strictly decreases the total variation of a noisy constant map") {
    std::mt19937_64 rng(19);
    std::normal_distribution<float> noise(0.0f, 0.5f);
    DisparityMap disp(32, 24);
    for (float& v : disp.values) v = 10.0f + noise(rng);
    GrayImage guide(32, 24, 100);
    const DisparityMap out = wls_filter(disp, guide, WlsParams{});
    CHECK(total_variation(out) < total_variation(disp));
}

TEST_CASE("wls error paths") {
    CHECK_THROWS_AS(wls_filter(DisparityMap(8, 8, 1.0f), GrayImage(9, 8), WlsParams{}),
                    DimensionError);
    CHECK_THROWS_AS(wls_filter(DisparityMap(8, 8, invalid_value()), GrayImage(8, 8), WlsParams{}),
                    NoDataError);
    WlsParams bad;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(wls_filter(DisparityMap(8, 8, 1.0f), GrayImage(8, 8), bad), ParamError);
    bad = WlsParams{};
    bad.num_iterations = 0;
    CHECK_THROWS_AS(wls_filter(DisparityMap(8, 8, 1.0f), GrayImage(8, 8), bad), ParamError);
}

TEST_CASE("wls fills rows that carry no data at all") {
    DisparityMap disp(10, 6, 4.0f);
    for (int u = 0; u < 10; ++u) disp.at(u, 2) = invalid_value();  // a whole empty row
    GrayImage guide(10, 6, 90);
    const DisparityMap out = wls_filter(disp, guide, WlsParams{});
    for (int u = 0; u < 10; ++u) {
        CHECK(is_valid(out.at(u, 2)));
        CHECK(out.at(u, 2) == doctest::Approx(4.0).epsilon(1e-6));
    }
}
