#include "sbv/refine.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "sbv/threading.hpp"

namespace sbv {

void WlsParams::validate() const {
    if (lambda < 0.0) throw ParamError("wls lambda must be >= 0");
    if (!(sigma_color > 0.0)) throw ParamError("wls sigma_color must be > 0");
    if (num_iterations < 1) throw ParamError("wls num_iterations must be >= 1");
}

DisparityMap fill_invalid(const DisparityMap& disp) {
    if (disp.width < 1 || disp.height < 1) throw DimensionError("disparity map is empty");

    const int width = disp.width, height = disp.height;
    DisparityMap out = disp;
    std::vector<char> row_has_valid(static_cast<std::size_t>(height), 0);
    bool any_valid = false;

    for (int v = 0; v < height; ++v) {
        // Nearest valid to the left.
        float last = invalid_value();
        for (int u = 0; u < width; ++u) {
            const float x = disp.at(u, v);
            if (is_valid(x))
                last = x;
            else if (is_valid(last))
                out.at(u, v) = last;
        }
        if (is_valid(last)) {
            row_has_valid[static_cast<std::size_t>(v)] = 1;
            any_valid = true;
            // Leading gap falls back to the nearest valid on the right.
            float next = invalid_value();
            for (int u = width - 1; u >= 0; --u) {
                const float x = disp.at(u, v);
                if (is_valid(x))
                    next = x;
                else if (is_invalid(out.at(u, v)))
                    out.at(u, v) = next;
            }
        }
    }
    if (!any_valid) throw NoDataError("disparity map has no valid pixels to fill from");

    for (int v = 0; v < height; ++v) {
        if (row_has_valid[static_cast<std::size_t>(v)]) continue;
        int src = -1;
        for (int delta = 1; delta < height; ++delta) {
            if (v - delta >= 0 && row_has_valid[static_cast<std::size_t>(v - delta)]) {
                src = v - delta;  // upper row wins a distance tie
                break;
            }
            if (v + delta < height && row_has_valid[static_cast<std::size_t>(v + delta)]) {
                src = v + delta;
                break;
            }
        }
        for (int u = 0; u < width; ++u) out.at(u, v) = out.at(u, src);
    }
    return out;
}

namespace {

// Guide weights exp(-|dI| / sigma) looked up per absolute intensity difference.
std::array<double, 256> weight_table(double sigma_color) {
    std::array<double, 256> lut;
    for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = std::exp(-i / sigma_color);
    return lut;
}

// Solve (diag(m) + lam * L_line) x = m .* data for one scan line, where the
// current estimate y supplies the expansion point: x = y + e with
//   (M + lam L) e = m .* (data - y) - lam L y.
// Solving for the correction keeps constant inputs bit-exact fixed points
// (zero right-hand side stays exactly zero through the sweeps).
// line_y: current estimate; line_d: data values, or nullptr when the line is
// anchored to the estimate itself (dense chained sweep, zero data residual);
// line_m: data weights (0/1, all 1 when line_d is null); w[i]: smoothness
// weight between i and i+1 (n-1 entries). Updates line_y in place.
void solve_line(double* line_y, const float* line_d, const unsigned char* line_m, const double* w,
                int n, double lam, std::vector<double>& diag, std::vector<double>& rhs,
                std::vector<double>& cprime) {
    if (n == 1) {
        // No smoothness term. Dense sweeps are the identity here; a masked
        // single pixel only reaches this point when it carries data.
        if (line_d && line_m[0]) line_y[0] = line_d[0];
        return;
    }
    for (int i = 0; i < n; ++i) {
        const double wl = i > 0 ? w[i - 1] : 0.0;
        const double wr = i < n - 1 ? w[i] : 0.0;
        const double m = line_m[i];
        diag[static_cast<std::size_t>(i)] = m + lam * (wl + wr);
        // Invalid pixels carry the sentinel in line_d; gate on the mask
        // instead of multiplying so 0 * NaN cannot poison the sweep.
        double r = (line_d && line_m[i]) ? static_cast<double>(line_d[i]) - line_y[i] : 0.0;
        if (i > 0) r += lam * wl * (line_y[i - 1] - line_y[i]);
        if (i < n - 1) r += lam * wr * (line_y[i + 1] - line_y[i]);
        rhs[static_cast<std::size_t>(i)] = r;
    }
    // Thomas elimination with sub/super diagonals -lam*w.
    double denom = diag[0];
    cprime[0] = -lam * w[0] / denom;
    rhs[0] /= denom;
    for (int i = 1; i < n; ++i) {
        const double sub = -lam * w[i - 1];
        denom = diag[static_cast<std::size_t>(i)] - sub * cprime[static_cast<std::size_t>(i - 1)];
        if (i < n - 1) cprime[static_cast<std::size_t>(i)] = -lam * w[i] / denom;
        rhs[static_cast<std::size_t>(i)] =
            (rhs[static_cast<std::size_t>(i)] - sub * rhs[static_cast<std::size_t>(i - 1)]) / denom;
    }
    double e = rhs[static_cast<std::size_t>(n - 1)];
    line_y[n - 1] += e;
    for (int i = n - 2; i >= 0; --i) {
        e = rhs[static_cast<std::size_t>(i)] - cprime[static_cast<std::size_t>(i)] * e;
        line_y[i] += e;
    }
}

}  // namespace

DisparityMap wls_filter(const DisparityMap& disp, const GrayImage& guide, const WlsParams& params,
                        int threads) {
    params.validate();
    if (disp.width != guide.width || disp.height != guide.height)
        throw DimensionError("disparity and guide image sizes differ");
    if (disp.count_valid() == 0) throw NoDataError("disparity map has no valid pixels");

    if (params.lambda == 0.0) return fill_invalid(disp);  // pure data term

    const int width = disp.width, height = disp.height;
    const auto lut = weight_table(params.sigma_color);

    // Horizontal edge weights per row, vertical per column.
    std::vector<double> wh(static_cast<std::size_t>(width > 1 ? (width - 1) : 0) * height);
    std::vector<double> wv(static_cast<std::size_t>(width) * (height > 1 ? (height - 1) : 0));
    for (int v = 0; v < height; ++v)
        for (int u = 0; u + 1 < width; ++u)
            wh[static_cast<std::size_t>(v) * (width - 1) + u] =
                lut[static_cast<std::size_t>(std::abs(guide.at(u, v) - guide.at(u + 1, v)))];
    for (int v = 0; v + 1 < height; ++v)
        for (int u = 0; u < width; ++u)
            wv[static_cast<std::size_t>(v) * width + u] =
                lut[static_cast<std::size_t>(std::abs(guide.at(u, v) - guide.at(u, v + 1)))];

    std::vector<unsigned char> mask(disp.values.size());
    std::vector<char> row_has_valid(static_cast<std::size_t>(height), 0);
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            const bool ok = is_valid(disp.at(u, v));
            mask[static_cast<std::size_t>(v) * width + u] = ok ? 1 : 0;
            if (ok) row_has_valid[static_cast<std::size_t>(v)] = 1;
        }
    const std::vector<unsigned char> ones(disp.values.size(), 1);

    // Expansion point for the first masked sweep; rows without data keep their
    // filled values there and get refined by the later dense sweeps.
    const DisparityMap seeded = fill_invalid(disp);
    std::vector<double> y(seeded.values.begin(), seeded.values.end());
    std::vector<float> data(disp.values.begin(), disp.values.end());

    const int rounds = params.num_iterations;
    // Geometric split of the total lambda: lambda_t = 1.5 * lambda * 4^(T-t) / (4^T - 1).
    std::vector<double> lam_rounds(static_cast<std::size_t>(rounds));
    {
        const double denom = std::pow(4.0, rounds) - 1.0;
        for (int t = 1; t <= rounds; ++t)
            lam_rounds[static_cast<std::size_t>(t - 1)] =
                1.5 * params.lambda * std::pow(4.0, rounds - t) / denom;
    }

    auto horizontal_pass = [&](double lam, bool masked) {
        parallel_chunks(height, threads, [&, lam, masked](int v0, int v1) {
            std::vector<double> diag(static_cast<std::size_t>(width)),
                rhs(static_cast<std::size_t>(width)), cp(static_cast<std::size_t>(width));
            std::vector<double> yrow(static_cast<std::size_t>(width));
            for (int v = v0; v < v1; ++v) {
                if (masked && !row_has_valid[static_cast<std::size_t>(v)]) continue;
                const std::size_t base = static_cast<std::size_t>(v) * width;
                for (int u = 0; u < width; ++u) yrow[static_cast<std::size_t>(u)] = y[base + u];
                solve_line(yrow.data(), masked ? data.data() + base : nullptr,
                           (masked ? mask.data() : ones.data()) + base,
                           wh.data() + static_cast<std::size_t>(v) * (width > 1 ? width - 1 : 0),
                           width, lam, diag, rhs, cp);
                for (int u = 0; u < width; ++u) y[base + u] = yrow[static_cast<std::size_t>(u)];
            }
        });
    };

    auto vertical_pass = [&](double lam) {
        parallel_chunks(width, threads, [&, lam](int u0, int u1) {
            std::vector<double> diag(static_cast<std::size_t>(height)),
                rhs(static_cast<std::size_t>(height)), cp(static_cast<std::size_t>(height));
            std::vector<double> ycol(static_cast<std::size_t>(height));
            std::vector<double> wcol(static_cast<std::size_t>(height > 1 ? height - 1 : 0));
            for (int u = u0; u < u1; ++u) {
                for (int v = 0; v < height; ++v)
                    ycol[static_cast<std::size_t>(v)] = y[static_cast<std::size_t>(v) * width + u];
                for (int v = 0; v + 1 < height; ++v)
                    wcol[static_cast<std::size_t>(v)] = wv[static_cast<std::size_t>(v) * width + u];
                solve_line(ycol.data(), nullptr, ones.data(), wcol.data(), height, lam, diag, rhs,
                           cp);
                for (int v = 0; v < height; ++v)
                    y[static_cast<std::size_t>(v) * width + u] = ycol[static_cast<std::size_t>(v)];
            }
        });
    };

    for (int t = 0; t < rounds; ++t) {
        const double lam = lam_rounds[static_cast<std::size_t>(t)];
        horizontal_pass(lam, /*masked=*/t == 0);
        vertical_pass(lam);
    }

    DisparityMap out(width, height);
    for (std::size_t i = 0; i < y.size(); ++i) out.values[i] = static_cast<float>(y[i]);
    return out;
}

}  // namespace sbv
