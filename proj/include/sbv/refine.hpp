#pragma once

#include "sbv/image.hpp"

namespace sbv {

struct WlsParams {
    double lambda = 8000.0;     ///< total smoothness weight, >= 0
    double sigma_color = 8.0;   ///< guide-edge sensitivity, intensity units, > 0
    int num_iterations = 3;     ///< alternating 1-D rounds, >= 1

    void validate() const;
};

/// Edge-preserving weighted-least-squares smoothing of a disparity map, guided
/// by the left image. Minimizes
///   sum_p m_p (x_p - d_p)^2 + lambda * sum_{p~q} w_pq (x_p - x_q)^2
/// with data mask m_p = 1 on valid pixels and 0 on invalid ones (those are
/// in-filled by the smoothness term alone) and 4-neighbor weights
/// w_pq = exp(-|I_p - I_q| / sigma_color).
///
/// Solved by alternating horizontal/vertical tridiagonal sweeps; the total
/// lambda is split across num_iterations rounds on a geometrically decaying
/// schedule. The masked data term anchors the first sweep; later sweeps chain
/// on the previous result. Output is dense (every pixel valid).
DisparityMap wls_filter(const DisparityMap& disp, const GrayImage& guide, const WlsParams& params,
                        int threads = 1);

/// Replace each invalid pixel with the nearest valid value scanning left along
/// its row, else right; rows with no valid pixel copy from the nearest
/// non-empty row in the same column (upper row wins ties). Deterministic.
DisparityMap fill_invalid(const DisparityMap& disp);

}  // namespace sbv
