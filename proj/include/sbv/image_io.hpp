#pragma once

#include <string>

#include "sbv/image.hpp"

namespace sbv {

/// Load a grayscale image from a PGM (P5) or PNG file; the format is sniffed
/// from the magic bytes. Color PNG converts by luma = round(0.299R + 0.587G + 0.114B);
/// 8-bit gray inputs decode bit-exactly. 16-bit inputs are rejected.
GrayImage load_image(const std::string& path);

/// Decode the binary PGM (P5) format specifically.
GrayImage load_pgm(const std::string& path);

/// Write binary PGM (P5), maxval 255.
void save_pgm(const GrayImage& img, const std::string& path);

/// Write a float raster as grayscale PFM ("Pf", little-endian, bottom-up rows).
/// Invalid pixels are stored as negative infinity.
void save_float_image(const FloatImage& img, const std::string& path);

/// Read a grayscale PFM written by save_float_image (either endianness accepted).
/// Non-finite entries decode to the canonical invalid sentinel.
FloatImage load_float_image(const std::string& path);

/// Map depth linearly from [z_min, z_max] onto [0, 255] for visualization.
/// Invalid pixels render as 0.
GrayImage depth_preview(const DepthMap& depth, double z_min, double z_max);

/// Separable Gaussian blur with kernel radius ceil(3*sigma), the sampled kernel
/// explicitly normalized, borders edge-replicated. sigma = 0 returns the input
/// unchanged; results round to nearest and clamp to [0, 255].
GrayImage gaussian_smooth(const GrayImage& img, double sigma, int threads = 1);

}  // namespace sbv
