#pragma once

#include <string>

#include "vistra/data.hpp"

namespace vistra {

// Thin wrappers over the image codec/geometry backend (OpenCV).

// Decodes to float RGB in [0,255]. Throws DataError naming the path when the
// file cannot be decoded.
Image decode_image(const std::string& path);

// Bilinear resize; returns the input unchanged when already the target size.
Image resize_image(const Image& img, int height, int width);

// Affine warp helpers used by the basic augmentation plan.
void flip_horizontal(Image& img);
void warp_affine(Image& img, double rotation_deg, double shift_x_frac, double shift_y_frac,
                 double zoom);

bool write_png(const std::string& path, const Image& img);

}  // namespace vistra
