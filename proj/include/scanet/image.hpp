#pragma once

#include <opencv2/core.hpp>
#include <string>

#include "scanet/boxgeom.hpp"
#include "scanet/nn/graph.hpp"

namespace scanet::image {

cv::Mat load_bgr(const std::string& path);  // 8UC3, throws DataError

// Extracts the window from the image and resamples it to out_size x out_size.
// Regions outside the image are filled with the per-channel mean of the part
// of the window that is inside.
cv::Mat crop_resize(const cv::Mat& img, const CropWindow& win);

// Flattens an image into patch rows for embedding: (h/S * w/S, S*S*3)
// with row index = py * (w/S) + px and pixel values mapped to [-1, 1].
// Throws when the image size is not divisible by the stride.
nn::Mat patch_matrix(const cv::Mat& img, int stride);

}  // namespace scanet::image
