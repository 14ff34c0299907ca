#include "scanet/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace scanet::image {

cv::Mat load_bgr(const std::string& path) {
  cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
  check_data(!img.empty(), "image: cannot read " + path);
  return img;
}

cv::Mat crop_resize(const cv::Mat& img, const CropWindow& win) {
  check(!img.empty(), "crop_resize: empty image");
  check(img.type() == CV_8UC3, "crop_resize: expected 8UC3 image");

  // integer source rect, clamped to the image
  const int x0 = static_cast<int>(std::floor(win.x0()));
  const int y0 = static_cast<int>(std::floor(win.y0()));
  const int side = std::max(1, static_cast<int>(std::lround(win.side)));
  const int vx0 = std::max(0, x0);
  const int vy0 = std::max(0, y0);
  const int vx1 = std::min(img.cols, x0 + side);
  const int vy1 = std::min(img.rows, y0 + side);

  cv::Scalar fill(0, 0, 0);
  if (vx1 > vx0 && vy1 > vy0)
    fill = cv::mean(img(cv::Rect(vx0, vy0, vx1 - vx0, vy1 - vy0)));

  cv::Mat patch(side, side, CV_8UC3,
                cv::Scalar(std::round(fill[0]), std::round(fill[1]), std::round(fill[2])));
  if (vx1 > vx0 && vy1 > vy0) {
    img(cv::Rect(vx0, vy0, vx1 - vx0, vy1 - vy0))
        .copyTo(patch(cv::Rect(vx0 - x0, vy0 - y0, vx1 - vx0, vy1 - vy0)));
  }

  cv::Mat out;
  cv::resize(patch, out, cv::Size(win.out_size, win.out_size), 0, 0, cv::INTER_LINEAR);
  return out;
}

nn::Mat patch_matrix(const cv::Mat& img, int stride) {
  check(!img.empty() && img.type() == CV_8UC3, "patch_matrix: expected 8UC3 image");
  check(stride > 0, "patch_matrix: stride must be positive");
  check(img.rows % stride == 0 && img.cols % stride == 0,
        "patch_matrix: image size " + std::to_string(img.cols) + "x" +
            std::to_string(img.rows) + " not divisible by stride " + std::to_string(stride));
  const int gh = img.rows / stride;
  const int gw = img.cols / stride;
  nn::Mat m(gh * gw, stride * stride * 3);
  for (int py = 0; py < gh; ++py) {
    for (int px = 0; px < gw; ++px) {
      const int row = py * gw + px;
      int col = 0;
      for (int dy = 0; dy < stride; ++dy) {
        const auto* p = img.ptr<cv::Vec3b>(py * stride + dy);
        for (int dx = 0; dx < stride; ++dx) {
          const cv::Vec3b& v = p[px * stride + dx];
          m(row, col++) = v[0] / 127.5 - 1.0;
          m(row, col++) = v[1] / 127.5 - 1.0;
          m(row, col++) = v[2] / 127.5 - 1.0;
        }
      }
    }
  }
  return m;
}

}  // namespace scanet::image
