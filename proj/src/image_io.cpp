#include "vistra/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "vistra/error.hpp"

namespace vistra {

namespace {

cv::Mat to_mat(const Image& img) {
    cv::Mat m(img.height, img.width, CV_32FC3);
    for (int y = 0; y < img.height; ++y) {
        auto* row = m.ptr<cv::Vec3f>(y);
        for (int x = 0; x < img.width; ++x)
            row[x] = {img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
    }
    return m;
}

Image from_mat(const cv::Mat& m) {
    Image img;
    img.height = m.rows;
    img.width = m.cols;
    img.rgb.resize(static_cast<std::size_t>(m.rows) * m.cols * 3);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3f>(y);
        for (int x = 0; x < m.cols; ++x) {
            img.at(y, x, 0) = row[x][0];
            img.at(y, x, 1) = row[x][1];
            img.at(y, x, 2) = row[x][2];
        }
    }
    return img;
}

}  // namespace

Image decode_image(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot decode image file '" + path + "'");
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    cv::Mat f;
    rgb.convertTo(f, CV_32FC3);
    return from_mat(f);
}

Image resize_image(const Image& img, int height, int width) {
    if (img.height == height && img.width == width) return img;
    cv::Mat src = to_mat(img);
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return from_mat(dst);
}

void flip_horizontal(Image& img) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width / 2; ++x)
            for (int c = 0; c < 3; ++c)
                std::swap(img.at(y, x, c), img.at(y, img.width - 1 - x, c));
}

void warp_affine(Image& img, double rotation_deg, double shift_x_frac, double shift_y_frac,
                 double zoom) {
    cv::Mat src = to_mat(img);
    const cv::Point2f center(static_cast<float>(img.width) / 2.0f,
                             static_cast<float>(img.height) / 2.0f);
    cv::Mat m = cv::getRotationMatrix2D(center, rotation_deg, zoom);
    m.at<double>(0, 2) += shift_x_frac * img.width;
    m.at<double>(1, 2) += shift_y_frac * img.height;
    cv::Mat dst;
    cv::warpAffine(src, dst, m, src.size(), cv::INTER_LINEAR, cv::BORDER_REFLECT_101);
    img = from_mat(dst);
}

bool write_png(const std::string& path, const Image& img) {
    cv::Mat f = to_mat(img);
    cv::Mat u8, bgr;
    f.convertTo(u8, CV_8UC3);
    cv::cvtColor(u8, bgr, cv::COLOR_RGB2BGR);
    return cv::imwrite(path, bgr);
}

}  // namespace vistra
