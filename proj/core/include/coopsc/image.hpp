#ifndef COOPSC_IMAGE_HPP
#define COOPSC_IMAGE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace coopsc::img {

// Planar C x H x W image, values in [0,1], index (c*H + y)*W + x.
struct Image {
  int c = 0, h = 0, w = 0;
  Eigen::VectorXd data;

  Image() = default;
  Image(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), data(Eigen::VectorXd::Zero(static_cast<long>(c_) * h_ * w_)) {}

  double& at(int ch, int y, int x) { return data[(static_cast<long>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const {
    return data[(static_cast<long>(ch) * h + y) * w + x];
  }
  long pixels() const { return static_cast<long>(c) * h * w; }
};

// JPEG via libjpeg, in memory. encode uses 4:4:4 sampling (no chroma
// subsampling). decode returns false on any corrupt stream instead of
// aborting.
std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality);
bool decode_jpeg(const std::vector<std::uint8_t>& bytes, Image* out);

bool has_jpeg_magic(const std::vector<std::uint8_t>& bytes);

// Binary PPM (P6), 8-bit.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// Loads .ppm or .jpg/.jpeg by extension; throws ParseError otherwise.
Image read_image(const std::string& path);

Image resize_bilinear(const Image& image, int out_h, int out_w);
// Scale to cover then center-crop to exactly out_h x out_w.
Image resize_cover_crop(const Image& image, int out_h, int out_w);

double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

}  // namespace coopsc::img

#endif
