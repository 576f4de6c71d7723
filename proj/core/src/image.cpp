#include "coopsc/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>

#include <jpeglib.h>

#include "coopsc/errors.hpp"

namespace coopsc::img {

namespace {

std::uint8_t to_byte(double v) {
  const double x = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(x));
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_trampoline(j_common_ptr cinfo) {
  JpegErrorMgr* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality) {
  if (image.c != 3 && image.c != 1) {
    throw ShapeError("encode_jpeg: 1- or 3-channel images only");
  }
  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_trampoline;

  unsigned char* buf = nullptr;
  unsigned long buf_size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (buf) free(buf);
    throw ParseError("encode_jpeg: libjpeg failure");
  }

  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buf, &buf_size);
  cinfo.image_width = static_cast<JDIMENSION>(image.w);
  cinfo.image_height = static_cast<JDIMENSION>(image.h);
  cinfo.input_components = image.c;
  cinfo.in_color_space = image.c == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  // 4:4:4 keeps all chroma detail; symbol budgets assume full sampling.
  for (int i = 0; i < cinfo.num_components; ++i) {
    cinfo.comp_info[i].h_samp_factor = 1;
    cinfo.comp_info[i].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);

  std::vector<JSAMPLE> row(static_cast<std::size_t>(image.w) * image.c);
  while (cinfo.next_scanline < cinfo.image_height) {
    const int y = static_cast<int>(cinfo.next_scanline);
    for (int x = 0; x < image.w; ++x) {
      for (int ch = 0; ch < image.c; ++ch) {
        row[static_cast<std::size_t>(x) * image.c + ch] = to_byte(image.at(ch, y, x));
      }
    }
    JSAMPROW rows[1] = {row.data()};
    jpeg_write_scanlines(&cinfo, rows, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<std::uint8_t> out(buf, buf + buf_size);
  free(buf);
  return out;
}

bool decode_jpeg(const std::vector<std::uint8_t>& bytes, Image* out) {
  if (bytes.size() < 4) return false;
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_trampoline;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  const int c = cinfo.output_components;
  if (c != 1 && c != 3) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  Image img(c, h, w);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(w) * c);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        img.at(ch, y, x) = row[static_cast<std::size_t>(x) * c + ch] / 255.0;
      }
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  *out = std::move(img);
  return true;
}

bool has_jpeg_magic(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

void write_ppm(const std::string& path, const Image& image) {
  if (image.c != 3) throw ShapeError("write_ppm: 3-channel images only");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("write_ppm: cannot open " + path);
  out << "P6\n" << image.w << " " << image.h << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.w) * 3);
  for (int y = 0; y < image.h; ++y) {
    for (int x = 0; x < image.w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        row[static_cast<std::size_t>(x) * 3 + ch] = to_byte(image.at(ch, y, x));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("read_ppm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw ParseError("read_ppm: unsupported PPM in " + path);
  }
  in.get();  // single whitespace after header
  Image img(3, h, w);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw ParseError("read_ppm: truncated file " + path);
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        img.at(ch, y, x) = row[static_cast<std::size_t>(x) * 3 + ch] / 255.0;
      }
    }
  }
  return img;
}

Image read_image(const std::string& path) {
  auto ends_with = [&path](const char* suf) {
    const std::string s(suf);
    return path.size() >= s.size() &&
           std::equal(s.rbegin(), s.rend(), path.rbegin(), [](char a, char b) {
             return std::tolower(a) == std::tolower(b);
           });
  };
  if (ends_with(".ppm")) return read_ppm(path);
  if (ends_with(".jpg") || ends_with(".jpeg")) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("read_image: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    Image img;
    if (!decode_jpeg(bytes, &img)) throw ParseError("read_image: corrupt JPEG " + path);
    return img;
  }
  throw ParseError("read_image: unsupported extension in " + path);
}

Image resize_bilinear(const Image& image, int out_h, int out_w) {
  Image out(image.c, out_h, out_w);
  const double sy = static_cast<double>(image.h) / out_h;
  const double sx = static_cast<double>(image.w) / out_w;
  for (int ch = 0; ch < image.c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      const double fy = std::min((y + 0.5) * sy - 0.5, image.h - 1.0);
      const int y0 = std::max(0, static_cast<int>(std::floor(fy)));
      const int y1 = std::min(image.h - 1, y0 + 1);
      const double wy = std::clamp(fy - y0, 0.0, 1.0);
      for (int x = 0; x < out_w; ++x) {
        const double fx = std::min((x + 0.5) * sx - 0.5, image.w - 1.0);
        const int x0 = std::max(0, static_cast<int>(std::floor(fx)));
        const int x1 = std::min(image.w - 1, x0 + 1);
        const double wx = std::clamp(fx - x0, 0.0, 1.0);
        out.at(ch, y, x) = (1 - wy) * ((1 - wx) * image.at(ch, y0, x0) +
                                       wx * image.at(ch, y0, x1)) +
                           wy * ((1 - wx) * image.at(ch, y1, x0) +
                                 wx * image.at(ch, y1, x1));
      }
    }
  }
  return out;
}

Image resize_cover_crop(const Image& image, int out_h, int out_w) {
  const double scale = std::max(static_cast<double>(out_h) / image.h,
                                static_cast<double>(out_w) / image.w);
  const int rh = std::max(out_h, static_cast<int>(std::lround(image.h * scale)));
  const int rw = std::max(out_w, static_cast<int>(std::lround(image.w * scale)));
  Image resized = resize_bilinear(image, rh, rw);
  Image out(image.c, out_h, out_w);
  const int oy = (rh - out_h) / 2;
  const int ox = (rw - out_w) / 2;
  for (int ch = 0; ch < image.c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        out.at(ch, y, x) = resized.at(ch, y + oy, x + ox);
      }
    }
  }
  return out;
}

double mse(const Image& a, const Image& b) {
  if (a.c != b.c || a.h != b.h || a.w != b.w) throw ShapeError("mse: image shapes differ");
  return (a.data - b.data).squaredNorm() / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace coopsc::img
