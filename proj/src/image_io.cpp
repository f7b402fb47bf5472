#include "histoconv/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace histoconv {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open file: " + path);
  return f;
}

// libjpeg's default error handler exits the process; reroute it to longjmp so
// a bad file becomes a regular exception.
struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf env;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->env, 1);
}

ImageU8 read_jpeg(const std::string& path) {
  FilePtr f = open_file(path, "rb");

  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.env)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error("cannot decode JPEG " + path + ": " + err.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  ImageU8 img = make_image_u8(cinfo.output_height, cinfo.output_width, 3);
  const std::size_t row_bytes = std::size_t(img.width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + std::size_t(cinfo.output_scanline) * row_bytes;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

ImageU8 read_png_file(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw Error("cannot decode PNG " + path + ": " + png.message);

  png.format = PNG_FORMAT_RGB;
  ImageU8 img = make_image_u8(png.height, png.width, 3);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    std::string message = png.message;
    png_image_free(&png);
    throw Error("cannot decode PNG " + path + ": " + message);
  }
  return img;
}

}  // namespace

ImageU8 make_image_u8(std::int64_t height, std::int64_t width, std::int64_t channels) {
  if (height < 1 || width < 1 || (channels != 1 && channels != 3))
    throw Error("invalid image dimensions " + std::to_string(height) + "x" +
                std::to_string(width) + "x" + std::to_string(channels));
  ImageU8 img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.pixels.assign(std::size_t(height * width * channels), 0);
  return img;
}

ImageU8 read_image_rgb8(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char magic[2] = {0, 0};
  if (std::fread(magic, 1, 2, f.get()) != 2)
    throw Error("cannot decode image (file too short): " + path);
  f.reset();

  if (magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg(path);
  if (magic[0] == 0x89 && magic[1] == 0x50) return read_png_file(path);
  throw Error("unsupported image format (not JPEG or PNG): " + path);
}

void write_png(const std::string& path, const ImageU8& img) {
  if (img.height < 1 || img.width < 1 || (img.channels != 1 && img.channels != 3))
    throw Error("write_png: invalid image for " + path);

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    throw Error("cannot write PNG " + path + ": " + png.message);
}

TensorF load_image(const std::string& path) {
  const ImageU8 img = read_image_rgb8(path);
  TensorF t({img.height, img.width, 3});
  const float scale = 1.0f / 255.0f;
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = float(img.pixels[std::size_t(i)]) * scale;
  return t;
}

ImageU8 to_image_u8(const TensorF& img) {
  if (img.rank() != 3 || img.dim(2) != 3)
    throw Error("to_image_u8 expects [h,w,3], got " + shape_str(img.shape()));
  ImageU8 out = make_image_u8(img.dim(0), img.dim(1), 3);
  for (std::int64_t i = 0; i < img.size(); ++i) {
    const float v = std::min(1.0f, std::max(0.0f, img[i]));
    out.pixels[std::size_t(i)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

}  // namespace histoconv
