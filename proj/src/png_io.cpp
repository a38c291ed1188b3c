#include "lesionbench/png_io.hpp"

#include <png.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "lesionbench/errors.hpp"

namespace lesionbench {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Failures surface as BenchError; keep libpng off stderr.
void quiet_png_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void quiet_png_warning(png_structp, png_const_charp) {}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                 quiet_png_error, quiet_png_warning);
    if (png) info = png_create_info_struct(png);
  }
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

}  // namespace

BinaryMask decode_mask_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) {
    throw BenchError(errc::kDecodeError, "cannot open mask file: " + path);
  }
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw BenchError(errc::kUnsupportedFormat, path + ": not a PNG file");
  }

  PngReader reader;
  if (!reader.png || !reader.info) {
    throw BenchError(errc::kDecodeError, path + ": libpng allocation failed");
  }

  // All C++ objects used below are declared before the setjmp target so a
  // longjmp cannot skip a live constructor frame.
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0;
  bool decode_failed = false;

  if (setjmp(png_jmpbuf(reader.png))) {
    decode_failed = true;
  } else {
    png_init_io(reader.png, fp.get());
    png_set_sig_bytes(reader.png, 8);
    png_read_info(reader.png, reader.info);

    width = png_get_image_width(reader.png, reader.info);
    height = png_get_image_height(reader.png, reader.info);
    const int color_type = png_get_color_type(reader.png, reader.info);
    const int bit_depth = png_get_bit_depth(reader.png, reader.info);

    if (bit_depth == 16) png_set_strip_16(reader.png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(reader.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(reader.png);
    }
    if (png_get_valid(reader.png, reader.info, PNG_INFO_tRNS)) {
      png_set_tRNS_to_alpha(reader.png);
    }
    png_set_interlace_handling(reader.png);
    png_read_update_info(reader.png, reader.info);

    channels = png_get_channels(reader.png, reader.info);
    const std::size_t rowbytes = png_get_rowbytes(reader.png, reader.info);
    pixels.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
      rows[y] = pixels.data() + static_cast<std::size_t>(y) * rowbytes;
    }
    png_read_image(reader.png, rows.data());
    png_read_end(reader.png, nullptr);
  }

  if (decode_failed) {
    throw BenchError(errc::kDecodeError, path + ": corrupt PNG stream");
  }
  if (width == 0 || height == 0) {
    throw BenchError(errc::kDecodeError, path + ": empty image");
  }

  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
  BinaryMask mask = BinaryMask::filled(static_cast<int>(width),
                                       static_cast<int>(height), false);
  for (png_uint_32 y = 0; y < height; ++y) {
    const unsigned char* row = pixels.data() + static_cast<std::size_t>(y) * rowbytes;
    for (png_uint_32 x = 0; x < width; ++x) {
      const unsigned char* px = row + static_cast<std::size_t>(x) * channels;
      unsigned char gray = px[0];
      if (channels >= 3 && (px[0] != px[1] || px[0] != px[2])) {
        throw BenchError(errc::kUnsupportedFormat,
                         path + ": color pixel is not gray-convertible");
      }
      // Binarization contract: value >= 128 is foreground.
      mask.set(static_cast<int>(x), static_cast<int>(y), gray >= 128);
    }
  }
  return mask;
}

namespace {

std::uint32_t crc32_of(const unsigned char* data, std::size_t len,
                       std::uint32_t crc = 0xFFFFFFFFu) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) {
        c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      }
      t[n] = c;
    }
    return t;
  }();
  for (std::size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc;
}

std::uint32_t adler32_of(const unsigned char* data, std::size_t len) {
  std::uint32_t a = 1, b = 0;
  for (std::size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void put_u32be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>(v & 0xFF));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.append(type, 4);
  out.append(data);
  const std::uint32_t crc =
      crc32_of(reinterpret_cast<const unsigned char*>(out.data() + crc_start),
               out.size() - crc_start) ^ 0xFFFFFFFFu;
  put_u32be(out, crc);
}

}  // namespace

namespace {

// zlib stream with stored (uncompressed) deflate blocks: deterministic
// bytes regardless of any compressor implementation.
std::string encode_png_impl(int width, int height, int channels,
                            const std::vector<std::uint8_t>& pixels) {
  if (width < 1 || height < 1 ||
      pixels.size() != static_cast<std::size_t>(width) * height * channels) {
    throw BenchError(errc::kDomainError, "cannot encode malformed pixel data");
  }

  // Raw scanlines: filter byte 0 then the row's samples.
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(height) * (rowbytes + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = pixels.data() + static_cast<std::size_t>(y) * rowbytes;
    raw.insert(raw.end(), row, row + rowbytes);
  }

  std::string idat;
  idat.push_back(0x78);
  idat.push_back(0x01);
  std::size_t off = 0;
  while (off < raw.size()) {
    const std::size_t block = std::min<std::size_t>(65535, raw.size() - off);
    const bool final = off + block == raw.size();
    idat.push_back(final ? 1 : 0);
    idat.push_back(static_cast<char>(block & 0xFF));
    idat.push_back(static_cast<char>((block >> 8) & 0xFF));
    idat.push_back(static_cast<char>(~block & 0xFF));
    idat.push_back(static_cast<char>((~block >> 8) & 0xFF));
    idat.append(reinterpret_cast<const char*>(raw.data() + off), block);
    off += block;
  }
  put_u32be(idat, adler32_of(raw.data(), raw.size()));

  std::string ihdr;
  put_u32be(ihdr, static_cast<std::uint32_t>(width));
  put_u32be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);                           // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);       // grayscale or RGB
  ihdr.push_back(0);                           // compression
  ihdr.push_back(0);                           // filter
  ihdr.push_back(0);                           // no interlace

  std::string out("\x89PNG\r\n\x1a\n", 8);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", "");
  return out;
}

}  // namespace

std::string encode_gray_png(int width, int height,
                            const std::vector<std::uint8_t>& gray) {
  return encode_png_impl(width, height, 1, gray);
}

std::string encode_rgb_png(int width, int height,
                           const std::vector<std::uint8_t>& rgb) {
  return encode_png_impl(width, height, 3, rgb);
}

std::string encode_mask_png(const BinaryMask& mask) {
  if (mask.width < 1 || mask.height < 1 ||
      mask.bits.size() != mask.pixel_count()) {
    throw BenchError(errc::kDomainError, "cannot encode a malformed mask");
  }
  std::vector<std::uint8_t> gray(mask.pixel_count());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = mask.bits[i] ? 255 : 0;
  }
  return encode_gray_png(mask.width, mask.height, gray);
}

void write_mask_png(const std::string& path, const BinaryMask& mask) {
  const std::string bytes = encode_mask_png(mask);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw BenchError(errc::kIoError, "cannot write mask file: " + path);
  }
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    throw BenchError(errc::kIoError, "short write on mask file: " + path);
  }
}

}  // namespace lesionbench
