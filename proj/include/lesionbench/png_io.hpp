#pragma once

#include <string>

#include "lesionbench/core.hpp"

namespace lesionbench {

// Decodes an 8-bit-convertible PNG into a BinaryMask: gray value >= 128 is
// foreground. Gray (any bit depth) and palette/RGB(A) images whose channels
// agree per pixel are accepted; anything else is UnsupportedFormat. Corrupt
// or unreadable files raise DecodeError.
BinaryMask decode_mask_png(const std::string& path);

// Serializes a mask as an 8-bit grayscale PNG (0/255) using stored-block
// deflate, so the emitted bytes depend only on the mask contents -- never on
// the zlib version or platform. Generated fixtures rely on this.
std::string encode_mask_png(const BinaryMask& mask);
void write_mask_png(const std::string& path, const BinaryMask& mask);

// Raw 8-bit encoders over the same stored-deflate machinery (grayscale and
// RGB); the mask writer sits on the first, fixtures use both.
std::string encode_gray_png(int width, int height,
                            const std::vector<std::uint8_t>& gray);
std::string encode_rgb_png(int width, int height,
                           const std::vector<std::uint8_t>& rgb);

}  // namespace lesionbench
