#pragma once

// Binary PPM (P6, RGB) and PGM (P5, grayscale) reader/writer, maxval 255.
// Byte b maps to b/255 on read; value v maps to round(v*255) on write, so
// write∘read∘write is byte-identical.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "greedypixel/error.hpp"
#include "greedypixel/image.hpp"

namespace greedypixel {

namespace detail {

// Reads the next header token, skipping whitespace and '#' comment lines.
inline std::string next_header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline int parse_header_int(std::istream& in, const char* what) {
  const std::string tok = next_header_token(in);
  if (tok.empty()) throw FormatError(std::string("missing ") + what + " in header");
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 0) throw FormatError("");
    return v;
  } catch (...) {
    throw FormatError(std::string("bad ") + what + " '" + tok + "' in header");
  }
}

}  // namespace detail

inline Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);

  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  int channels = 0;
  if (m0 == 'P' && m1 == '6') {
    channels = 3;
  } else if (m0 == 'P' && m1 == '5') {
    channels = 1;
  } else {
    throw FormatError("unsupported magic in " + path + " (want P5 or P6)");
  }

  const int width = detail::parse_header_int(in, "width");
  const int height = detail::parse_header_int(in, "height");
  const int maxval = detail::parse_header_int(in, "maxval");
  if (width < 1 || height < 1) throw FormatError("degenerate dimensions in " + path);
  if (maxval != 255) {
    throw FormatError("unsupported maxval " + std::to_string(maxval) + " in " + path);
  }
  // Exactly one whitespace byte separates the header from the payload;
  // parse_header_int already consumed it.

  const std::size_t n = static_cast<std::size_t>(channels) * height * width;
  std::vector<std::uint8_t> bytes(n);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError("truncated payload in " + path);
  }

  // Payload is pixel-interleaved; Image storage is planar.
  Shape shape{channels, height, width};
  std::vector<double> data(n);
  std::size_t i = 0;
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      for (int c = 0; c < channels; ++c) {
        data[(static_cast<std::size_t>(c) * height + h) * width + w] =
            static_cast<double>(bytes[i++]) / 255.0;
      }
    }
  }
  return Image(shape, std::move(data));
}

inline void write_image(const Image& img, const std::string& path) {
  const int channels = img.channels();
  if (channels != 1 && channels != 3) {
    throw FormatError("can only write 1-channel (PGM) or 3-channel (PPM) images");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");

  out << (channels == 3 ? "P6" : "P5") << "\n"
      << img.width() << " " << img.height() << "\n255\n";

  std::vector<std::uint8_t> bytes;
  bytes.reserve(img.data().size());
  for (int h = 0; h < img.height(); ++h) {
    for (int w = 0; w < img.width(); ++w) {
      for (int c = 0; c < channels; ++c) {
        bytes.push_back(static_cast<std::uint8_t>(std::lround(img.at(c, h, w) * 255.0)));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path);
}

}  // namespace greedypixel
