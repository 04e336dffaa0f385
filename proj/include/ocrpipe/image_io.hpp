#pragma once

#include <filesystem>
#include <optional>

#include "ocrpipe/lineimg.hpp"

namespace ocrpipe {

/// Reads an 8-bit single-channel PNG or PGM (P2/P5). Colour and 16-bit PNGs
/// are reduced to 8-bit gray. A file holding only 0/255 is still loaded as
/// grayscale; depth is a processing state, not a file property.
LineImage read_image(const std::filesystem::path& path);

/// Writes PNG or PGM (binary P5) depending on the extension.
void write_image(const LineImage& img, const std::filesystem::path& path);
void write_png(const LineImage& img, const std::filesystem::path& path);
void write_pgm(const LineImage& img, const std::filesystem::path& path);

/// Reads a {"slope": ..., "intercept": ...} sidecar.
Baseline read_baseline(const std::filesystem::path& path);
void write_baseline(const Baseline& baseline, const std::filesystem::path& path);

/// Whether the extension is one read_image understands.
bool is_image_file(const std::filesystem::path& path);

}  // namespace ocrpipe
