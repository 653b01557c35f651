#include "mfid/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>

#include "mfid/binio.hpp"
#include "mfid/errors.hpp"

namespace mfid {

void write_image_raw(const Image& img, const std::filesystem::path& path) {
    img.validate();
    BinWriter w;
    w.magic("MFID");
    w.u32(static_cast<uint32_t>(img.height));
    w.u32(static_cast<uint32_t>(img.width));
    w.u32(static_cast<uint32_t>(img.channels));
    w.f32_array(img.data.data(), img.data.size());
    w.save(path);
}

Image read_image_raw(const std::filesystem::path& path) {
    BinReader r = BinReader::load(path);
    r.expect_magic("MFID");
    Image img;
    img.height = static_cast<int>(r.u32());
    img.width = static_cast<int>(r.u32());
    img.channels = static_cast<int>(r.u32());
    if (img.height <= 0 || img.width <= 0 || img.height > 1 << 14 || img.width > 1 << 14 ||
        (img.channels != 1 && img.channels != 3))
        throw IoError("raw image header invalid: " + path.string());
    img.data.resize(static_cast<size_t>(img.height) * img.width * img.channels);
    r.f32_array(img.data.data(), img.data.size());
    if (!r.exhausted()) throw IoError("raw image has trailing bytes: " + path.string());
    img.validate();
    return img;
}

namespace {

void png_chunk(std::vector<uint8_t>& out, const char type[4], const uint8_t* data, size_t n) {
    auto be32 = [&](uint32_t v) {
        out.push_back(static_cast<uint8_t>(v >> 24));
        out.push_back(static_cast<uint8_t>(v >> 16));
        out.push_back(static_cast<uint8_t>(v >> 8));
        out.push_back(static_cast<uint8_t>(v));
    };
    be32(static_cast<uint32_t>(n));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (n) out.insert(out.end(), data, data + n);
    const uint32_t crc = crc32_of(out.data() + start, out.size() - start);
    be32(crc);
}

}  // namespace

void write_image_png(const Image& img, const std::filesystem::path& path) {
    img.validate();
    const int bpp = img.channels;
    std::vector<uint8_t> scanlines;
    scanlines.reserve(static_cast<size_t>(img.height) * (1 + static_cast<size_t>(img.width) * bpp));
    for (int y = 0; y < img.height; ++y) {
        scanlines.push_back(0);  // filter: none
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                scanlines.push_back(static_cast<uint8_t>(
                    std::lround(static_cast<double>(img.at(y, x, c)) * 255.0)));
    }

    uLongf comp_len = compressBound(static_cast<uLong>(scanlines.size()));
    std::vector<uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, scanlines.data(),
                  static_cast<uLong>(scanlines.size()), 6) != Z_OK)
        throw IoError("PNG deflate failed");
    comp.resize(comp_len);

    std::vector<uint8_t> out;
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    out.insert(out.end(), sig, sig + 8);

    uint8_t ihdr[13];
    auto put_be32 = [](uint8_t* p, uint32_t v) {
        p[0] = static_cast<uint8_t>(v >> 24);
        p[1] = static_cast<uint8_t>(v >> 16);
        p[2] = static_cast<uint8_t>(v >> 8);
        p[3] = static_cast<uint8_t>(v);
    };
    put_be32(ihdr, static_cast<uint32_t>(img.width));
    put_be32(ihdr + 4, static_cast<uint32_t>(img.height));
    ihdr[8] = 8;                                   // bit depth
    ihdr[9] = img.channels == 3 ? 2 : 0;           // color type
    ihdr[10] = ihdr[11] = ihdr[12] = 0;            // deflate, none, no interlace
    png_chunk(out, "IHDR", ihdr, sizeof(ihdr));
    png_chunk(out, "IDAT", comp.data(), comp.size());
    png_chunk(out, "IEND", nullptr, 0);

    BinWriter w;
    w.bytes(out.data(), out.size());
    w.save(path);
}

}  // namespace mfid
