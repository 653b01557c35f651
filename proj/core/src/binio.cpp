#include "mfid/binio.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "mfid/errors.hpp"

namespace mfid {

uint32_t crc32_of(const void* data, size_t n) {
    return static_cast<uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void BinWriter::magic(const char tag[4]) { bytes(tag, 4); }

void BinWriter::u32(uint32_t v) {
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    bytes(b, 4);
}

void BinWriter::u64(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    bytes(b, 8);
}

void BinWriter::f32(float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    u32(u);
}

void BinWriter::f32_array(const float* p, size_t n) {
    for (size_t i = 0; i < n; ++i) f32(p[i]);
}

void BinWriter::bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
}

void BinWriter::crc32_trailer() { u32(crc32_of(buf_.data(), buf_.size())); }

void BinWriter::save(const std::filesystem::path& path) const {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out.write(reinterpret_cast<const char*>(buf_.data()),
                  static_cast<std::streamsize>(buf_.size()));
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

BinReader BinReader::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return BinReader(std::move(data));
}

void BinReader::need(size_t n) const {
    if (pos_ + n > buf_.size()) throw IoError("truncated binary payload");
}

void BinReader::expect_magic(const char tag[4]) {
    need(4);
    if (std::memcmp(buf_.data() + pos_, tag, 4) != 0)
        throw IoError(std::string("bad magic, expected ") + std::string(tag, 4));
    pos_ += 4;
}

uint32_t BinReader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

uint64_t BinReader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

float BinReader::f32() {
    const uint32_t u = u32();
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

void BinReader::f32_array(float* p, size_t n) {
    for (size_t i = 0; i < n; ++i) p[i] = f32();
}

void BinReader::raw(void* p, size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
}

std::string BinReader::str(size_t n) {
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
}

void BinReader::check_crc32_trailer() {
    if (pos_ + 4 > buf_.size()) throw IoError("missing CRC32 trailer");
    const uint32_t stored = crc32_of(buf_.data(), pos_);
    const uint32_t expect = u32();
    if (stored != expect) throw IoError("CRC32 mismatch");
}

}  // namespace mfid
