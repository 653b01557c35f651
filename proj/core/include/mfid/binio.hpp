#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfid {

// Little-endian binary buffer builder / reader used by the on-disk formats
// (MFID, MFWT, MFDM, MFCK). All payloads carry a trailing CRC32 except the
// raw image format, whose integrity is covered by its fixed length.

class BinWriter {
public:
    void magic(const char tag[4]);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(float v);
    void f32_array(const float* p, size_t n);
    void bytes(const void* p, size_t n);
    // Appends CRC32 (zlib polynomial) of everything written so far.
    void crc32_trailer();

    const std::vector<uint8_t>& buffer() const { return buf_; }
    // Write-temp-then-rename; parent directories are created.
    void save(const std::filesystem::path& path) const;

private:
    std::vector<uint8_t> buf_;
};

class BinReader {
public:
    explicit BinReader(std::vector<uint8_t> data) : buf_(std::move(data)) {}
    static BinReader load(const std::filesystem::path& path);

    void expect_magic(const char tag[4]);
    uint32_t u32();
    uint64_t u64();
    float f32();
    void f32_array(float* p, size_t n);
    void raw(void* p, size_t n);
    std::string str(size_t n);
    // Verifies the trailing CRC32 over all preceding bytes; call last.
    void check_crc32_trailer();
    bool exhausted() const { return pos_ == buf_.size(); }

private:
    void need(size_t n) const;
    std::vector<uint8_t> buf_;
    size_t pos_ = 0;
};

uint32_t crc32_of(const void* data, size_t n);

}  // namespace mfid
