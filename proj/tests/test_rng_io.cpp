#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mfid/binio.hpp"
#include "mfid/image_io.hpp"
#include "mfid/rng.hpp"
#include "support.hpp"

using namespace mfid;

TEST_CASE("rng: equal seeds give bit-identical sequences") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(12345), d(12346);
    int diff = 0;
    for (int i = 0; i < 100; ++i) diff += c.next_u64() != d.next_u64();
    CHECK(diff == 100);
}

TEST_CASE("rng: splits are independent of parent draw position") {
    Rng a(7), b(7);
    (void)b.next_u64();
    (void)b.next_u64();
    Rng sa = a.split("stream", 3);
    Rng sb = b.split("stream", 3);
    for (int i = 0; i < 32; ++i) CHECK(sa.next_u64() == sb.next_u64());

    Rng other_tag = a.split("other", 3);
    Rng other_idx = a.split("stream", 4);
    CHECK(a.split("stream", 3).next_u64() != other_tag.next_u64());
    CHECK(a.split("stream", 3).next_u64() != other_idx.next_u64());
}

TEST_CASE("rng: uniform doubles in [0,1), ints in bounds, state restore") {
    Rng r(99);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const int64_t k = r.next_int(-3, 5);
        CHECK(k >= -3);
        CHECK(k <= 5);
    }
    const uint64_t key = r.key(), counter = r.counter();
    const uint64_t expect = r.next_u64();
    Rng restored = Rng::restore(key, counter);
    CHECK(restored.next_u64() == expect);
}

TEST_CASE("rng: normal draws have sane moments") {
    Rng r(5);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.next_normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("binio round-trip with CRC trailer") {
    const auto dir = test::scratch_dir("binio");
    BinWriter w;
    w.magic("TEST");
    w.u32(42);
    w.u64(0xdeadbeefcafef00dull);
    w.f32(1.5f);
    w.crc32_trailer();
    w.save(dir / "x.bin");

    BinReader r = BinReader::load(dir / "x.bin");
    r.expect_magic("TEST");
    CHECK(r.u32() == 42);
    CHECK(r.u64() == 0xdeadbeefcafef00dull);
    CHECK(r.f32() == 1.5f);
    CHECK_NOTHROW(r.check_crc32_trailer());
    CHECK(r.exhausted());

    // corrupt one byte -> CRC failure
    auto bytes = w.buffer();
    bytes[5] ^= 0xff;
    BinReader bad(bytes);
    bad.expect_magic("TEST");
    (void)bad.u32();
    (void)bad.u64();
    (void)bad.f32();
    CHECK_THROWS_AS(bad.check_crc32_trailer(), IoError);
}

TEST_CASE("raw image format round-trips exactly") {
    const auto dir = test::scratch_dir("rawimg");
    Rng rng(4);
    Image img = Image::zeros(37, 21, 3);
    for (auto& v : img.data) v = rng.next_float();
    write_image_raw(img, dir / "img.mfid");
    const Image back = read_image_raw(dir / "img.mfid");
    CHECK(back.height == img.height);
    CHECK(back.width == img.width);
    CHECK(back.channels == img.channels);
    CHECK(back.data == img.data);  // bit-exact
}

TEST_CASE("png writer emits a decodable signature and fixed bytes") {
    const auto dir = test::scratch_dir("png");
    Image img = Image::zeros(9, 13, 3);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 13; ++x) img.at(y, x, 0) = static_cast<float>(x) / 12.f;
    write_image_png(img, dir / "a.png");
    write_image_png(img, dir / "b.png");

    auto read_sig = [](const std::filesystem::path& p) {
        BinReader r = BinReader::load(p);
        std::vector<uint8_t> sig(8);
        r.raw(sig.data(), 8);
        return sig;
    };
    const auto sig = read_sig(dir / "a.png");
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
    CHECK(std::filesystem::file_size(dir / "a.png") ==
          std::filesystem::file_size(dir / "b.png"));
}
